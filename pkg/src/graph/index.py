import logging
from datetime import datetime
from typing import Dict, List, Optional

import networkx as nx

from src.graph.utils import (
    COMMIT,
    DEVELOPER,
    FILE,
    ISSUE,
    add_min_edge,
    commit_node,
    developer_node,
    file_node,
    issue_node,
    new_diagnostics,
    node_kind,
)
from src.models.index import ActivityLog, FileAction, IssueEventKind, ServiceMap, WindowSpec
from src.utils.errors import ArgumentError, OutOfWindowError
from src.utils.index import format_utc

logger = logging.getLogger(__name__)


class ArtifactGraph:
    """Undirected developer/commit/issue/file graph with recency-weighted `distance` edges.

    The wrapped networkx graph is frozen once built.
    """

    def __init__(self, graph: nx.Graph, window: WindowSpec, scope: Optional[str] = None, diagnostics=None):
        self.graph = nx.freeze(graph)
        self.window = window
        self.scope = scope
        self.diagnostics: Dict[str, int] = dict(diagnostics or new_diagnostics())

    def nodes_of_kind(self, kind: str) -> List:
        return sorted((n for n in self.graph.nodes if node_kind(n) == kind), key=lambda n: str(n[1]))

    def developers(self) -> List[str]:
        return [n[1] for n in self.nodes_of_kind(DEVELOPER)]

    def files(self) -> List[str]:
        return [n[1] for n in self.nodes_of_kind(FILE)]

    def has_developer(self, developer: str) -> bool:
        return self.graph.has_node(developer_node(developer))

    def __len__(self) -> int:
        return self.graph.number_of_nodes()


def edge_distance(event_time: datetime, window: WindowSpec) -> float:
    """1 / (1 - days_passed / length_days): 1.0 at the window end, diverging towards its start."""
    days_passed = window.days_passed(event_time)
    if not 0.0 <= days_passed < window.length_days:
        raise OutOfWindowError(
            f"Event at {format_utc(event_time)} is outside window {window.label()} "
            f"({days_passed:.3f} days passed of {window.length_days})"
        )
    return 1.0 / (1.0 - days_passed / window.length_days)


def scope_to_service(log: ActivityLog, service_map: ServiceMap, service: str) -> ActivityLog:
    """Keep the service's changes and the issues linked to a kept commit."""
    if service not in service_map.services:
        raise ArgumentError(f"Unknown service {service!r}; known: {', '.join(service_map.services)}")

    commits = []
    for commit in log.commits:
        changes = tuple(c for c in commit.changes if service_map.resolve(c.path) == service)
        if not changes:
            continue
        commits.append(commit if len(changes) == len(commit.changes) else commit.model_copy(update={"changes": changes}))

    kept_shas = {c.sha for c in commits}
    linked_issues = {
        e.issue_id
        for e in log.issues
        if e.kind == IssueEventKind.COMMIT_LINKED and e.linked_sha in kept_shas
    }
    issues = tuple(e for e in log.issues if e.issue_id in linked_issues)
    developers = frozenset(c.author_email for c in commits) | frozenset(e.actor_email for e in issues)
    return ActivityLog(commits=tuple(commits), issues=issues, developers=developers)


def build_graph(log: ActivityLog, window: WindowSpec, scope: Optional[str] = None) -> ArtifactGraph:
    """
    * Commits in the window: developer-commit and commit-file edges at the commit's distance.
    * Issue events in the window: developer-issue edges at the event's distance.
    * commit_linked events whose commit is in the window: issue-commit edges.
    Parallel events between one node pair keep the minimum distance.
    """
    graph = nx.Graph()
    diagnostics = new_diagnostics()

    in_window_shas = set()
    for commit in log.commits:
        if not window.includes(commit.timestamp):
            diagnostics["out_of_window"] += 1
            continue
        in_window_shas.add(commit.sha)
        distance = edge_distance(commit.timestamp, window)
        c_node = commit_node(commit.sha)
        add_min_edge(graph, developer_node(commit.author_email), c_node, distance)
        for change in commit.changes:
            if change.action == FileAction.RENAME:
                diagnostics["renames"] += 1
            add_min_edge(graph, c_node, file_node(change.path), distance)

    for event in log.issues:
        if not window.includes(event.timestamp):
            diagnostics["out_of_window"] += 1
            continue
        distance = edge_distance(event.timestamp, window)
        i_node = issue_node(event.issue_id)
        add_min_edge(graph, developer_node(event.actor_email), i_node, distance)
        if event.kind == IssueEventKind.COMMIT_LINKED:
            if event.linked_sha in in_window_shas:
                add_min_edge(graph, i_node, commit_node(event.linked_sha), distance)
            else:
                diagnostics["dangling_links"] += 1

    if diagnostics["dangling_links"]:
        logger.warning(
            "%s: skipped %d issue links to commits outside the window or dataset",
            scope or "project",
            diagnostics["dangling_links"],
        )
    if diagnostics["renames"]:
        logger.info("%s: %d renames tracked as new file paths", scope or "project", diagnostics["renames"])

    logger.info(
        "Built %s graph for %s: %d nodes, %d edges",
        scope or "project",
        window.label(),
        graph.number_of_nodes(),
        graph.number_of_edges(),
    )
    return ArtifactGraph(graph, window, scope=scope, diagnostics=diagnostics)


def dump_graph(artifact_graph: ArtifactGraph) -> dict:
    """JSON-ready node and edge lists, sorted for stable diffs."""
    kind_order = {DEVELOPER: 0, COMMIT: 1, ISSUE: 2, FILE: 3}

    def node_key(node):
        return (kind_order[node[0]], str(node[1]))

    nodes = [{"kind": n[0], "id": n[1]} for n in sorted(artifact_graph.graph.nodes, key=node_key)]
    edges = []
    for u, v, data in artifact_graph.graph.edges(data=True):
        u, v = sorted((u, v), key=node_key)
        edges.append(
            {
                "source": {"kind": u[0], "id": u[1]},
                "target": {"kind": v[0], "id": v[1]},
                "distance": data["distance"],
            }
        )
    edges.sort(key=lambda e: (node_key((e["source"]["kind"], e["source"]["id"])), node_key((e["target"]["kind"], e["target"]["id"]))))
    return {
        "scope": artifact_graph.scope,
        "window": {"end": format_utc(artifact_graph.window.end), "length_days": artifact_graph.window.length_days},
        "diagnostics": artifact_graph.diagnostics,
        "nodes": nodes,
        "edges": edges,
    }

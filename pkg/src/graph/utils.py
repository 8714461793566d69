from typing import Dict, Hashable, Tuple

import networkx as nx

DEVELOPER = "developer"
COMMIT = "commit"
ISSUE = "issue"
FILE = "file"

Node = Tuple[str, Hashable]


def developer_node(developer: str) -> Node:
    return (DEVELOPER, developer)


def commit_node(sha: str) -> Node:
    return (COMMIT, sha)


def issue_node(issue_id: int) -> Node:
    return (ISSUE, issue_id)


def file_node(path: str) -> Node:
    return (FILE, path)


def node_kind(node: Node) -> str:
    return node[0]


def add_min_edge(graph: nx.Graph, u: Node, v: Node, distance: float) -> None:
    """Add an undirected edge, collapsing parallel events to the minimum distance."""
    if graph.has_edge(u, v):
        if distance < graph[u][v]["distance"]:
            graph[u][v]["distance"] = distance
    else:
        graph.add_edge(u, v, distance=distance)


def new_diagnostics() -> Dict[str, int]:
    return {"dangling_links": 0, "renames": 0, "out_of_window": 0}

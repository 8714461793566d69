import logging
from typing import Dict, List, Optional, Tuple

import igraph as ig
import networkx as nx

from src.graph.index import ArtifactGraph
from src.graph.utils import DEVELOPER, FILE, developer_node, node_kind
from src.keydev.utils import rank_scores
from src.models.index import AnalysisConfig, KeyDevMetric, KeyDevScore, ReachabilityResult
from src.utils.errors import ArgumentError, EmptyDomainError

logger = logging.getLogger(__name__)


def _without_other_developers(source):
    """Edge weight that hides every edge touching a developer other than `source`."""

    def weight(u, v, data):
        if node_kind(u) == DEVELOPER and u != source:
            return None
        if node_kind(v) == DEVELOPER and v != source:
            return None
        return data["distance"]

    return weight


def reachable_files(graph: ArtifactGraph, developer: str, threshold: float) -> ReachabilityResult:
    """Files within `threshold` of the developer on paths that avoid every other developer."""
    source = developer_node(developer)
    if not graph.graph.has_node(source):
        raise ArgumentError(f"Developer {developer!r} is not in the {graph.scope or 'project'} graph")

    lengths = nx.single_source_dijkstra_path_length(
        graph.graph, source, cutoff=threshold, weight=_without_other_developers(source)
    )
    files = frozenset(node[1] for node, length in lengths.items() if node_kind(node) == FILE and length <= threshold)
    return ReachabilityResult(developer=developer, reachable_files=files)


def reachability_index(graph: ArtifactGraph, threshold: float) -> Dict[str, frozenset]:
    return {
        developer: reachable_files(graph, developer, threshold).reachable_files
        for developer in graph.developers()
    }


def jack_scores(graph: ArtifactGraph, config: AnalysisConfig, index: Dict[str, frozenset] | None = None) -> List[KeyDevScore]:
    """File coverage: reachable files over all files in the graph."""
    total_files = len(graph.files())
    if total_files == 0:
        raise EmptyDomainError(f"No files in the {graph.scope or 'project'} graph")
    index = index if index is not None else reachability_index(graph, config.distance_threshold)
    return rank_scores({dev: len(files) / total_files for dev, files in index.items()}, KeyDevMetric.JACK)


def rarely_reached_files(
    graph: ArtifactGraph, config: AnalysisConfig, index: Dict[str, frozenset] | None = None
) -> set:
    index = index if index is not None else reachability_index(graph, config.distance_threshold)
    reach_counts: Dict[str, int] = {}
    for files in index.values():
        for path in files:
            reach_counts[path] = reach_counts.get(path, 0) + 1
    return {path for path, count in reach_counts.items() if 1 <= count <= config.rare_reach_limit}


def maven_scores(graph: ArtifactGraph, config: AnalysisConfig, index: Dict[str, frozenset] | None = None) -> List[KeyDevScore]:
    """Mavenness: share of all rarely reached files that each developer reaches."""
    index = index if index is not None else reachability_index(graph, config.distance_threshold)
    rare = rarely_reached_files(graph, config, index)
    if not rare:
        logger.warning("%s: no rarely reached files, all mavenness is 0", graph.scope or "project")
        return rank_scores({dev: 0.0 for dev in index}, KeyDevMetric.MAVEN)
    return rank_scores({dev: len(files & rare) / len(rare) for dev, files in index.items()}, KeyDevMetric.MAVEN)


def _to_igraph(graph: nx.Graph, weighted: bool) -> Tuple[List, ig.Graph, Optional[List[float]]]:
    nodes = list(graph.nodes)
    position = {node: i for i, node in enumerate(nodes)}
    edges = list(graph.edges(data="distance"))
    converted = ig.Graph(n=len(nodes), edges=[(position[u], position[v]) for u, v, _ in edges])
    weights = [distance for _, _, distance in edges] if weighted else None
    return nodes, converted, weights


def connector_scores(graph: ArtifactGraph, config: AnalysisConfig) -> List[KeyDevScore]:
    """Normalized betweenness over the whole artifact graph, reported for developers."""
    n = len(graph)
    if n < 3:
        raise EmptyDomainError(f"The {graph.scope or 'project'} graph has {n} nodes; betweenness needs 3")

    if config.betweenness_samples and config.betweenness_samples < n:
        weight = "distance" if config.weighted_betweenness else None
        centrality = nx.betweenness_centrality(
            graph.graph, k=config.betweenness_samples, normalized=True, weight=weight, seed=0
        )
    else:
        nodes, converted, weights = _to_igraph(graph.graph, config.weighted_betweenness)
        # igraph counts every unordered pair once on undirected graphs.
        pairs = (n - 1) * (n - 2) / 2
        raw = converted.betweenness(directed=False, weights=weights)
        centrality = {node: value / pairs for node, value in zip(nodes, raw)}

    values = {node[1]: centrality[node] for node in graph.nodes_of_kind(DEVELOPER)}
    return rank_scores(values, KeyDevMetric.CONNECTOR)


def top_k(scores: List[KeyDevScore], k: int) -> List[KeyDevScore]:
    if k < 1:
        raise ArgumentError(f"k must be at least 1, got {k}")
    return sorted(scores, key=lambda s: (s.rank, s.developer))[:k]


def analyze_scope(graph: ArtifactGraph, config: AnalysisConfig) -> Dict[KeyDevMetric, List[KeyDevScore]]:
    """All three metrics for one graph; metrics whose domain is empty come back as empty lists."""
    results: Dict[KeyDevMetric, List[KeyDevScore]] = {metric: [] for metric in KeyDevMetric}
    if len(graph) == 0:
        logger.warning("%s: empty graph in %s", graph.scope or "project", graph.window.label())
        return results

    index = reachability_index(graph, config.distance_threshold)
    try:
        results[KeyDevMetric.JACK] = jack_scores(graph, config, index)
    except EmptyDomainError as e:
        logger.warning(str(e))
    results[KeyDevMetric.MAVEN] = maven_scores(graph, config, index)
    try:
        results[KeyDevMetric.CONNECTOR] = connector_scores(graph, config)
    except EmptyDomainError as e:
        logger.warning(str(e))
    return results

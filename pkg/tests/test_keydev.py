import random
from math import fsum

import networkx as nx
import pytest

from src.graph.index import ArtifactGraph, build_graph, scope_to_service
from src.graph.utils import DEVELOPER, commit_node, developer_node, file_node, node_kind
from src.keydev.index import (
    analyze_scope,
    connector_scores,
    jack_scores,
    maven_scores,
    rarely_reached_files,
    reachable_files,
    top_k,
)
from src.keydev.utils import key_developers, rank_scores, role_overlap, turnover
from src.models.index import AnalysisConfig, IssueEventKind, KeyDevMetric, KeyDevScore
from src.utils.errors import ArgumentError, EmptyDomainError

from tests.factories import AUDIT_CHAT, WINDOW, make_commit, make_event, make_log
from tests.oracles import brute_force_betweenness, brute_force_reachable, random_fixture

CONFIG = AnalysisConfig()


def handmade_graph(edges):
    """ArtifactGraph straight from (u, v, distance) triples."""
    graph = nx.Graph()
    for u, v, distance in edges:
        graph.add_edge(u, v, distance=distance)
    return ArtifactGraph(graph, WINDOW)


def by_developer(scores):
    return {s.developer: s.score for s in scores}


def test_reachability_respects_threshold():
    d, c, f = developer_node("d"), commit_node("c"), file_node("f")
    assert reachable_files(handmade_graph([(d, c, 1.0), (c, f, 1.0)]), "d", 5).reachable_files == {"f"}
    assert reachable_files(handmade_graph([(d, c, 3.0), (c, f, 3.0)]), "d", 5).reachable_files == frozenset()
    with pytest.raises(ArgumentError):
        reachable_files(handmade_graph([(d, c, 1.0)]), "ghost", 5)


def test_reachability_never_passes_through_another_developer():
    issue = make_event(1, "d", IssueEventKind.OPENED)
    comment = make_event(1, "d2", IssueEventKind.COMMENTED)
    commit = make_commit(1, "d2", [("services/audit/f.ts", 1)])
    graph = build_graph(make_log([commit], [issue, comment]), WINDOW)
    assert reachable_files(graph, "d", 100).reachable_files == frozenset()
    assert reachable_files(graph, "d2", 100).reachable_files == {"services/audit/f.ts"}


@pytest.mark.parametrize("seed", range(60))
def test_reachability_and_betweenness_match_brute_force(seed):
    graph = build_graph(random_fixture(seed), WINDOW)
    assert len(graph) <= 12
    for developer in graph.developers():
        for threshold in (1.0, 2.0, 3.0, 5.0):
            expected = brute_force_reachable(graph.graph, developer, threshold)
            assert reachable_files(graph, developer, threshold).reachable_files == expected

    if len(graph) < 3:
        return
    for weighted, weight in ((True, "distance"), (False, None)):
        expected = brute_force_betweenness(graph.graph, weight)
        scores = by_developer(connector_scores(graph, AnalysisConfig(weighted_betweenness=weighted)))
        for node, value in expected.items():
            if node_kind(node) == DEVELOPER:
                assert scores[node[1]] == pytest.approx(value, abs=1e-9)


def test_jack_scores_cover_files():
    log = make_log(
        [
            make_commit(1, "d1", [("services/audit/a.ts", 1), ("services/audit/b.ts", 1)]),
            make_commit(2, "d2", [("services/audit/c.ts", 1), ("services/audit/d.ts", 1)]),
            make_commit(3, "d3", [("services/audit/e.ts", 1)], days_ago=300),
        ]
    )
    graph = build_graph(log, WINDOW)
    scores = by_developer(jack_scores(graph, CONFIG))
    assert scores["d1"] == 2 / 5
    # Commit distance 1/(1 - 300/365) is about 5.6, already past the threshold.
    assert scores["d3"] == 0.0


def test_jack_scores_need_files():
    graph = handmade_graph([(developer_node("d"), ("issue", 1), 1.0)])
    with pytest.raises(EmptyDomainError):
        jack_scores(graph, CONFIG)


def test_rare_files_and_mavenness():
    log = make_log(
        [
            make_commit(1, "d1", [("services/audit/f1.ts", 1), ("services/audit/f2.ts", 1)]),
            make_commit(2, "d2", [("services/audit/f3.ts", 1), ("services/audit/shared.ts", 1)]),
            make_commit(3, "d3", [("services/audit/shared.ts", 1)]),
        ]
    )
    graph = build_graph(log, WINDOW)
    assert rarely_reached_files(graph, CONFIG) == {
        "services/audit/f1.ts",
        "services/audit/f2.ts",
        "services/audit/f3.ts",
    }
    assert "services/audit/shared.ts" in rarely_reached_files(graph, AnalysisConfig(rare_reach_limit=2))

    scores = by_developer(maven_scores(graph, CONFIG))
    assert scores == {"d1": 2 / 3, "d2": 1 / 3, "d3": 0.0}
    assert fsum(scores.values()) == pytest.approx(1.0, abs=1e-12)


def test_mavenness_without_rare_files_is_zero():
    log = make_log(
        [make_commit(1, "d1", [("services/audit/f.ts", 1)]), make_commit(2, "d2", [("services/audit/f.ts", 1)])]
    )
    assert by_developer(maven_scores(build_graph(log, WINDOW), CONFIG)) == {"d1": 0.0, "d2": 0.0}


def test_single_developer_owns_all_rare_files():
    log = make_log([make_commit(1, "solo", [("services/audit/a.ts", 1), ("services/audit/b.ts", 1)])])
    assert by_developer(maven_scores(build_graph(log, WINDOW), CONFIG)) == {"solo": 1.0}


@pytest.mark.parametrize("seed", range(60))
def test_mavenness_sums_to_one_with_limit_one(seed):
    graph = build_graph(random_fixture(seed), WINDOW)
    if not rarely_reached_files(graph, CONFIG):
        return
    assert fsum(s.score for s in maven_scores(graph, CONFIG)) == pytest.approx(1.0, abs=1e-12)


def test_articulation_developer_is_top_connector():
    # Two commit clusters joined only through "bridge".
    commits = [
        make_commit(1, "bridge", [("services/audit/a.ts", 1)]),
        make_commit(2, "bridge", [("services/audit/b.ts", 1)]),
        make_commit(3, "left", [("services/audit/a.ts", 1)]),
        make_commit(4, "right", [("services/audit/b.ts", 1)]),
    ]
    ranked = connector_scores(build_graph(make_log(commits), WINDOW), CONFIG)
    assert ranked[0].developer == "bridge"
    assert ranked[0].score > ranked[1].score
    scores = by_developer(ranked)
    assert scores["left"] == 0.0
    assert scores["left"] == scores["right"]


def test_connector_scores_need_three_nodes():
    graph = handmade_graph([(developer_node("d"), commit_node("c"), 1.0)])
    with pytest.raises(EmptyDomainError):
        connector_scores(graph, CONFIG)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("weighted", [True, False])
def test_connector_scores_match_networkx(seed, weighted):
    rng = random.Random(seed)
    source = nx.gnm_random_graph(40, 90, seed=seed)
    graph = nx.Graph()
    graph.add_nodes_from(developer_node(f"d{i}") if i % 2 else commit_node(f"c{i}") for i in source.nodes)
    for u, v in source.edges:
        a = developer_node(f"d{u}") if u % 2 else commit_node(f"c{u}")
        b = developer_node(f"d{v}") if v % 2 else commit_node(f"c{v}")
        graph.add_edge(a, b, distance=float(rng.choice((1, 2, 4))))
    artifact_graph = ArtifactGraph(graph, WINDOW)

    weight = "distance" if weighted else None
    expected = nx.betweenness_centrality(graph, normalized=True, weight=weight)
    scores = by_developer(connector_scores(artifact_graph, AnalysisConfig(weighted_betweenness=weighted)))
    assert scores.keys() == set(artifact_graph.developers())
    for developer, value in scores.items():
        assert value == pytest.approx(expected[developer_node(developer)], abs=1e-12)


def test_sampled_connector_scores_are_reproducible(planted):
    log, _ = planted
    graph = build_graph(log, WINDOW)
    config = AnalysisConfig(betweenness_samples=5)
    assert connector_scores(graph, config) == connector_scores(graph, config)


def test_top_k_and_ties():
    scores = rank_scores({"e": 0.1, "d": 0.9, "c": 0.5, "b": 0.5, "a": 0.2}, KeyDevMetric.JACK)
    assert [(s.developer, s.rank) for s in scores] == [("d", 1), ("b", 2), ("c", 2), ("a", 4), ("e", 5)]
    assert [s.developer for s in top_k(scores, 3)] == ["d", "b", "c"]
    assert len(top_k(scores[:2], 3)) == 2
    with pytest.raises(ArgumentError):
        top_k(scores, 0)


def test_key_developer_sets():
    jack = [KeyDevScore(developer="a", metric=KeyDevMetric.JACK, score=0.9, rank=1)]
    maven = [KeyDevScore(developer="b", metric=KeyDevMetric.MAVEN, score=0.9, rank=1)]
    whole = {KeyDevMetric.JACK: jack, KeyDevMetric.MAVEN: maven}
    assert key_developers(whole, 1) == {"a", "b"}
    assert role_overlap({"audit": {KeyDevMetric.JACK: jack}}, whole, 1) == {
        "a": [("audit", "jack"), ("*", "jack")],
        "b": [("*", "maven")],
    }
    assert turnover({"a", "b"}, {"b", "c"}) == (["a"], ["c"])


def test_planted_roles_are_top_one(planted):
    log, truth = planted
    for service in AUDIT_CHAT.services:
        graph = build_graph(scope_to_service(log, AUDIT_CHAT, service), truth.window, scope=service)
        results = analyze_scope(graph, CONFIG)
        assert top_k(results[KeyDevMetric.JACK], 1)[0].developer == truth.expected_jack[service]
        assert top_k(results[KeyDevMetric.MAVEN], 1)[0].developer == truth.expected_maven[service]
        assert top_k(results[KeyDevMetric.CONNECTOR], 1)[0].developer == truth.expected_connector[service]
        assert by_developer(results[KeyDevMetric.MAVEN])[truth.expected_maven[service]] == 1.0


def test_analyze_scope_on_empty_graph():
    results = analyze_scope(build_graph(make_log([]), WINDOW), CONFIG)
    assert results == {metric: [] for metric in KeyDevMetric}


@pytest.mark.parametrize("seed", range(60))
def test_removing_a_developer_never_shrinks_anyone_elses_reach(seed):
    graph = build_graph(random_fixture(seed), WINDOW)
    developers = graph.developers()
    for removed in developers:
        pruned = nx.Graph(graph.graph)
        pruned.remove_node(developer_node(removed))
        pruned_graph = ArtifactGraph(pruned, WINDOW)
        for developer in developers:
            if developer == removed:
                continue
            before = reachable_files(graph, developer, 5.0).reachable_files
            assert before <= reachable_files(pruned_graph, developer, 5.0).reachable_files


@pytest.mark.parametrize("seed", range(20))
def test_reach_grows_with_threshold(seed):
    graph = build_graph(random_fixture(seed), WINDOW)
    for developer in graph.developers():
        reach = [reachable_files(graph, developer, t).reachable_files for t in (1.0, 2.0, 3.0, 5.0)]
        assert all(smaller <= larger for smaller, larger in zip(reach, reach[1:]))

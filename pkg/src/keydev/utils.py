from typing import Dict, Iterable, List, Mapping, Set, Tuple

from src.models.index import KeyDevMetric, KeyDevScore

ScoresByMetric = Mapping[KeyDevMetric, List[KeyDevScore]]


def rank_scores(values: Mapping[str, float], metric: KeyDevMetric) -> List[KeyDevScore]:
    """Rank by descending score then ascending id; tied scores share the smaller rank."""
    ordered = sorted(values.items(), key=lambda item: (-item[1], item[0]))
    ranked = []
    previous_score = None
    rank = 0
    for position, (developer, score) in enumerate(ordered, start=1):
        if score != previous_score:
            rank = position
            previous_score = score
        ranked.append(
            KeyDevScore(developer=developer, metric=metric, score=min(1.0, max(0.0, score)), rank=rank)
        )
    return ranked


def key_developers(scores_by_metric: ScoresByMetric, k: int) -> Set[str]:
    """Every developer in any metric's top-k."""
    members = set()
    for scores in scores_by_metric.values():
        ordered = sorted(scores, key=lambda s: (s.rank, s.developer))[:k]
        members.update(s.developer for s in ordered)
    return members


def role_overlap(
    per_service: Mapping[str, ScoresByMetric], whole: ScoresByMetric, k: int
) -> Dict[str, List[Tuple[str, str]]]:
    """(scope, metric) pairs in which each developer is a top-k key developer; scope "*" is the whole project."""
    roles: Dict[str, List[Tuple[str, str]]] = {}
    scopes = [(service, per_service[service]) for service in sorted(per_service)] + [("*", whole)]
    for scope, scores_by_metric in scopes:
        for metric in KeyDevMetric:
            for score in sorted(scores_by_metric.get(metric, []), key=lambda s: (s.rank, s.developer))[:k]:
                roles.setdefault(score.developer, []).append((scope, metric.value))
    return {developer: roles[developer] for developer in sorted(roles)}


def turnover(previous: Iterable[str], current: Iterable[str]) -> Tuple[List[str], List[str]]:
    """(departed, arrived) key developers between two windows."""
    previous, current = set(previous), set(current)
    return sorted(previous - current), sorted(current - previous)

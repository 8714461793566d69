import logging
from datetime import datetime, timedelta
from itertools import combinations
from math import fsum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from src.coupling.utils import count_switches, pair_coupling, switch_ratio
from src.models.index import (
    ActivityLog,
    CommitLabel,
    CouplingEntry,
    CouplingMatrix,
    LabeledCommit,
    RawCommit,
    ServiceMap,
    SwitchStats,
    WindowSpec,
)
from src.utils.errors import ArgumentError
from src.utils.index import to_utc

logger = logging.getLogger(__name__)


def _service_contributions(commit: RawCommit, service_map: ServiceMap) -> Dict[str, int]:
    """LOC per touched service; zero-LOC changes still mark the service as touched."""
    contributions: Dict[str, int] = {}
    for change in commit.changes:
        service = service_map.resolve(change.path)
        if service is not None:
            contributions[service] = contributions.get(service, 0) + change.loc
    return contributions


def _label_sequence(
    commits: Iterable[Tuple[RawCommit, Dict[str, int]]], service_a: str, service_b: str
) -> List[LabeledCommit]:
    labeled = []
    for commit, contributions in commits:
        touches_a, touches_b = service_a in contributions, service_b in contributions
        if touches_a and touches_b:
            label = CommitLabel.AB
        elif touches_a:
            label = CommitLabel.A
        elif touches_b:
            label = CommitLabel.B
        else:
            continue
        labeled.append(
            LabeledCommit(
                sha=commit.sha,
                timestamp=commit.timestamp,
                label=label,
                contrib_a=contributions.get(service_a, 0),
                contrib_b=contributions.get(service_b, 0),
            )
        )
    return labeled


def label_commits(
    log: ActivityLog, developer: str, service_map: ServiceMap, service_a: str, service_b: str
) -> List[LabeledCommit]:
    """The developer's commits touching a and/or b, labeled A, B or AB, in log order."""
    if service_a == service_b:
        raise ArgumentError(f"Cannot label commits against a single service ({service_a})")
    commits = ((c, _service_contributions(c, service_map)) for c in log.commits if c.author_email == developer)
    return _label_sequence(commits, service_a, service_b)


def switch_stats(developer: str, service_a: str, service_b: str, seq: Sequence[LabeledCommit]) -> SwitchStats:
    k, n = count_switches(seq)
    s = switch_ratio(k, n)
    if n == 1 and k > 0:
        logger.warning(
            "%s: single logically coupled commit between %s and %s has no switch ratio, treated as 0",
            developer,
            service_a,
            service_b,
        )
    if s > 1:
        logger.warning("%s: switch ratio %.3f above 1 between %s and %s", developer, s, service_a, service_b)
    return SwitchStats(developer=developer, service_a=service_a, service_b=service_b, k=k, n=n, s=s)


def coupling_entry(stats: SwitchStats, seq: Sequence[LabeledCommit]) -> CouplingEntry:
    sum_a = sum(c.contrib_a for c in seq)
    sum_b = sum(c.contrib_b for c in seq)
    return CouplingEntry(
        developer=stats.developer,
        service_a=stats.service_a,
        service_b=stats.service_b,
        sum_a=sum_a,
        sum_b=sum_b,
        oc=pair_coupling(sum_a, sum_b, stats.s),
    )


def coupling_matrix(log: ActivityLog, service_map: ServiceMap, window: Optional[WindowSpec]) -> CouplingMatrix:
    """
    * Step 1 : Group in-window commits by developer with per-service LOC.
    * Step 2 : For every service pair and developer with labeled commits, compute (k, n, s) and OC.
    * Step 3 : Sum entries into symmetric pair cells and per-developer totals.
    A window of None takes the whole log.
    """
    services = service_map.services
    if len(services) < 2:
        raise ArgumentError(f"Organizational coupling needs at least 2 services, got {len(services)}")

    # Step 1
    by_developer: Dict[str, List[Tuple[RawCommit, Dict[str, int]]]] = {}
    for commit in log.commits:
        if window is not None and not window.includes(commit.timestamp):
            continue
        contributions = _service_contributions(commit, service_map)
        if contributions:
            by_developer.setdefault(commit.author_email, []).append((commit, contributions))

    # Step 2
    entries: List[CouplingEntry] = []
    switches: List[SwitchStats] = []
    for service_a, service_b in combinations(services, 2):
        for developer in sorted(by_developer):
            seq = _label_sequence(by_developer[developer], service_a, service_b)
            if not seq:
                continue
            stats = switch_stats(developer, service_a, service_b, seq)
            switches.append(stats)
            entries.append(coupling_entry(stats, seq))

    # Step 3
    cells = {
        pair: fsum(e.oc for e in entries if (e.service_a, e.service_b) == pair)
        for pair in combinations(services, 2)
    }
    per_developer = {
        developer: fsum(e.oc for e in entries if e.developer == developer)
        for developer in sorted({e.developer for e in entries})
    }
    return CouplingMatrix(
        services=tuple(services),
        cells=cells,
        per_developer=per_developer,
        window=window,
        entries=tuple(entries),
        switches=tuple(switches),
    )


def coupling_windows(first: datetime, window_length_days: float, count: int) -> List[WindowSpec]:
    """Consecutive non-overlapping windows; window i covers (first + i*L, first + (i+1)*L]."""
    if count < 1:
        raise ArgumentError(f"window count must be at least 1, got {count}")
    first = to_utc(first)
    return [
        WindowSpec(end=first + timedelta(days=window_length_days * (i + 1)), length_days=window_length_days)
        for i in range(count)
    ]


def windowed_coupling(
    log: ActivityLog, service_map: ServiceMap, first: datetime, window_length_days: float, count: int
) -> List[CouplingMatrix]:
    """One independent matrix per window; switch state never carries across windows."""
    matrices = []
    for window in coupling_windows(first, window_length_days, count):
        logger.info("Computing organizational coupling for %s", window.label())
        matrices.append(coupling_matrix(log, service_map, window))
    return matrices


def key_developer_share(matrix: CouplingMatrix, developers: Iterable[str]) -> float:
    """Fraction of the matrix total contributed by the given developers."""
    total = fsum(matrix.per_developer.values())
    if total == 0:
        return 0.0
    return fsum(matrix.per_developer.get(d, 0.0) for d in sorted(set(developers))) / total


def heavily_coupled_pairs(matrix: CouplingMatrix, threshold: float) -> List[Tuple[str, str, float]]:
    return [(a, b, oc) for (a, b), oc in sorted(matrix.cells.items()) if oc > threshold]

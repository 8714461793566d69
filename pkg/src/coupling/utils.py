from typing import Sequence, Tuple

from src.models.index import CommitLabel, LabeledCommit
from src.utils.errors import ArgumentError


def count_switches(seq: Sequence[LabeledCommit]) -> Tuple[int, int]:
    """
    Contribution switches k and commit count n for a time-ordered label sequence.

    A logically coupled (AB) commit always adds two switches; a single-label commit adds one
    only when the previous label was the opposite single label.
    """
    k = 0
    state = None
    for commit in seq:
        label = commit.label
        if label == CommitLabel.AB:
            k += 2
        elif state is not None and state != CommitLabel.AB and state != label:
            k += 1
        state = label
    return k, len(seq)


def switch_ratio(k: int, n: int) -> float:
    """k / (2(n - 1)); a lone commit cannot alternate, so n == 1 gives 0."""
    if n < 1:
        raise ArgumentError(f"commit count must be at least 1, got {n}")
    if k < 0:
        raise ArgumentError(f"switch count must be non-negative, got {k}")
    if n == 1:
        return 0.0
    return k / (2 * (n - 1))


def pair_coupling(sum_a: float, sum_b: float, s: float) -> float:
    """Harmonic mean of the two contribution totals, weighted by the switch ratio."""
    if sum_a < 0 or sum_b < 0 or s < 0:
        raise ArgumentError(f"coupling inputs must be non-negative, got ({sum_a}, {sum_b}, {s})")
    total = sum_a + sum_b
    if total == 0:
        return 0.0
    return (2 * sum_a * sum_b / total) * s

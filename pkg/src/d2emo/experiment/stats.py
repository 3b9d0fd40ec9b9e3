"""Pairwise comparison statistics: Wilcoxon signed-rank, Vargha-Delaney A12, Scott-Knott ranking."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from scipy import stats

from d2emo.errors import ContractViolation

ALPHA = 0.05
EXACT_MAX_PAIRS = 20
MIN_PAIRS = 5


class Effect(StrEnum):
    EQUAL = "equal"
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


@dataclass(frozen=True)
class SampleGroup:
    label: str
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size == 0 or not np.all(np.isfinite(values)):
            msg = f"group '{self.label}' needs a nonempty list of finite values"
            raise ContractViolation(msg)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def mean(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True)
class WilcoxonResult:
    p_value: float
    significant: bool
    n_pairs: int
    statistic: float


def _exact_two_sided(doubled: np.ndarray, w_plus: int) -> float:
    # distribution of the positive-rank sum over all 2^n sign assignments
    counts = np.zeros(1, dtype=float)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros(len(counts) + r)
        shifted[: len(counts)] += counts
        shifted[r:] += counts
        counts = shifted
    total = counts.sum()
    lower = counts[: w_plus + 1].sum() / total
    upper = counts[w_plus:].sum() / total
    return min(1.0, 2.0 * min(lower, upper))


def wilcoxon_signed_rank(
    a: Sequence[float] | np.ndarray,
    b: Sequence[float] | np.ndarray,
    alpha: float = ALPHA,
) -> WilcoxonResult:
    """Two-sided paired test; zero differences are dropped before ranking.

    Exact (tie-aware) for up to 20 nonzero pairs, normal approximation with
    tie correction above that.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        msg = f"paired samples must be 1-D and of equal length, got {a.shape} and {b.shape}"
        raise ContractViolation(msg)
    d = a - b
    d = d[d != 0]
    n = d.size
    if n == 0:
        return WilcoxonResult(p_value=1.0, significant=False, n_pairs=0, statistic=0.0)
    if n < MIN_PAIRS:
        msg = f"signed-rank test needs at least {MIN_PAIRS} nonzero differences, got {n}"
        raise ContractViolation(msg)

    ranks = stats.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= EXACT_MAX_PAIRS:
        doubled = np.rint(2 * ranks).astype(int)
        p = _exact_two_sided(doubled, int(round(2 * w_plus)))
    else:
        _, ties = np.unique(ranks, return_counts=True)
        mean = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(ties**3 - ties)) / 48.0
        z = (w_plus - mean) / np.sqrt(var)
        p = min(1.0, float(2.0 * stats.norm.sf(abs(z))))
    return WilcoxonResult(p_value=p, significant=p < alpha, n_pairs=n, statistic=w_plus)


def a12(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Probability that a draw from a exceeds a draw from b (ties count half)."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        msg = "A12 needs two nonempty samples"
        raise ContractViolation(msg)
    greater = np.sum(a[:, None] > b[None, :])
    equal = np.sum(a[:, None] == b[None, :])
    return float((greater + 0.5 * equal) / (a.size * b.size))


def a12_class(value: float) -> Effect:
    magnitude = max(value, 1.0 - value)
    if magnitude < 0.56:
        return Effect.EQUAL
    if magnitude < 0.64:
        return Effect.SMALL
    if magnitude < 0.71:
        return Effect.MEDIUM
    return Effect.LARGE


def rank_sum_p(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sided Wilcoxon rank-sum p-value for unpaired (possibly unequal-size) samples."""
    return float(stats.mannwhitneyu(a, b, alternative="two-sided").pvalue)


def _differ(left: np.ndarray, right: np.ndarray, alpha: float) -> bool:
    if a12_class(a12(left, right)) is Effect.EQUAL:
        return False
    return rank_sum_p(left, right) < alpha


def _best_split(ordered: list[SampleGroup]) -> int:
    pooled = np.concatenate([g.values for g in ordered])
    grand = pooled.mean()
    best_cut, best_ss = 1, -np.inf
    for cut in range(1, len(ordered)):
        left = np.concatenate([g.values for g in ordered[:cut]])
        right = np.concatenate([g.values for g in ordered[cut:]])
        ss = left.size * (left.mean() - grand) ** 2 + right.size * (right.mean() - grand) ** 2
        if ss > best_ss:
            best_cut, best_ss = cut, ss
    return best_cut


def _partition(ordered: list[SampleGroup], alpha: float) -> list[list[SampleGroup]]:
    if len(ordered) == 1:
        return [ordered]
    cut = _best_split(ordered)
    left = np.concatenate([g.values for g in ordered[:cut]])
    right = np.concatenate([g.values for g in ordered[cut:]])
    if not _differ(left, right, alpha):
        return [ordered]
    return _partition(ordered[:cut], alpha) + _partition(ordered[cut:], alpha)


def scott_knott(groups: Sequence[SampleGroup], alpha: float = ALPHA) -> dict[str, int]:
    """Rank groups into clusters; rank 1 is the cluster with the largest mean.

    Splits maximize the between-cluster sum of squares and are kept only when
    the two sides differ by a rank-sum test and by a non-negligible A12 effect.
    """
    if not groups:
        msg = "Scott-Knott needs at least one group"
        raise ContractViolation(msg)
    labels = [g.label for g in groups]
    if len(set(labels)) != len(labels):
        msg = f"group labels must be unique, got {labels}"
        raise ContractViolation(msg)
    ordered = sorted(groups, key=lambda g: -g.mean)
    ranks: dict[str, int] = {}
    for rank, cluster in enumerate(_partition(ordered, alpha), start=1):
        for group in cluster:
            ranks[group.label] = rank
    return {label: ranks[label] for label in labels}

"""Exact 2-D hypervolume, individual contributions, and batch infill selection."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from d2emo.errors import ContractViolation
from d2emo.optim.core import EPS_DUP, Archive, CandidateSet, Solution, is_duplicate, nondominated_filter

REF_MARGIN = 0.1
REF_MIN_OFFSET = 1e-6


@dataclass(frozen=True)
class RefPoint:
    r: np.ndarray

    def __post_init__(self) -> None:
        r = np.array(self.r, dtype=float)
        if r.ndim != 1 or not np.all(np.isfinite(r)):
            msg = f"reference point must be a finite vector, got {self.r!r}"
            raise ContractViolation(msg)
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    def to_list(self) -> list[float]:
        return self.r.tolist()


def _ref(ref: RefPoint | Sequence[float] | np.ndarray) -> np.ndarray:
    return ref.r if isinstance(ref, RefPoint) else np.asarray(ref, dtype=float)


def _points_2d(points: Sequence[Sequence[float]] | np.ndarray, ref: np.ndarray) -> np.ndarray:
    if ref.shape != (2,):
        msg = f"exact hypervolume is implemented for m=2 only, got reference of length {ref.size}"
        raise ContractViolation(msg)
    F = np.asarray(points, dtype=float)
    if F.size == 0:
        return np.empty((0, 2))
    if F.ndim != 2 or F.shape[1] != 2:
        msg = f"exact hypervolume needs (N, 2) points, got shape {F.shape}"
        raise ContractViolation(msg)
    return F


def dynamic_ref(predicted: np.ndarray) -> RefPoint:
    """Per-objective max plus 10% of the span (at least 1e-6) over a candidate set."""
    F = np.asarray(predicted, dtype=float)
    span = F.max(axis=0) - F.min(axis=0)
    return RefPoint(F.max(axis=0) + np.maximum(REF_MARGIN * span, REF_MIN_OFFSET))


def hv2d(points: Sequence[Sequence[float]] | np.ndarray, ref: RefPoint | Sequence[float] | np.ndarray) -> float:
    """Area dominated by points and bounded by ref, by sort-and-sweep."""
    r = _ref(ref)
    F = _points_2d(points, r)
    F = F[np.all(F < r, axis=1)]
    if len(F) == 0:
        return 0.0
    F = F[nondominated_filter(F)]
    F = F[np.lexsort((F[:, 1], F[:, 0]))]
    right = np.append(F[1:, 0], r[0])
    return float(np.sum((right - F[:, 0]) * (r[1] - F[:, 1])))


def ihv(points: Sequence[Sequence[float]] | np.ndarray, ref: RefPoint | Sequence[float] | np.ndarray) -> np.ndarray:
    """Exclusive contribution HV(P) - HV(P minus x) of every point, by one sorted sweep."""
    r = _ref(ref)
    F = _points_2d(points, r)
    contributions = np.zeros(len(F))
    inside = np.flatnonzero(np.all(F < r, axis=1))
    if inside.size == 0:
        return contributions
    front = inside[nondominated_filter(F[inside])]
    # duplicates leave HV unchanged when either copy is removed
    _, first, counts = np.unique(F[front], axis=0, return_index=True, return_counts=True)
    unique = front[first[counts == 1]]
    if unique.size == 0:
        return contributions
    front = front[np.lexsort((F[front, 1], F[front, 0]))]
    f1 = F[front, 0]
    f2 = F[front, 1]
    right = np.append(f1[1:], r[0])
    upper = np.insert(f2[:-1], 0, r[1])
    sweep = (right - f1) * (upper - f2)
    is_unique = np.isin(front, unique)
    contributions[front[is_unique]] = sweep[is_unique]
    return contributions


def hv_monte_carlo(
    points: Sequence[Sequence[float]] | np.ndarray,
    ref: RefPoint | Sequence[float] | np.ndarray,
    samples: int,
    rng: np.random.Generator,
) -> float:
    """Monte-Carlo hypervolume estimate for any m (diagnostics only)."""
    r = _ref(ref)
    F = np.asarray(points, dtype=float)
    F = F[np.all(F < r, axis=1)] if len(F) else F
    if len(F) == 0:
        return 0.0
    low = F.min(axis=0)
    box = float(np.prod(r - low))
    hits = 0
    for start in range(0, samples, 100_000):
        u = rng.uniform(low, r, size=(min(100_000, samples - start), len(r)))
        covered = np.zeros(len(u), dtype=bool)
        for p in F:
            covered |= np.all(u >= p, axis=1)
        hits += int(covered.sum())
    return box * hits / samples


def _eligible(candidates: CandidateSet, archive: Archive, eps: float) -> np.ndarray:
    return np.array(
        [i for i, x in enumerate(candidates.X) if not is_duplicate(x, archive.X, archive.bounds, eps)], dtype=int
    )


def _take(candidates: CandidateSet, order: np.ndarray, xi: int, archive: Archive, eps: float) -> list[Solution]:
    picked: list[int] = []
    for i in order:
        if len(picked) == xi:
            break
        if is_duplicate(candidates.X[i], candidates.X[picked], archive.bounds, eps):
            continue
        picked.append(int(i))
    return [Solution(x=candidates.X[i], predicted=candidates.predicted[i]) for i in picked]


def select_batch(
    candidates: CandidateSet,
    xi: int,
    archive: Archive,
    ref: RefPoint | Sequence[float] | np.ndarray | None = None,
    *,
    eps: float = EPS_DUP,
) -> list[Solution]:
    """Top-xi candidates by IHV among those not duplicating the archive or each other.

    Without an explicit ref the dynamic reference of the candidate set is used.
    """
    if xi < 1:
        msg = f"batch size xi must be >= 1, got {xi}"
        raise ContractViolation(msg)
    if len(candidates) == 0:
        return []
    eligible = _eligible(candidates, archive, eps)
    if eligible.size == 0:
        return []
    r = _ref(ref) if ref is not None else dynamic_ref(candidates.predicted).r
    contributions = ihv(candidates.predicted[eligible], r)
    # stable sort on negated contribution: lowest index wins ties
    order = eligible[np.argsort(-contributions, kind="stable")]
    return _take(candidates, order, xi, archive, eps)


def select_random_batch(
    candidates: CandidateSet,
    xi: int,
    archive: Archive,
    rng: np.random.Generator,
    *,
    eps: float = EPS_DUP,
) -> list[Solution]:
    """Uniformly random eligible candidates, with the same duplicate exclusion as select_batch."""
    if xi < 1:
        msg = f"batch size xi must be >= 1, got {xi}"
        raise ContractViolation(msg)
    if len(candidates) == 0:
        return []
    eligible = _eligible(candidates, archive, eps)
    if eligible.size == 0:
        return []
    return _take(candidates, rng.permutation(eligible), xi, archive, eps)

"""Domain types, Pareto dominance, nondominated filtering, and crowding truncation."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from d2emo.errors import ContractViolation

# Decision-space duplicate tolerance on range-normalized coordinates.
EPS_DUP = 1e-9


def _frozen(values: Iterable[float] | np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = _frozen(np.atleast_1d(self.lower))
        upper = _frozen(np.atleast_1d(self.upper))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1:
            msg = f"bounds must be two 1-D arrays of equal nonzero length, got {lower.shape} and {upper.shape}"
            raise ContractViolation(msg)
        if not np.all(lower < upper):
            msg = f"lower bounds must be strictly below upper bounds: {lower.tolist()} vs {upper.tolist()}"
            raise ContractViolation(msg)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, n: int, lower: float = 0.0, upper: float = 1.0) -> Bounds:
        return cls(np.full(n, lower), np.full(n, upper))

    @property
    def n(self) -> int:
        return int(self.lower.size)

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.span))

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == self.lower.shape and bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.span

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True)
class Solution:
    """A decision vector with optional true and predicted objective vectors."""

    x: np.ndarray
    objectives: np.ndarray | None = None
    predicted: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _frozen(self.x))
        if self.objectives is not None:
            object.__setattr__(self, "objectives", _frozen(self.objectives))
        if self.predicted is not None:
            object.__setattr__(self, "predicted", _frozen(self.predicted))
        if (
            self.objectives is not None
            and self.predicted is not None
            and self.objectives.shape != self.predicted.shape
        ):
            msg = "true and predicted objective vectors differ in length"
            raise ContractViolation(msg)


@dataclass(frozen=True)
class CandidateSet:
    """Surrogate-screened decision vectors with their predicted objectives."""

    X: np.ndarray
    predicted: np.ndarray

    def __post_init__(self) -> None:
        X = _frozen(np.atleast_2d(self.X))
        predicted = _frozen(np.atleast_2d(self.predicted))
        if len(X) != len(predicted):
            msg = f"candidate set has {len(X)} decision vectors but {len(predicted)} predictions"
            raise ContractViolation(msg)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "predicted", predicted)

    def __len__(self) -> int:
        return len(self.X)

    def solutions(self) -> list[Solution]:
        return [Solution(x=x, predicted=p) for x, p in zip(self.X, self.predicted, strict=True)]


def is_duplicate(x: np.ndarray, others: np.ndarray, bounds: Bounds, eps: float = EPS_DUP) -> bool:
    """True if x lies within eps of any row of others in range-normalized decision space."""
    if len(others) == 0:
        return False
    diff = bounds.normalize(others) - bounds.normalize(x)
    return bool(np.any(np.linalg.norm(diff, axis=1) <= eps))


@dataclass
class Archive:
    """Append-only set of expensively evaluated solutions (the training data)."""

    bounds: Bounds
    entries: list[Solution] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def X(self) -> np.ndarray:
        if not self.entries:
            return np.empty((0, self.bounds.n))
        return np.vstack([s.x for s in self.entries])

    @property
    def F(self) -> np.ndarray:
        if not self.entries:
            return np.empty((0, 0))
        return np.vstack([s.objectives for s in self.entries])

    def contains(self, x: np.ndarray, eps: float = EPS_DUP) -> bool:
        return is_duplicate(x, self.X, self.bounds, eps)

    def add(self, solution: Solution) -> None:
        if solution.objectives is None:
            msg = "archive entries must carry true objectives"
            raise ContractViolation(msg)
        if self.entries and solution.objectives.shape != self.entries[0].objectives.shape:
            m = self.entries[0].objectives.size
            msg = f"objective length {solution.objectives.size} does not match archive m={m}"
            raise ContractViolation(msg)
        if self.contains(solution.x):
            msg = f"duplicate decision vector {solution.x.tolist()} already in archive"
            raise ContractViolation(msg)
        self.entries.append(solution)

    def front(self) -> np.ndarray:
        """Objective vectors of the archive's nondominated entries, in archive order."""
        F = self.F
        if len(F) == 0:
            return F
        return F[nondominated_filter(F)]


def dominates(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> bool:
    """Pareto dominance for minimization: a is no worse everywhere and differs somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        msg = f"objective vectors differ in length: {a.size} vs {b.size}"
        raise ContractViolation(msg)
    return bool(np.all(a <= b) and np.any(a != b))


def _dominated_mask_2d(F: np.ndarray) -> np.ndarray:
    order = np.lexsort((F[:, 1], F[:, 0]))
    dominated = np.zeros(len(F), dtype=bool)
    best_f2 = np.inf
    i = 0
    while i < len(order):
        # identical points never dominate each other, so sweep them as one group
        j = i
        head = F[order[i]]
        while j < len(order) and np.array_equal(F[order[j]], head):
            j += 1
        if best_f2 <= head[1]:
            dominated[order[i:j]] = True
        best_f2 = min(best_f2, head[1])
        i = j
    return dominated


def _dominated_mask_nd(F: np.ndarray, chunk: int = 256) -> np.ndarray:
    dominated = np.zeros(len(F), dtype=bool)
    for start in range(0, len(F), chunk):
        block = F[start : start + chunk]
        leq = np.all(F[:, None, :] <= block[None, :, :], axis=2)
        differs = np.any(F[:, None, :] != block[None, :, :], axis=2)
        dominated[start : start + chunk] = np.any(leq & differs, axis=0)
    return dominated


def nondominated_filter(points: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    """Indices (ascending) of the mutually nondominated points."""
    F = np.asarray(points, dtype=float)
    if F.size == 0:
        return np.empty(0, dtype=int)
    if F.ndim != 2:
        msg = f"points must form an (N, m) array, got shape {F.shape}"
        raise ContractViolation(msg)
    mask = _dominated_mask_2d(F) if F.shape[1] == 2 else _dominated_mask_nd(F)
    return np.flatnonzero(~mask)


def crowding_distance(points: np.ndarray) -> np.ndarray:
    F = np.asarray(points, dtype=float)
    n, m = F.shape
    distance = np.zeros(n)
    if n <= 2:
        distance[:] = np.inf
        return distance
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        span = F[order[-1], j] - F[order[0], j]
        distance[order[0]] = np.inf
        distance[order[-1]] = np.inf
        if span <= 0:
            continue
        distance[order[1:-1]] += (F[order[2:], j] - F[order[:-2], j]) / span
    return distance


def crowding_truncate(points: Sequence[Sequence[float]] | np.ndarray, k: int) -> np.ndarray:
    """Keep at most k indices: per-objective extremes first, then by crowding distance."""
    F = np.asarray(points, dtype=float)
    n = len(F)
    if k <= 0 or n == 0:
        return np.empty(0, dtype=int)
    if n <= k:
        return np.arange(n)

    chosen: list[int] = []
    if k >= 2:
        for j in range(F.shape[1]):
            # argmin/argmax return the lowest index on ties
            for idx in (int(np.argmin(F[:, j])), int(np.argmax(F[:, j]))):
                if idx not in chosen:
                    chosen.append(idx)
        chosen = chosen[:k]

    distance = crowding_distance(F)
    taken = np.zeros(n, dtype=bool)
    taken[chosen] = True
    rest = np.flatnonzero(~taken)
    # stable sort on negated distance keeps lowest index first among equals
    ranked = rest[np.argsort(-distance[rest], kind="stable")]
    chosen.extend(int(i) for i in ranked[: k - len(chosen)])
    return np.array(sorted(chosen), dtype=int)

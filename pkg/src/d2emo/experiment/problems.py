"""Benchmark problems with disconnected Pareto fronts and their true-front samplers.

Variants with disconnect parameter k > 1 are reconstructions: the frequency of
the disconnection-inducing term is multiplied by k (ZDT3: sin(10*k*pi*f1),
DTLZ7: sin(3*k*pi*f1), WFG2: disconnected shape A = 5*k).
"""

from __future__ import annotations

import functools
import math
import re
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from d2emo.errors import ContractViolation
from d2emo.optim.core import Bounds, nondominated_filter

SEGMENT_GAP_FACTOR = 5.0
# sweep points per oscillation period before refinement
SWEEP_PER_PERIOD = 400


class Family(StrEnum):
    ZDT3 = "zdt3"
    DTLZ7 = "dtlz7"
    WFG2 = "wfg2"


Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Problem:
    name: str
    family: Family
    n: int
    bounds: Bounds
    disconnect_param: int
    evaluator: Evaluator = field(repr=False)
    pf_curve: Evaluator = field(repr=False)
    periods: float = 1.0
    m: int = 2

    @property
    def reconstructed(self) -> bool:
        return self.disconnect_param > 1

    def metadata(self) -> dict:
        return {
            "name": self.name,
            "family": str(self.family),
            "n": self.n,
            "m": self.m,
            "k": self.disconnect_param,
            "variant": "reconstruction" if self.reconstructed else "standard",
            "bounds": self.bounds.to_dict(),
        }


# --- ZDT3 -----------------------------------------------------------------------


def _zdt3(k: int) -> tuple[Evaluator, Evaluator]:
    freq = 10.0 * k * np.pi

    def evaluate(X: np.ndarray) -> np.ndarray:
        f1 = X[:, 0]
        g = 1.0 + 9.0 * np.mean(X[:, 1:], axis=1)
        ratio = f1 / g
        return np.column_stack([f1, g * (1.0 - np.sqrt(ratio) - ratio * np.sin(freq * f1))])

    def curve(t: np.ndarray) -> np.ndarray:
        return np.column_stack([t, 1.0 - np.sqrt(t) - t * np.sin(freq * t)])

    return evaluate, curve


# --- DTLZ7 (m = 2) ----------------------------------------------------------------


def _dtlz7(k: int) -> tuple[Evaluator, Evaluator]:
    freq = 3.0 * k * np.pi

    def evaluate(X: np.ndarray) -> np.ndarray:
        f1 = X[:, 0]
        g = 1.0 + 9.0 * np.mean(X[:, 1:], axis=1)
        h = 2.0 - f1 / (1.0 + g) * (1.0 + np.sin(freq * f1))
        return np.column_stack([f1, (1.0 + g) * h])

    def curve(t: np.ndarray) -> np.ndarray:
        return np.column_stack([t, 4.0 - t * (1.0 + np.sin(freq * t))])

    return evaluate, curve


# --- WFG2 (m = 2) -----------------------------------------------------------------


def _correct_to_01(a: np.ndarray, eps: float = 1e-10) -> np.ndarray:
    a = a.copy()
    a[(a < 0) & (a >= -eps)] = 0.0
    a[(a > 1) & (a <= 1 + eps)] = 1.0
    return a


def _s_linear(y: np.ndarray, shift: float = 0.35) -> np.ndarray:
    return _correct_to_01(np.abs(y - shift) / np.abs(np.floor(shift - y) + shift))


def _r_nonsep(y: np.ndarray, a: int) -> np.ndarray:
    width = y.shape[1]
    num = np.zeros(len(y))
    for j in range(width):
        num += y[:, j]
        for offset in range(a - 1):
            num += np.abs(y[:, j] - y[:, (1 + j + offset) % width])
    half = math.ceil(a / 2.0)
    return _correct_to_01(num / (width * half * (1.0 + 2.0 * a - 2.0 * half) / a))


def wfg2_position_count(n: int) -> int:
    """Position parameters for m=2: 2 when n - 2 is even and positive, else 1 (distance count must be even)."""
    return 2 if n >= 4 and (n - 2) % 2 == 0 else 1


def _wfg2(n: int, k: int) -> tuple[Evaluator, Evaluator]:
    pos = wfg2_position_count(n)
    dist = n - pos
    upper = 2.0 * np.arange(1, n + 1)
    shape_a = 5.0 * k

    def front(t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
        f1 = t2 + 2.0 * _correct_to_01(1.0 - np.cos(0.5 * np.pi * t1))
        f2 = t2 + 4.0 * _correct_to_01(1.0 - t1 * np.cos(shape_a * np.pi * t1) ** 2)
        return np.column_stack([f1, f2])

    def evaluate(X: np.ndarray) -> np.ndarray:
        z = X / upper
        positions = z[:, :pos]
        distances = _s_linear(z[:, pos:])
        reduced = np.column_stack([_r_nonsep(distances[:, 2 * i : 2 * i + 2], 2) for i in range(dist // 2)])
        t1 = _correct_to_01(positions.mean(axis=1))
        t2 = _correct_to_01(reduced.mean(axis=1))
        # degeneracy constant A = 1 leaves the position parameter unchanged
        return front(t1, t2)

    def curve(t: np.ndarray) -> np.ndarray:
        return front(t, np.zeros_like(t))

    return evaluate, curve


# --- registry -----------------------------------------------------------------

_NAME = re.compile(r"^(?P<family>zdt3|dtlz7|wfg2)(?:-k(?P<k>\d+))?$")


def parse_problem_name(name: str) -> tuple[Family, int]:
    """'zdt3' -> (ZDT3, 1); 'dtlz7-k3' -> (DTLZ7, 3)."""
    match = _NAME.match(name.strip().lower())
    if not match:
        msg = f"unknown problem '{name}' (expected zdt3, dtlz7, or wfg2 with optional -k<k> suffix)"
        raise ContractViolation(msg)
    k = int(match.group("k") or 1)
    if k < 1:
        msg = f"disconnect parameter must be >= 1, got {k}"
        raise ContractViolation(msg)
    return Family(match.group("family")), k


def problem_name(family: Family | str, k: int) -> str:
    return str(family) if k == 1 else f"{family}-k{k}"


def get_problem(name: str, n: int, k: int | None = None) -> Problem:
    """Build a problem from a registry name; an explicit k overrides a -k suffix."""
    family, parsed_k = parse_problem_name(name)
    k = parsed_k if k is None else k
    if k < 1:
        msg = f"disconnect parameter must be >= 1, got {k}"
        raise ContractViolation(msg)
    if family is Family.WFG2:
        if n < 3:
            msg = f"wfg2 needs n >= 3, got {n}"
            raise ContractViolation(msg)
        evaluator, curve = _wfg2(n, k)
        bounds = Bounds(np.zeros(n), 2.0 * np.arange(1, n + 1))
        periods = 5.0 * k
    else:
        if n < 2:
            msg = f"{family} needs n >= 2, got {n}"
            raise ContractViolation(msg)
        evaluator, curve = _zdt3(k) if family is Family.ZDT3 else _dtlz7(k)
        bounds = Bounds.uniform(n)
        periods = 5.0 * k if family is Family.ZDT3 else 1.5 * k
    return Problem(
        name=problem_name(family, k),
        family=family,
        n=n,
        bounds=bounds,
        disconnect_param=k,
        evaluator=evaluator,
        pf_curve=curve,
        periods=periods,
    )


def evaluate(problem: Problem, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not problem.bounds.contains(x):
        msg = f"{problem.name}: decision vector {x.tolist()} outside bounds"
        raise ContractViolation(msg)
    return problem.evaluator(x[None, :])[0]


def evaluate_batch(problem: Problem, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    inside = np.all((X >= problem.bounds.lower) & (X <= problem.bounds.upper), axis=1)
    if X.shape[1] != problem.n or not np.all(inside):
        msg = f"{problem.name}: batch contains decision vectors outside bounds"
        raise ContractViolation(msg)
    return problem.evaluator(X)


# --- true Pareto front ------------------------------------------------------------


def _runs(indices: np.ndarray) -> list[tuple[int, int]]:
    """Contiguous runs of sorted grid indices as (first, last) pairs."""
    breaks = np.flatnonzero(np.diff(indices) > 1)
    starts = np.insert(indices[breaks + 1], 0, indices[0])
    ends = np.append(indices[breaks], indices[-1])
    return list(zip(starts.tolist(), ends.tolist(), strict=True))


def pf_segments(problem: Problem, density: int) -> list[np.ndarray]:
    """True-front segments, each sampled with `density` points along the front parameter."""
    if density < 2:
        msg = f"density must be >= 2, got {density}"
        raise ContractViolation(msg)
    grid = np.linspace(0.0, 1.0, int(max(2000, SWEEP_PER_PERIOD * math.ceil(problem.periods))) + 1)
    kept = nondominated_filter(problem.pf_curve(grid))
    pieces = []
    for first, last in _runs(kept):
        t = np.linspace(grid[first], grid[last], density)
        pieces.append(np.unique(problem.pf_curve(t), axis=0))
    joined = np.vstack(pieces)
    survivors = np.zeros(len(joined), dtype=bool)
    survivors[nondominated_filter(joined)] = True
    segments, start = [], 0
    for piece in pieces:
        mask = survivors[start : start + len(piece)]
        if np.any(mask):
            segments.append(piece[mask])
        start += len(piece)
    return segments


def true_pf_sample(problem: Problem, density: int) -> np.ndarray:
    """Mutually nondominated points on the analytic front, sorted by f1."""
    front = np.vstack(pf_segments(problem, density))
    return front[np.argsort(front[:, 0], kind="stable")]


@functools.lru_cache(maxsize=64)
def _cached_segments(name: str, n: int, density: int) -> tuple[np.ndarray, ...]:
    segments = pf_segments(get_problem(name, n), density)
    for seg in segments:
        seg.setflags(write=False)
    return tuple(segments)


def cached_pf_segments(problem: Problem, density: int) -> list[np.ndarray]:
    return list(_cached_segments(problem.name, problem.n, density))


def cached_pf_sample(problem: Problem, density: int) -> np.ndarray:
    front = np.vstack(_cached_segments(problem.name, problem.n, density))
    return front[np.argsort(front[:, 0], kind="stable")]


def metric_ref(problem: Problem, density: int) -> np.ndarray:
    """Reporting reference point: true-front nadir scaled by 1.1 componentwise."""
    return cached_pf_sample(problem, density).max(axis=0) * 1.1


def split_segments(points: np.ndarray, factor: float = SEGMENT_GAP_FACTOR) -> list[np.ndarray]:
    """Split a front at f1 gaps larger than factor x the median gap."""
    F = np.asarray(points, dtype=float)
    if len(F) == 0:
        return []
    F = F[np.argsort(F[:, 0], kind="stable")]
    if len(F) < 3:
        return [F]
    gaps = np.diff(F[:, 0])
    cut = np.flatnonzero(gaps > factor * np.median(gaps)) + 1
    return np.split(F, cut)


def segment_coverage(points: np.ndarray, segments: list[np.ndarray], margin: float = 0.05) -> int:
    """Number of segments whose bounding box (grown by margin x front span) holds any of points."""
    P = np.asarray(points, dtype=float)
    if len(P) == 0 or not segments:
        return 0
    whole = np.vstack(segments)
    pad = margin * (whole.max(axis=0) - whole.min(axis=0))
    covered = 0
    for seg in segments:
        low = seg.min(axis=0) - pad
        high = seg.max(axis=0) + pad
        if np.any(np.all((P >= low) & (P <= high), axis=1)):
            covered += 1
    return covered

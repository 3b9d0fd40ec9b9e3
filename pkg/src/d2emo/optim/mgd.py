"""Multiple-gradient descent search on surrogate means.

Each candidate gets per-objective mean gradients, the minimum-norm simplex
weights over them, a direction from the three-case rule, and a random step
x - eta * u clipped to the bounds, with u shortened to at most max_step of the
bounds diagonal. The stepped points join the set, which is then filtered to
its predicted nondominated subset and crowding-truncated. Before each
iteration the set is topped back up to n_candidates with fresh LHS points so
it cannot collapse onto a single clipped corner.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from d2emo.errors import ConfigError, ContractViolation, RunError
from d2emo.optim.core import Bounds, CandidateSet, crowding_truncate, nondominated_filter
from d2emo.optim.doe import LhsPlan, lhs_sample
from d2emo.optim.surrogate import GpSurrogate, grad_mean, predict_mean

logger = logging.getLogger(__name__)

DEGENERATE_DIFF = 1e-12
STATIONARY_RTOL = 1e-8
FW_MAX_ITERS = 500
FW_GAP = 1e-10


class DirectionCase(StrEnum):
    STATIONARY = "stationary"
    NEAR_PARALLEL = "near_parallel"
    AGGREGATED = "aggregated"


@dataclass(frozen=True)
class MgdConfig:
    n_candidates: int = 100
    iterations: int = 100
    parallel_cos_threshold: float = 0.95
    cap: int = 200
    seed: int = 0
    seed_from_archive: bool = False
    # longest step as a fraction of the bounds diagonal; None steps by the raw gradient
    max_step: float | None = 0.1
    # top the set back up to n_candidates with fresh LHS points every iteration
    refill: bool = True

    def __post_init__(self) -> None:
        if self.n_candidates < 2:
            msg = f"mgd.n_candidates must be >= 2, got {self.n_candidates}"
            raise ConfigError(msg)
        if self.iterations < 1:
            msg = f"mgd.iterations must be >= 1, got {self.iterations}"
            raise ConfigError(msg)
        if not 0.0 < self.parallel_cos_threshold < 1.0:
            msg = f"mgd.parallel_cos_threshold must lie in (0, 1), got {self.parallel_cos_threshold}"
            raise ConfigError(msg)
        if self.cap < 2:
            msg = f"mgd.cap must be >= 2, got {self.cap}"
            raise ConfigError(msg)
        if self.max_step is not None and not 0.0 < self.max_step <= 1.0:
            msg = f"mgd.max_step must lie in (0, 1] or be null, got {self.max_step}"
            raise ConfigError(msg)

    def to_dict(self) -> dict:
        return {
            "n_candidates": self.n_candidates,
            "iterations": self.iterations,
            "parallel_cos_threshold": self.parallel_cos_threshold,
            "cap": self.cap,
            "seed": self.seed,
            "seed_from_archive": self.seed_from_archive,
            "max_step": self.max_step,
            "refill": self.refill,
        }


@dataclass(frozen=True)
class DirectionOutcome:
    u: np.ndarray
    case_tag: DirectionCase
    weights: np.ndarray


def _as_gradients(gradients: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    G = np.asarray(gradients, dtype=float)
    if G.ndim != 2 or G.shape[0] < 2:
        msg = f"need m >= 2 gradient vectors as an (m, n) array, got shape {G.shape}"
        raise ContractViolation(msg)
    if not np.all(np.isfinite(G)):
        msg = "gradients must be finite"
        raise ContractViolation(msg)
    return G


def _frank_wolfe(G: np.ndarray) -> np.ndarray:
    gram = G @ G.T
    m = len(gram)
    w = np.full(m, 1.0 / m)
    for _ in range(FW_MAX_ITERS):
        grad = gram @ w
        t = int(np.argmin(grad))
        if float(w @ grad) - float(grad[t]) < FW_GAP:
            break
        a = float(w @ gram[:, t])
        b = float(w @ grad)
        c = float(gram[t, t])
        if c <= a:
            step = 1.0
        elif b <= a:
            step = 0.0
        else:
            step = (b - a) / (b + c - 2 * a)
        w = (1 - step) * w
        w[t] += step
    return w


def min_norm_weights(gradients: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Simplex weights minimizing ||sum_j w_j g_j||; closed form for m=2, Frank-Wolfe above."""
    G = _as_gradients(gradients)
    if len(G) > 2:
        return _frank_wolfe(G)
    diff = G[1] - G[0]
    denom = float(diff @ diff)
    if np.sqrt(denom) < DEGENERATE_DIFF:
        return np.array([0.5, 0.5])
    w1 = float(np.clip(diff @ G[1] / denom, 0.0, 1.0))
    return np.array([w1, 1.0 - w1])


def direction(
    gradients: Sequence[np.ndarray] | np.ndarray,
    weights: np.ndarray,
    config: MgdConfig | None = None,
) -> DirectionOutcome:
    """Three-case direction rule; argmax/argmin ties resolve to the lowest index."""
    G = _as_gradients(gradients)
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(G),) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        msg = f"weights must be a length-{len(G)} point on the simplex, got {w.tolist()}"
        raise ContractViolation(msg)
    threshold = (config or MgdConfig()).parallel_cos_threshold
    norms = np.linalg.norm(G, axis=1)
    largest = float(norms.max())
    if largest == 0.0:
        return DirectionOutcome(u=np.zeros(G.shape[1]), case_tag=DirectionCase.STATIONARY, weights=w)

    aggregated = w @ G
    if np.linalg.norm(aggregated) < STATIONARY_RTOL * largest:
        return DirectionOutcome(u=G[int(np.argmax(norms))].copy(), case_tag=DirectionCase.STATIONARY, weights=w)

    if np.all(norms > 0):
        unit = G / norms[:, None]
        cosines = unit @ unit.T
        pairs = cosines[np.triu_indices(len(G), k=1)]
        if np.all(pairs > threshold):
            return DirectionOutcome(
                u=G[int(np.argmin(norms))].copy(), case_tag=DirectionCase.NEAR_PARALLEL, weights=w
            )
    return DirectionOutcome(u=aggregated, case_tag=DirectionCase.AGGREGATED, weights=w)


def mgd_step(
    x: np.ndarray,
    outcome: DirectionOutcome,
    eta: float,
    bounds: Bounds,
    max_norm: float | None = None,
) -> np.ndarray:
    """Descent update x - eta * u, clipped to the bounds.

    With max_norm set, u is first shortened to that length if it is longer.
    """
    if not 0.0 < eta <= 1.0:
        msg = f"step factor eta must lie in (0, 1], got {eta}"
        raise ContractViolation(msg)
    x = np.asarray(x, dtype=float)
    if not np.any(outcome.u):
        return x.copy()
    u = outcome.u
    if max_norm is not None:
        length = float(np.linalg.norm(u))
        if length > max_norm:
            u = u * (max_norm / length)
    return bounds.clip(x - eta * u)


def predict_objectives(models: Sequence[GpSurrogate], X: np.ndarray) -> np.ndarray:
    """Predicted objective matrix (P, m) from one surrogate per objective."""
    return np.column_stack([predict_mean(model, X) for model in models])


def point_rng(seed: int, iteration: int, index: int) -> np.random.Generator:
    """Independent stream per (seed, iteration, point) so per-point work can run in any order."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1, iteration, index)))


def screen(X: np.ndarray, predicted: np.ndarray, cap: int) -> tuple[np.ndarray, np.ndarray]:
    """Drop exact duplicates and predicted-dominated points, then crowding-truncate to cap."""
    _, first = np.unique(X, axis=0, return_index=True)
    first = np.sort(first)
    X, predicted = X[first], predicted[first]
    keep = nondominated_filter(predicted)
    X, predicted = X[keep], predicted[keep]
    if len(X) > cap:
        keep = crowding_truncate(predicted, cap)
        X, predicted = X[keep], predicted[keep]
    return X, predicted


def initial_candidates(bounds: Bounds, config: MgdConfig, seed_points: np.ndarray | None = None) -> np.ndarray:
    plan_seed = np.random.SeedSequence(entropy=config.seed, spawn_key=(0,))
    X = lhs_sample(LhsPlan(n_points=config.n_candidates, bounds=bounds, seed=plan_seed))
    if config.seed_from_archive and seed_points is not None and len(seed_points):
        X = np.vstack([X, seed_points])
    return X


def refill_points(bounds: Bounds, config: MgdConfig, iteration: int, count: int) -> np.ndarray:
    """Fresh LHS restart points for one iteration, from their own seed stream."""
    if count < 1:
        return np.empty((0, bounds.n))
    plan_seed = np.random.SeedSequence(entropy=config.seed, spawn_key=(3, iteration))
    return lhs_sample(LhsPlan(n_points=count, bounds=bounds, seed=plan_seed))


def mgd_search(
    models: Sequence[GpSurrogate],
    bounds: Bounds,
    config: MgdConfig,
    *,
    seed_points: np.ndarray | None = None,
) -> CandidateSet:
    """Evolve an LHS-initialized candidate set by multiple-gradient descent on the surrogates."""
    if len(models) < 2:
        msg = f"MGD search needs at least two objective models, got {len(models)}"
        raise ContractViolation(msg)
    if any(model.n != bounds.n for model in models):
        msg = "all surrogate models must share the search-space dimension"
        raise ContractViolation(msg)

    X = initial_candidates(bounds, config, seed_points)
    try:
        predicted = predict_objectives(models, X)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        msg = f"surrogate evaluation failed during initialization: {exc}"
        raise RunError(msg, iteration=0) from exc
    X, predicted = screen(X, predicted, config.cap)
    max_norm = None if config.max_step is None else config.max_step * bounds.diagonal

    for iteration in range(config.iterations):
        try:
            if config.refill and len(X) < config.n_candidates:
                fresh = refill_points(bounds, config, iteration, config.n_candidates - len(X))
                X = np.vstack([X, fresh])
                predicted = np.vstack([predicted, predict_objectives(models, fresh)])
            grads = np.stack([grad_mean(model, X) for model in models], axis=1)
            cases: Counter[str] = Counter()
            stepped = []
            for i, x in enumerate(X):
                weights = min_norm_weights(grads[i])
                outcome = direction(grads[i], weights, config)
                cases[outcome.case_tag] += 1
                if not np.any(outcome.u):
                    continue
                eta = 1.0 - point_rng(config.seed, iteration, i).random()
                stepped.append(mgd_step(x, outcome, eta, bounds, max_norm))
            if stepped:
                new_X = np.vstack(stepped)
                X = np.vstack([X, new_X])
                predicted = np.vstack([predicted, predict_objectives(models, new_X)])
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            msg = f"surrogate evaluation failed at search iteration {iteration}: {exc}"
            raise RunError(msg, iteration=iteration) from exc
        if not np.all(np.isfinite(predicted)):
            msg = f"non-finite surrogate prediction at search iteration {iteration}"
            raise RunError(msg, iteration=iteration)
        X, predicted = screen(X, predicted, config.cap)
        logger.debug("mgd iteration %d: |P|=%d cases=%s", iteration, len(X), dict(cases))

    return CandidateSet(X=X, predicted=predicted)

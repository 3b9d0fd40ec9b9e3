"""Crossover-and-mutation search on surrogate means (ablation of the gradient search).

Same candidate-set life cycle as mgd_search, but offspring come from
simulated binary crossover and polynomial mutation instead of descent steps.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from d2emo.errors import ContractViolation, RunError
from d2emo.optim.core import Bounds, CandidateSet
from d2emo.optim.mgd import MgdConfig, initial_candidates, predict_objectives, screen
from d2emo.optim.surrogate import GpSurrogate

logger = logging.getLogger(__name__)

ETA_C = 20.0
ETA_M = 20.0
P_C = 1.0


def sbx_crossover(
    p1: np.ndarray,
    p2: np.ndarray,
    bounds: Bounds,
    rng: np.random.Generator,
    eta_c: float = ETA_C,
) -> tuple[np.ndarray, np.ndarray]:
    u = rng.random(p1.shape)
    beta = np.where(u <= 0.5, (2 * u) ** (1 / (eta_c + 1)), (2 * (1 - u)) ** (-1 / (eta_c + 1)))
    c1 = 0.5 * ((1 + beta) * p1 + (1 - beta) * p2)
    c2 = 0.5 * ((1 - beta) * p1 + (1 + beta) * p2)
    return bounds.clip(c1), bounds.clip(c2)


def polynomial_mutation(
    x: np.ndarray,
    bounds: Bounds,
    rng: np.random.Generator,
    eta_m: float = ETA_M,
    p_m: float | None = None,
) -> np.ndarray:
    """Mutate each variable with probability p_m (default 1/n)."""
    rate = 1.0 / bounds.n if p_m is None else p_m
    mask = rng.random(x.shape) < rate
    u = rng.random(x.shape)
    delta = np.where(u < 0.5, (2 * u) ** (1 / (eta_m + 1)) - 1, 1 - (2 * (1 - u)) ** (1 / (eta_m + 1)))
    return bounds.clip(np.where(mask, x + bounds.span * delta, x))


def sbx_search(
    models: Sequence[GpSurrogate],
    bounds: Bounds,
    config: MgdConfig,
    *,
    seed_points: np.ndarray | None = None,
) -> CandidateSet:
    if len(models) < 2:
        msg = f"search needs at least two objective models, got {len(models)}"
        raise ContractViolation(msg)

    X = initial_candidates(bounds, config, seed_points)
    predicted = predict_objectives(models, X)
    X, predicted = screen(X, predicted, config.cap)

    for generation in range(config.iterations):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(2, generation)))
        order = rng.permutation(len(X))
        if len(order) % 2:
            order = np.append(order, rng.integers(len(X)))
        offspring = []
        for a, b in order.reshape(-1, 2):
            if rng.random() < P_C:
                c1, c2 = sbx_crossover(X[a], X[b], bounds, rng)
            else:
                c1, c2 = X[a].copy(), X[b].copy()
            offspring.append(polynomial_mutation(c1, bounds, rng))
            offspring.append(polynomial_mutation(c2, bounds, rng))
        children = np.vstack(offspring)
        try:
            child_pred = predict_objectives(models, children)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            msg = f"surrogate evaluation failed at generation {generation}: {exc}"
            raise RunError(msg, iteration=generation) from exc
        X, predicted = screen(np.vstack([X, children]), np.vstack([predicted, child_pred]), config.cap)
        logger.debug("sbx generation %d: |P|=%d", generation, len(X))

    return CandidateSet(X=X, predicted=predicted)

"""Tests for the crossover/mutation variation operators and the evolutionary search ablation."""

import numpy as np
import pytest

from d2emo.errors import ContractViolation
from d2emo.optim.core import Bounds, nondominated_filter
from d2emo.optim.mgd import MgdConfig
from d2emo.optim.sbx import polynomial_mutation, sbx_crossover, sbx_search
from d2emo.optim.surrogate import GpSurrogate


def test_crossover_preserves_parent_midpoint(rng: np.random.Generator) -> None:
    bounds = Bounds.uniform(4, -100.0, 100.0)
    p1, p2 = np.array([0.1, 0.5, -0.3, 0.9]), np.array([0.4, -0.2, 0.0, 0.2])
    for _ in range(50):
        c1, c2 = sbx_crossover(p1, p2, bounds, rng)
        assert np.allclose(c1 + c2, p1 + p2)


def test_crossover_children_within_bounds(rng: np.random.Generator) -> None:
    bounds = Bounds.uniform(3)
    for _ in range(100):
        c1, c2 = sbx_crossover(rng.random(3), rng.random(3), bounds, rng, eta_c=0.5)
        assert bounds.contains(c1) and bounds.contains(c2)


def test_identical_parents_give_identical_children(rng: np.random.Generator) -> None:
    p = np.array([0.3, 0.7])
    c1, c2 = sbx_crossover(p, p, Bounds.uniform(2), rng)
    assert np.allclose(c1, p) and np.allclose(c2, p)


def test_mutation_rate_zero_is_identity(rng: np.random.Generator) -> None:
    x = np.array([0.2, 0.4, 0.6])
    assert polynomial_mutation(x, Bounds.uniform(3), rng, p_m=0.0).tolist() == x.tolist()


def test_mutation_stays_in_bounds(rng: np.random.Generator) -> None:
    bounds = Bounds(np.array([0.0, 0.0]), np.array([1.0, 4.0]))
    for _ in range(200):
        y = polynomial_mutation(np.array([0.99, 0.01]), bounds, rng, eta_m=1.0, p_m=1.0)
        assert bounds.contains(y)


class TestSbxSearch:
    def test_nondominated_and_capped(self, quadratic_models: tuple[list[GpSurrogate], Bounds]) -> None:
        models, bounds = quadratic_models
        P = sbx_search(models, bounds, MgdConfig(n_candidates=20, iterations=10, cap=15, seed=4))
        assert 1 <= len(P) <= 15
        assert len(nondominated_filter(P.predicted)) == len(P)
        assert np.all((P.X >= 0.0) & (P.X <= 2.0))

    def test_deterministic(self, quadratic_models: tuple[list[GpSurrogate], Bounds]) -> None:
        models, bounds = quadratic_models
        config = MgdConfig(n_candidates=11, iterations=3, seed=6)
        assert np.array_equal(sbx_search(models, bounds, config).X, sbx_search(models, bounds, config).X)

    def test_needs_two_models(self, quadratic_models: tuple[list[GpSurrogate], Bounds]) -> None:
        models, bounds = quadratic_models
        with pytest.raises(ContractViolation):
            sbx_search(models[:1], bounds, MgdConfig())

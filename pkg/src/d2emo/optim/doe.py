"""Latin hypercube sampling for initial designs and candidate restarts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from d2emo.errors import ContractViolation
from d2emo.optim.core import Bounds


@dataclass(frozen=True)
class LhsPlan:
    n_points: int
    bounds: Bounds
    seed: int | np.random.SeedSequence = 0

    def __post_init__(self) -> None:
        if self.n_points < 1:
            msg = f"LHS needs at least one point, got n_points={self.n_points}"
            raise ContractViolation(msg)


def lhs_sample(plan: LhsPlan) -> np.ndarray:
    """Draw plan.n_points stratified samples, one per stratum in every dimension.

    Points are placed uniformly at random inside their stratum and strata are
    assigned through an independent permutation per dimension.
    """
    rng = np.random.default_rng(plan.seed)
    sampler = qmc.LatinHypercube(d=plan.bounds.n, scramble=True, seed=rng)
    unit = sampler.random(plan.n_points)
    return qmc.scale(unit, plan.bounds.lower, plan.bounds.upper)

from pathlib import Path

import numpy as np
import pytest

from d2emo.experiment.config import ExperimentConfig, ProblemSpec
from d2emo.optim.core import Bounds
from d2emo.optim.mgd import MgdConfig
from d2emo.optim.surrogate import GpSurrogate, fit


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def quadratic_models() -> tuple[list[GpSurrogate], Bounds]:
    """Surrogates of f1 = x^2 and f2 = (x - 1)^2 on [0, 2]; the Pareto set is [0, 1]."""
    X = np.linspace(0.0, 2.0, 20)[:, None]
    models = [fit(X, X[:, 0] ** 2), fit(X, (X[:, 0] - 1.0) ** 2)]
    return models, Bounds.uniform(1, 0.0, 2.0)


@pytest.fixture()
def tiny_config() -> ExperimentConfig:
    """A ZDT3 run small enough for unit tests (10 initial points, two or three infill cycles)."""
    return ExperimentConfig(
        problem=ProblemSpec(name="zdt3", n=2),
        init_size=10,
        fe_budget=20,
        xi=5,
        mgd=MgdConfig(n_candidates=12, iterations=4, cap=20),
        seeds=(0, 1),
        pf_density=20,
    )


@pytest.fixture()
def out_dir(tmp_path: Path) -> Path:
    path = tmp_path / "out"
    path.mkdir()
    return path

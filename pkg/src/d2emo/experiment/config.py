"""Experiment configuration: dataclasses, dict parsing, and YAML/JSON loading."""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

import yaml
from dotenv import load_dotenv

from d2emo.errors import ConfigError, ContractViolation
from d2emo.experiment.problems import Problem, get_problem, parse_problem_name, problem_name
from d2emo.optim.mgd import MgdConfig

DEFAULT_FE_BUDGET = 250
DEFAULT_XI = 10
DEFAULT_SEEDS = tuple(range(11))
# true-front points per segment for metric targets and coverage
DEFAULT_PF_DENSITY = 2000


class Algorithm(StrEnum):
    MGD = "mgd"
    RANDOM = "random"
    SBX = "sbx"
    MGD_RANDOM_INFILL = "mgd-random-infill"


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    n: int
    k: int = 1

    @property
    def label(self) -> str:
        return problem_name(parse_problem_name(self.name)[0], self.k)

    def build(self) -> Problem:
        return get_problem(self.name, self.n, self.k)

    def to_dict(self) -> dict:
        return {"name": self.label, "n": self.n, "k": self.k}


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemSpec
    algorithm: Algorithm = Algorithm.MGD
    init_size: int | None = None  # None = 11 * n - 1
    fe_budget: int = DEFAULT_FE_BUDGET
    xi: int = DEFAULT_XI
    mgd: MgdConfig = field(default_factory=MgdConfig)
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    pf_density: int = DEFAULT_PF_DENSITY
    eval_workers: int = 1

    def __post_init__(self) -> None:
        init = self.initial_size
        if init < 2:
            msg = f"init_size must be >= 2, got {init}"
            raise ConfigError(msg)
        if self.fe_budget < init:
            msg = f"fe_budget ({self.fe_budget}) must be >= init_size ({init})"
            raise ConfigError(msg)
        if self.xi < 1:
            msg = f"xi must be >= 1, got {self.xi}"
            raise ConfigError(msg)
        if not self.seeds:
            msg = "seeds must list at least one seed"
            raise ConfigError(msg)
        if self.pf_density < 2:
            msg = f"pf_density must be >= 2, got {self.pf_density}"
            raise ConfigError(msg)
        if self.eval_workers < 1:
            msg = f"eval_workers must be >= 1, got {self.eval_workers}"
            raise ConfigError(msg)

    @property
    def initial_size(self) -> int:
        return 11 * self.problem.n - 1 if self.init_size is None else self.init_size

    def to_dict(self) -> dict:
        """Canonical snapshot embedded in every run record (seed list excluded)."""
        return {
            "problem": self.problem.to_dict(),
            "algorithm": str(self.algorithm),
            "init_size": self.initial_size,
            "fe_budget": self.fe_budget,
            "xi": self.xi,
            "mgd": self.mgd.to_dict(),
            "pf_density": self.pf_density,
        }


def _int(raw: dict, key: str, default: int | None) -> int | None:
    value = raw.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        msg = f"{key} must be an integer, got {value!r}"
        raise ConfigError(msg)
    return value


def _optional_float(raw: dict, key: str, default: float | None) -> float | None:
    value = raw.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int | float):
        msg = f"{key} must be a number or null, got {value!r}"
        raise ConfigError(msg)
    return float(value)


def _parse_problem(raw: dict | str) -> ProblemSpec:
    if isinstance(raw, str):
        raw = {"name": raw}
    if "name" not in raw:
        msg = "problem needs a name (zdt3, dtlz7, wfg2, optionally with -k<k>)"
        raise ConfigError(msg)
    try:
        _, suffix_k = parse_problem_name(str(raw["name"]))
    except ContractViolation as exc:
        raise ConfigError(str(exc)) from exc
    k = _int(raw, "k", suffix_k)
    n = _int(raw, "n", 3)
    if n < 2 or k < 1:
        msg = f"problem {raw['name']}: need n >= 2 and k >= 1, got n={n}, k={k}"
        raise ConfigError(msg)
    return ProblemSpec(name=str(raw["name"]).strip().lower().split("-k")[0], n=n, k=k)


def _parse_algorithm(value: str) -> Algorithm:
    try:
        return Algorithm(value)
    except ValueError as exc:
        choices = ", ".join(a.value for a in Algorithm)
        msg = f"unknown algorithm '{value}' (expected one of: {choices})"
        raise ConfigError(msg) from exc


def _parse_seeds(raw: object) -> tuple[int, ...]:
    if raw is None:
        return DEFAULT_SEEDS
    if isinstance(raw, int) and not isinstance(raw, bool):
        return tuple(range(raw))
    if isinstance(raw, list | tuple) and all(isinstance(s, int) and not isinstance(s, bool) for s in raw):
        return tuple(raw)
    msg = f"seeds must be a count or a list of integers, got {raw!r}"
    raise ConfigError(msg)


def parse_mgd_config(raw: dict) -> MgdConfig:
    defaults = MgdConfig()
    return MgdConfig(
        n_candidates=_int(raw, "n_candidates", defaults.n_candidates),
        iterations=_int(raw, "iterations", defaults.iterations),
        parallel_cos_threshold=float(raw.get("parallel_cos_threshold", defaults.parallel_cos_threshold)),
        cap=_int(raw, "cap", defaults.cap),
        seed_from_archive=bool(raw.get("seed_from_archive", defaults.seed_from_archive)),
        max_step=_optional_float(raw, "max_step", defaults.max_step),
        refill=bool(raw.get("refill", defaults.refill)),
    )


def _parse_common(raw: dict) -> dict:
    return {
        "init_size": _int(raw, "init_size", None),
        "fe_budget": _int(raw, "fe_budget", DEFAULT_FE_BUDGET),
        "xi": _int(raw, "xi", DEFAULT_XI),
        "mgd": parse_mgd_config(raw.get("mgd") or {}),
        "seeds": _parse_seeds(raw.get("seeds")),
        "pf_density": _int(raw, "pf_density", DEFAULT_PF_DENSITY),
        "eval_workers": _int(raw, "eval_workers", 1),
    }


def parse_experiment_config(raw: dict) -> ExperimentConfig:
    """Parse a raw YAML/JSON dict into an ExperimentConfig.

    No file I/O. A legacy `baseline: random` key selects the random algorithm.
    """
    if not isinstance(raw, dict):
        msg = "experiment config must be a mapping"
        raise ConfigError(msg)
    algorithm = raw.get("algorithm", Algorithm.MGD)
    if raw.get("baseline") == "random":
        algorithm = Algorithm.RANDOM
    return ExperimentConfig(
        problem=_parse_problem(raw.get("problem", "zdt3")),
        algorithm=_parse_algorithm(algorithm),
        **_parse_common(raw),
    )


def parse_bench_plan(raw: dict) -> list[ExperimentConfig]:
    """Expand `problems` x `algorithms` (falling back to `problem` / `algorithm`) into configs."""
    if not isinstance(raw, dict):
        msg = "bench config must be a mapping"
        raise ConfigError(msg)
    problems = raw.get("problems") or [raw.get("problem", "zdt3")]
    algorithms = raw.get("algorithms") or [raw.get("algorithm", Algorithm.MGD)]
    common = _parse_common(raw)
    return [
        ExperimentConfig(problem=_parse_problem(p), algorithm=_parse_algorithm(a), **common)
        for p, a in itertools.product(problems, algorithms)
    ]


def read_config_file(path: Path) -> dict:
    """Read a YAML or JSON config file after loading .env from the working directory."""
    env_file = Path.cwd() / ".env"
    if env_file.exists():
        load_dotenv(env_file, override=False)
    if not path.exists():
        msg = f"config file not found: {path}"
        raise ConfigError(msg)
    with path.open() as f:
        raw = yaml.safe_load(f)
    return raw or {}


def load_experiment_config(path: Path) -> ExperimentConfig:
    return parse_experiment_config(read_config_file(path))


def default_out_dir() -> Path:
    return Path(os.environ.get("D2EMO_OUT_DIR", "out"))


def default_workers() -> int:
    raw = os.environ.get("D2EMO_WORKERS", "1")
    try:
        workers = int(raw)
    except ValueError as exc:
        msg = f"D2EMO_WORKERS must be an integer, got {raw!r}"
        raise ConfigError(msg) from exc
    return max(1, workers)


def default_log_level() -> str:
    return os.environ.get("D2EMO_LOG_LEVEL", "WARNING").upper()

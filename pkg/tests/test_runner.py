"""Tests for the optimization loop, the random baseline, and the bench driver."""

import dataclasses
from pathlib import Path

import numpy as np
import pytest

import d2emo.experiment.runner as runner_module
from d2emo.errors import FitError
from d2emo.experiment.config import Algorithm, ExperimentConfig
from d2emo.experiment.problems import evaluate, get_problem
from d2emo.experiment.records import RunStatus, dumps_record, load_records
from d2emo.experiment.runner import bench, evaluate_in_order, fit_surrogates, run
from d2emo.optim.core import Bounds, CandidateSet
from d2emo.optim.doe import LhsPlan, lhs_sample
from d2emo.optim.mgd import MgdConfig


def _pairwise_min_distance(X: np.ndarray) -> float:
    diff = X[:, None, :] - X[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    return float(dist[np.triu_indices(len(X), k=1)].min())


class TestRun:
    def test_spends_the_budget(self, tiny_config: ExperimentConfig) -> None:
        record = run(tiny_config, 0)
        assert record.status is RunStatus.OK
        assert record.evaluations == 20
        assert record.trace[-1].archive_size == 20
        assert all(1 <= len(t.batch) <= 5 for t in record.trace)
        assert record.final_hv == record.trace[-1].hv

    def test_hv_trace_never_decreases(self, tiny_config: ExperimentConfig) -> None:
        trace = run(tiny_config, 1).hv_trace
        assert all(b >= a for a, b in zip(trace, trace[1:], strict=False))

    def test_archive_has_no_duplicates(self, tiny_config: ExperimentConfig) -> None:
        record = run(tiny_config, 2)
        assert _pairwise_min_distance(record.X) > 1e-9

    def test_objectives_are_true_evaluations(self, tiny_config: ExperimentConfig) -> None:
        record = run(tiny_config, 0)
        problem = get_problem("zdt3", 2)
        for x, f in zip(record.X, record.F, strict=True):
            assert np.array_equal(evaluate(problem, x), f)

    def test_deterministic(self, tiny_config: ExperimentConfig) -> None:
        assert dumps_record(run(tiny_config, 3)) == dumps_record(run(tiny_config, 3))

    def test_seeds_differ(self, tiny_config: ExperimentConfig) -> None:
        assert not np.array_equal(run(tiny_config, 0).X, run(tiny_config, 1).X)

    def test_last_batch_clamped_to_budget(
        self, tiny_config: ExperimentConfig, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        def plenty(models: list, bounds: Bounds, config: MgdConfig, *, seed_points: np.ndarray) -> CandidateSet:
            X = lhs_sample(LhsPlan(n_points=30, bounds=bounds, seed=config.seed))
            return CandidateSet(X=X, predicted=np.column_stack([X[:, 0], 1.0 - X[:, 0]]))

        monkeypatch.setattr(runner_module, "mgd_search", plenty)
        config = dataclasses.replace(tiny_config, fe_budget=17, xi=10)
        record = run(config, 0)
        assert record.evaluations == 17
        assert [len(t.batch) for t in record.trace] == [7]

    def test_baseline_last_batch_clamped_to_budget(self, tiny_config: ExperimentConfig) -> None:
        config = dataclasses.replace(tiny_config, algorithm=Algorithm.RANDOM, fe_budget=27, xi=10)
        record = run(config, 0)
        assert record.evaluations == 27
        assert [len(t.batch) for t in record.trace] == [10, 7]

    def test_zero_iterations_when_budget_equals_design(self, tiny_config: ExperimentConfig) -> None:
        record = run(dataclasses.replace(tiny_config, fe_budget=10), 0)
        assert record.trace == []
        assert record.final_hv == record.initial_hv

    def test_coverage_and_metric_fields(self, tiny_config: ExperimentConfig) -> None:
        record = run(tiny_config, 0)
        assert record.segments_total == 5
        assert 0 <= record.segments_covered <= 5
        assert record.pf_hv > 0
        assert record.problem["name"] == "zdt3"
        assert record.config["fe_budget"] == 20

    @pytest.mark.parametrize("algorithm", list(Algorithm))
    def test_every_algorithm(self, tiny_config: ExperimentConfig, algorithm: Algorithm) -> None:
        record = run(dataclasses.replace(tiny_config, algorithm=algorithm), 0)
        assert record.status is RunStatus.OK
        assert record.evaluations == 20
        assert record.algorithm == str(algorithm)


class TestFailurePaths:
    def test_fit_failure_ends_run(self, tiny_config: ExperimentConfig, monkeypatch: pytest.MonkeyPatch) -> None:
        def broken(X: np.ndarray, F: np.ndarray) -> list:
            msg = "covariance not positive definite"
            raise FitError(msg)

        monkeypatch.setattr(runner_module, "fit_surrogates", broken)
        record = run(tiny_config, 0)
        assert record.status is RunStatus.FIT_FAILED
        assert "iteration 0" in record.diagnostic
        assert record.evaluations == 10
        assert record.trace == []

    def test_empty_batch_ends_run(self, tiny_config: ExperimentConfig, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setattr(runner_module, "select_batch", lambda *args, **kwargs: [])
        record = run(tiny_config, 0)
        assert record.status is RunStatus.EMPTY_BATCH
        assert record.evaluations == 10


class TestRandomBaseline:
    def test_single_clamped_batch(self, tiny_config: ExperimentConfig) -> None:
        config = dataclasses.replace(tiny_config, algorithm=Algorithm.RANDOM, fe_budget=17, xi=10)
        record = run(config, 0)
        assert record.evaluations == 17
        assert len(record.trace) == 1
        assert len(record.trace[0].batch) == 7

    def test_shares_initial_design_with_mgd(self, tiny_config: ExperimentConfig) -> None:
        baseline = run(dataclasses.replace(tiny_config, algorithm=Algorithm.RANDOM), 5)
        mgd = run(tiny_config, 5)
        assert np.array_equal(baseline.X[:10], mgd.X[:10])
        assert baseline.initial_hv == mgd.initial_hv


def test_fit_surrogates_one_model_per_objective() -> None:
    gen = np.random.default_rng(0)
    X = gen.random((12, 2))
    F = np.column_stack([X[:, 0], X[:, 1] ** 2, X.sum(axis=1)])
    models = fit_surrogates(X, F)
    assert len(models) == 3
    assert [float(np.ptp(m.f)) for m in models] == [float(np.ptp(F[:, j])) for j in range(3)]


def test_parallel_evaluation_keeps_row_order() -> None:
    problem = get_problem("dtlz7", 3)
    X = np.random.default_rng(1).random((9, 3))
    serial = evaluate_in_order(problem, X, workers=1)
    threaded = evaluate_in_order(problem, X, workers=4)
    assert all(np.array_equal(a, b) for a, b in zip(serial, threaded, strict=True))


class TestBench:
    def test_writes_one_record_per_seed(self, tiny_config: ExperimentConfig, tmp_path: Path) -> None:
        runs_dir = tmp_path / "runs"
        records = bench([tiny_config], runs_dir=runs_dir)
        assert [r.seed for r in records] == [0, 1]
        assert sorted(p.name for p in runs_dir.glob("*.json")) == ["zdt3-n2-mgd-s0.json", "zdt3-n2-mgd-s1.json"]
        assert [dumps_record(r) for r in load_records(runs_dir)] == [dumps_record(r) for r in records]

    def test_process_pool_matches_serial(self, tiny_config: ExperimentConfig) -> None:
        serial = bench([tiny_config], workers=1)
        pooled = bench([tiny_config], workers=2)
        assert [dumps_record(r) for r in pooled] == [dumps_record(r) for r in serial]

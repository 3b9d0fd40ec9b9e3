"""The optimization loop: initial design, surrogate fits, search, infill, expensive evaluation."""

from __future__ import annotations

import dataclasses
import logging
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from pathlib import Path

import numpy as np

from d2emo.errors import FitError
from d2emo.experiment.config import Algorithm, ExperimentConfig
from d2emo.experiment.problems import (
    Problem,
    cached_pf_sample,
    cached_pf_segments,
    evaluate,
    metric_ref,
    segment_coverage,
)
from d2emo.experiment.records import IterationTrace, RunRecord, RunStatus, save_record
from d2emo.optim.core import Archive, CandidateSet, Solution
from d2emo.optim.doe import LhsPlan, lhs_sample
from d2emo.optim.hv import hv2d, select_batch, select_random_batch
from d2emo.optim.mgd import MgdConfig, mgd_search
from d2emo.optim.sbx import sbx_search
from d2emo.optim.surrogate import GpSurrogate, fit

logger = logging.getLogger(__name__)

COVERAGE_MARGIN = 0.05

# spawn-key prefixes for the independent random streams of one run
_INIT_STREAM = 10
_SEARCH_STREAM = 11
_INFILL_STREAM = 12
_BASELINE_STREAM = 13

Search = Callable[..., CandidateSet]


def _stream(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=key)


def fit_surrogates(X: np.ndarray, F: np.ndarray) -> list[GpSurrogate]:
    """One GP per objective column, fitted concurrently."""
    with ThreadPoolExecutor(max_workers=F.shape[1]) as pool:
        return list(pool.map(lambda j: fit(X, F[:, j]), range(F.shape[1])))


def evaluate_in_order(problem: Problem, X: np.ndarray, workers: int = 1) -> list[np.ndarray]:
    """Expensive evaluations; results come back in row order whatever the worker count."""
    if workers <= 1 or len(X) <= 1:
        return [evaluate(problem, x) for x in X]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda x: evaluate(problem, x), X))


def _commit(archive: Archive, problem: Problem, X: np.ndarray, workers: int) -> None:
    for x, f in zip(X, evaluate_in_order(problem, X, workers), strict=True):
        archive.add(Solution(x=x, objectives=f))


def _initial_archive(problem: Problem, config: ExperimentConfig, seed: int) -> Archive:
    plan = LhsPlan(n_points=config.initial_size, bounds=problem.bounds, seed=_stream(seed, _INIT_STREAM))
    archive = Archive(bounds=problem.bounds)
    _commit(archive, problem, lhs_sample(plan), config.eval_workers)
    return archive


def _search_config(config: ExperimentConfig, seed: int, iteration: int) -> MgdConfig:
    derived = int(_stream(seed, _SEARCH_STREAM, iteration).generate_state(1)[0])
    return dataclasses.replace(config.mgd, seed=derived)


def _new_record(problem: Problem, config: ExperimentConfig, seed: int, archive: Archive) -> RunRecord:
    ref = metric_ref(problem, config.pf_density)
    return RunRecord(
        config=config.to_dict(),
        problem=problem.metadata(),
        seed=seed,
        X=archive.X,
        F=archive.F,
        metric_ref=ref.tolist(),
        initial_hv=hv2d(archive.F, ref),
        pf_hv=hv2d(cached_pf_sample(problem, config.pf_density), ref),
    )


def _finish(
    record: RunRecord, problem: Problem, config: ExperimentConfig, archive: Archive, started: float
) -> RunRecord:
    record.X = archive.X
    record.F = archive.F
    record.final_hv = record.hv_trace[-1]
    segments = cached_pf_segments(problem, config.pf_density)
    record.segments_total = len(segments)
    record.segments_covered = segment_coverage(archive.front(), segments, COVERAGE_MARGIN)
    record.wall_clock = time.perf_counter() - started
    logger.info(
        "%s: %s after %d evaluations, hv=%.6f (%.1f%% of true front), segments %d/%d",
        record.stem(),
        record.status,
        record.evaluations,
        record.final_hv,
        100.0 * record.hv_ratio,
        record.segments_covered,
        record.segments_total,
    )
    return record


def _surrogate_loop(config: ExperimentConfig, seed: int, search: Search, *, random_infill: bool) -> RunRecord:
    started = time.perf_counter()
    problem = config.problem.build()
    archive = _initial_archive(problem, config, seed)
    record = _new_record(problem, config, seed, archive)
    ref = np.asarray(record.metric_ref)

    iteration = 0
    while len(archive) < config.fe_budget:
        batch_size = min(config.xi, config.fe_budget - len(archive))
        try:
            models = fit_surrogates(archive.X, archive.F)
        except FitError as exc:
            record.status = RunStatus.FIT_FAILED
            record.diagnostic = f"iteration {iteration}: {exc}"
            logger.warning("%s: GP fit failed at iteration %d: %s", problem.name, iteration, exc)
            break

        search_config = _search_config(config, seed, iteration)
        candidates = search(models, problem.bounds, search_config, seed_points=archive.X)
        if random_infill:
            rng = np.random.default_rng(_stream(seed, _INFILL_STREAM, iteration))
            batch = select_random_batch(candidates, batch_size, archive, rng)
        else:
            batch = select_batch(candidates, batch_size, archive)
        if not batch:
            record.status = RunStatus.EMPTY_BATCH
            record.diagnostic = f"iteration {iteration}: no eligible candidate among {len(candidates)}"
            logger.warning("%s: empty infill batch at iteration %d", problem.name, iteration)
            break

        X = np.vstack([s.x for s in batch])
        _commit(archive, problem, X, config.eval_workers)
        record.trace.append(
            IterationTrace(
                iteration=iteration,
                archive_size=len(archive),
                hv=hv2d(archive.F, ref),
                candidates=len(candidates),
                batch=X.tolist(),
            )
        )
        logger.debug("%s iteration %d: |A|=%d hv=%.6f", problem.name, iteration, len(archive), record.trace[-1].hv)
        iteration += 1

    return _finish(record, problem, config, archive, started)


def run(config: ExperimentConfig, seed: int) -> RunRecord:
    """One full optimization run of config.algorithm; deterministic given seed."""
    match config.algorithm:
        case Algorithm.RANDOM:
            return run_baseline_random(config, seed)
        case Algorithm.SBX:
            return _surrogate_loop(config, seed, sbx_search, random_infill=False)
        case Algorithm.MGD_RANDOM_INFILL:
            return _surrogate_loop(config, seed, mgd_search, random_infill=True)
        case _:
            return _surrogate_loop(config, seed, mgd_search, random_infill=False)


def run_baseline_random(config: ExperimentConfig, seed: int) -> RunRecord:
    """Same loop shape as run, but every batch is a fresh LHS design deduplicated against the archive."""
    started = time.perf_counter()
    problem = config.problem.build()
    archive = _initial_archive(problem, config, seed)
    record = _new_record(problem, config, seed, archive)
    ref = np.asarray(record.metric_ref)

    iteration = 0
    while len(archive) < config.fe_budget:
        batch_size = min(config.xi, config.fe_budget - len(archive))
        plan = LhsPlan(n_points=batch_size, bounds=problem.bounds, seed=_stream(seed, _BASELINE_STREAM, iteration))
        X = np.array([x for x in lhs_sample(plan) if not archive.contains(x)]).reshape(-1, problem.n)
        if len(X) == 0:
            record.status = RunStatus.EMPTY_BATCH
            record.diagnostic = f"iteration {iteration}: every sampled point duplicates the archive"
            break
        _commit(archive, problem, X, config.eval_workers)
        record.trace.append(
            IterationTrace(
                iteration=iteration,
                archive_size=len(archive),
                hv=hv2d(archive.F, ref),
                candidates=batch_size,
                batch=X.tolist(),
            )
        )
        iteration += 1

    return _finish(record, problem, config, archive, started)


def _run_job(job: tuple[ExperimentConfig, int]) -> RunRecord:
    config, seed = job
    return run(config, seed)


def bench(
    configs: Sequence[ExperimentConfig],
    *,
    workers: int = 1,
    runs_dir: Path | None = None,
    timing: bool = False,
) -> list[RunRecord]:
    """Every (config, seed) pair; independent runs go to a process pool when workers > 1.

    Records are returned (and written) in job order.
    """
    jobs = [(config, seed) for config in configs for seed in config.seeds]
    logger.info("bench: %d runs on %d worker(s)", len(jobs), workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_job, jobs))
    else:
        records = [_run_job(job) for job in jobs]
    if runs_dir is not None:
        for record in records:
            save_record(record, runs_dir, timing=timing)
    return records

"""d2emo CLI: run, bench, report, and true-front export."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING

import typer

if TYPE_CHECKING:
    from d2emo.experiment.records import RunRecord

app = typer.Typer(
    name="d2emo",
    help="Surrogate-assisted multiple-gradient descent for expensive bi-objective problems.",
    no_args_is_help=True,
)


@app.callback()
def main(
    log_level: str | None = typer.Option(
        None, "--log-level", help="Logging level (DEBUG, INFO, WARNING, ...). Default: $D2EMO_LOG_LEVEL or WARNING."
    ),
) -> None:
    from d2emo.experiment.config import default_log_level

    logging.basicConfig(
        level=(log_level or default_log_level()).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _fail(message: str) -> typer.Exit:
    typer.echo(f"Error: {message}", err=True)
    return typer.Exit(1)


def _overrides(**flags: object) -> dict:
    return {key: value for key, value in flags.items() if value is not None}


def _apply(raw: dict, overrides: dict) -> dict:
    """Merge CLI flags into a raw config dict; flags win over file values."""
    raw = dict(raw)
    problem = raw.get("problem", "zdt3")
    problem = dict(problem) if isinstance(problem, dict) else {"name": problem}
    for flag, key in (("problem", "name"), ("n", "n"), ("k", "k")):
        if flag in overrides:
            problem[key] = overrides[flag]
    raw["problem"] = problem
    if "problem" in overrides or "n" in overrides or "k" in overrides:
        raw.pop("problems", None)
    mgd = dict(raw.get("mgd") or {})
    if "iterations" in overrides:
        mgd["iterations"] = overrides["iterations"]
    if "candidates" in overrides:
        mgd["n_candidates"] = overrides["candidates"]
    raw["mgd"] = mgd
    for flag, key in (("budget", "fe_budget"), ("xi", "xi"), ("density", "pf_density"), ("seeds", "seeds")):
        if flag in overrides:
            raw[key] = overrides[flag]
    if "algo" in overrides:
        raw["algorithm"] = overrides["algo"]
        raw.pop("algorithms", None)
    return raw


def _parse_seeds(value: str | None) -> list[int] | int | None:
    if value is None:
        return None
    try:
        if "," in value:
            return [int(s) for s in value.split(",") if s.strip()]
        return int(value)
    except ValueError as exc:
        raise _fail(f"--seeds must be a count or a comma list of integers, got '{value}'") from exc


def _raw_config(config: Path | None) -> dict:
    from d2emo.experiment.config import read_config_file

    return read_config_file(config) if config is not None else {}


def _print_record(record: RunRecord) -> None:
    mark = "✓" if str(record.status) == "ok" else "✗"
    typer.echo(
        f"  {mark} {record.stem()}: {record.evaluations} FEs, HV {record.final_hv:.6f} "
        f"({100 * record.hv_ratio:.1f}% of true front), segments {record.segments_covered}/{record.segments_total}"
        + (f" [{record.status}: {record.diagnostic}]" if str(record.status) != "ok" else "")
    )


@app.command()
def run(
    config: Path | None = typer.Option(None, "--config", help="YAML or JSON experiment config."),
    problem: str | None = typer.Option(None, "--problem", help="Problem name, e.g. zdt3, dtlz7-k2, wfg2."),
    n: int | None = typer.Option(None, "--n", help="Decision dimension."),
    k: int | None = typer.Option(None, "--k", help="Disconnection parameter (1 = standard form)."),
    budget: int | None = typer.Option(None, "--budget", help="Expensive-evaluation budget."),
    xi: int | None = typer.Option(None, "--xi", help="Infill batch size."),
    seed: int = typer.Option(0, "--seed", help="Run seed."),
    algo: str | None = typer.Option(None, "--algo", help="mgd, random, sbx, or mgd-random-infill."),
    iterations: int | None = typer.Option(None, "--iterations", help="Search iterations per cycle."),
    candidates: int | None = typer.Option(None, "--candidates", help="Initial candidates per search."),
    density: int | None = typer.Option(None, "--density", help="True-front points per segment."),
    out: Path | None = typer.Option(None, "--out", help="Output directory. Default: $D2EMO_OUT_DIR or ./out."),
    timing: bool = typer.Option(False, "--timing", help="Persist wall-clock time in the record."),
) -> None:
    """Run one configuration with one seed and write its record."""
    from d2emo.errors import D2emoError
    from d2emo.experiment.config import default_out_dir, parse_experiment_config
    from d2emo.experiment.records import save_record
    from d2emo.experiment.runner import run as run_once

    out_dir = out or default_out_dir()
    try:
        flags = _overrides(
            problem=problem,
            n=n,
            k=k,
            budget=budget,
            xi=xi,
            algo=algo,
            iterations=iterations,
            candidates=candidates,
            density=density,
        )
        experiment = parse_experiment_config(_apply(_raw_config(config), flags))
        record = run_once(experiment, seed)
    except D2emoError as exc:
        raise _fail(str(exc)) from exc

    path = save_record(record, out_dir / "runs", timing=timing)
    _print_record(record)
    typer.echo(f"✓ Wrote {path}")
    raise typer.Exit(0 if str(record.status) == "ok" else 1)


@app.command()
def bench(
    config: Path | None = typer.Option(None, "--config", help="YAML or JSON bench config (problems x algorithms)."),
    problem: str | None = typer.Option(None, "--problem", help="Single problem instead of the config's list."),
    n: int | None = typer.Option(None, "--n", help="Decision dimension."),
    k: int | None = typer.Option(None, "--k", help="Disconnection parameter."),
    budget: int | None = typer.Option(None, "--budget", help="Expensive-evaluation budget."),
    xi: int | None = typer.Option(None, "--xi", help="Infill batch size."),
    seeds: str | None = typer.Option(None, "--seeds", help="Seed count (e.g. 11) or comma list (e.g. 0,1,2)."),
    algo: str | None = typer.Option(None, "--algo", help="Single algorithm instead of the config's list."),
    iterations: int | None = typer.Option(None, "--iterations", help="Search iterations per cycle."),
    candidates: int | None = typer.Option(None, "--candidates", help="Initial candidates per search."),
    density: int | None = typer.Option(None, "--density", help="True-front points per segment."),
    workers: int | None = typer.Option(None, "--workers", help="Parallel runs. Default: $D2EMO_WORKERS or 1."),
    out: Path | None = typer.Option(None, "--out", help="Output directory. Default: $D2EMO_OUT_DIR or ./out."),
    timing: bool = typer.Option(False, "--timing", help="Persist wall-clock time in records and results.csv."),
) -> None:
    """Run a problem x algorithm x seed matrix, then write the report."""
    from d2emo.errors import D2emoError
    from d2emo.experiment.config import default_out_dir, default_workers, parse_bench_plan
    from d2emo.experiment.report import emit_report
    from d2emo.experiment.runner import bench as run_bench

    out_dir = out or default_out_dir()
    try:
        flags = _overrides(
            problem=problem,
            n=n,
            k=k,
            budget=budget,
            xi=xi,
            algo=algo,
            seeds=_parse_seeds(seeds),
            iterations=iterations,
            candidates=candidates,
            density=density,
        )
        plan = parse_bench_plan(_apply(_raw_config(config), flags))
        typer.echo(f"Running {sum(len(c.seeds) for c in plan)} runs ({len(plan)} configurations)...")
        records = run_bench(plan, workers=workers or default_workers(), runs_dir=out_dir / "runs", timing=timing)
        emit_report(records, out_dir, timing=timing)
    except D2emoError as exc:
        raise _fail(str(exc)) from exc

    for record in records:
        _print_record(record)
    failed = [r for r in records if str(r.status) != "ok"]
    if failed:
        typer.echo(f"✗ {len(failed)} of {len(records)} runs did not finish cleanly", err=True)
        raise typer.Exit(1)
    typer.echo(f"✓ Report written to {out_dir}")


@app.command()
def report(
    runs: Path = typer.Argument(..., help="Directory of run records (*.json)."),
    out: Path | None = typer.Option(None, "--out", help="Output directory. Default: $D2EMO_OUT_DIR or ./out."),
    reference: str = typer.Option("mgd", "--reference", help="Algorithm the others are compared against."),
    timing: bool = typer.Option(False, "--timing", help="Include wall-clock time in results.csv."),
) -> None:
    """Rebuild tables and plot data from persisted run records."""
    from d2emo.errors import D2emoError
    from d2emo.experiment.config import default_out_dir
    from d2emo.experiment.records import load_records
    from d2emo.experiment.report import emit_report

    out_dir = out or default_out_dir()
    try:
        written = emit_report(load_records(runs), out_dir, reference=reference, timing=timing)
    except D2emoError as exc:
        raise _fail(str(exc)) from exc
    typer.echo(f"✓ Wrote {len(written)} files to {out_dir}")


@app.command()
def pf(
    problem: str = typer.Option("zdt3", "--problem", help="Problem name."),
    n: int = typer.Option(3, "--n", help="Decision dimension."),
    k: int | None = typer.Option(None, "--k", help="Disconnection parameter."),
    density: int = typer.Option(200, "--density", help="Points per front segment."),
    out: Path | None = typer.Option(None, "--out", help="Output directory. Default: $D2EMO_OUT_DIR or ./out."),
) -> None:
    """Write a true Pareto-front sample as pf_<problem>-n<n>.csv."""
    import pandas as pd

    from d2emo.errors import D2emoError
    from d2emo.experiment.config import default_out_dir
    from d2emo.experiment.problems import get_problem, pf_segments

    out_dir = out or default_out_dir()
    try:
        target = get_problem(problem, n, k)
        segments = pf_segments(target, density)
    except D2emoError as exc:
        raise _fail(str(exc)) from exc

    frame = pd.concat(
        [pd.DataFrame({"segment": i, "f1": seg[:, 0], "f2": seg[:, 1]}) for i, seg in enumerate(segments)],
        ignore_index=True,
    ).sort_values("f1", kind="stable")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"pf_{target.name}-n{n}.csv"
    frame.to_csv(path, index=False)
    label = " (reconstructed variant)" if target.reconstructed else ""
    typer.echo(f"✓ {target.name}{label}: {len(frame)} points in {len(segments)} segments -> {path}")

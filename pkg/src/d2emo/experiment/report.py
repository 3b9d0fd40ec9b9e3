"""Comparison reports and plot data built from run records.

Files written into the output directory:

- results.csv      one row per run
- table.csv/.txt   median(MAD) and mean(std) of final HV per problem cell and algorithm,
                   a dagger when the reference algorithm differs significantly, * on the best median
- ranks.csv        Scott-Knott rank per cell and algorithm, plus the rank sum
- effects.csv      A12 of the reference algorithm against each opponent, per cell
- effects_summary.csv  share of equal/small/medium/large effects per opponent
- front_<run>.csv  nondominated archive front of each run
- pf_<problem>-n<n>.csv  true-front sample per problem
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from d2emo.errors import ContractViolation, ReportError
from d2emo.experiment.config import Algorithm
from d2emo.experiment.problems import cached_pf_sample, get_problem
from d2emo.experiment.records import RunRecord
from d2emo.experiment.stats import Effect, SampleGroup, a12, a12_class, scott_knott, wilcoxon_signed_rank
from d2emo.optim.core import nondominated_filter

logger = logging.getLogger(__name__)

DAGGER = "†"
BEST = "*"


def _check_consistent(records: Sequence[RunRecord]) -> None:
    if not records:
        msg = "no run records to report"
        raise ReportError(msg)
    ms = {int(r.problem.get("m", 2)) for r in records}
    if len(ms) > 1:
        msg = f"records mix objective counts {sorted(ms)}"
        raise ReportError(msg)


def results_frame(records: Sequence[RunRecord], *, timing: bool = False) -> pd.DataFrame:
    rows = []
    for r in records:
        row = {
            "problem": r.problem["name"],
            "n": int(r.problem["n"]),
            "k": int(r.problem.get("k", 1)),
            "variant": r.problem.get("variant", "standard"),
            "algorithm": r.algorithm,
            "seed": r.seed,
            "status": str(r.status),
            "evaluations": r.evaluations,
            "final_hv": r.final_hv,
            "hv_ratio": r.hv_ratio,
            "segments_covered": r.segments_covered,
            "segments_total": r.segments_total,
        }
        if timing:
            row["wall_clock"] = r.wall_clock
        rows.append(row)
    frame = pd.DataFrame(rows)
    return frame.sort_values(["problem", "n", "algorithm", "seed"], kind="stable").reset_index(drop=True)


def _algorithms(results: pd.DataFrame, reference: str) -> list[str]:
    present = sorted(results["algorithm"].unique())
    return [reference, *(a for a in present if a != reference)] if reference in present else present


def _paired(cell: pd.DataFrame, reference: str, other: str) -> tuple[np.ndarray, np.ndarray]:
    left = cell[cell["algorithm"] == reference][["seed", "final_hv"]]
    right = cell[cell["algorithm"] == other][["seed", "final_hv"]]
    joined = left.merge(right, on="seed", suffixes=("_ref", "_other"))
    return joined["final_hv_ref"].to_numpy(), joined["final_hv_other"].to_numpy()


def _significant(a: np.ndarray, b: np.ndarray) -> bool:
    try:
        return wilcoxon_signed_rank(a, b).significant
    except ContractViolation:
        return False


def comparison_table(results: pd.DataFrame, reference: str) -> pd.DataFrame:
    algorithms = _algorithms(results, reference)
    rows = []
    for (problem, n), cell in results.groupby(["problem", "n"], sort=True):
        row: dict[str, object] = {"problem": problem, "n": n}
        medians = {}
        for algo in algorithms:
            values = cell.loc[cell["algorithm"] == algo, "final_hv"].to_numpy()
            if values.size:
                medians[algo] = float(np.median(values))
        best = max(medians, key=medians.__getitem__) if medians else None
        for algo in algorithms:
            values = cell.loc[cell["algorithm"] == algo, "final_hv"].to_numpy()
            if values.size == 0:
                row[f"{algo} median(MAD)"] = ""
                row[f"{algo} mean(std)"] = ""
                continue
            median = float(np.median(values))
            mad = float(np.median(np.abs(values - median)))
            text = f"{median:.4f}({mad:.2e})"
            if algo != reference and _significant(*_paired(cell, reference, algo)):
                text += DAGGER
            if algo == best:
                text += BEST
            row[f"{algo} median(MAD)"] = text
            spread = float(values.std(ddof=1)) if values.size > 1 else 0.0
            row[f"{algo} mean(std)"] = f"{values.mean():.4f}({spread:.2e})"
        rows.append(row)
    return pd.DataFrame(rows)


def ranks_table(results: pd.DataFrame, reference: str) -> pd.DataFrame:
    algorithms = _algorithms(results, reference)
    rows = []
    for (problem, n), cell in results.groupby(["problem", "n"], sort=True):
        groups = [
            SampleGroup(label=algo, values=cell.loc[cell["algorithm"] == algo, "final_hv"].to_numpy())
            for algo in algorithms
            if (cell["algorithm"] == algo).any()
        ]
        rows.append({"problem": problem, "n": n, **scott_knott(groups)})
    frame = pd.DataFrame(rows, columns=["problem", "n", *algorithms])
    total = {"problem": "rank-sum", "n": ""} | {a: frame[a].sum() for a in algorithms}
    return pd.concat([frame, pd.DataFrame([total])], ignore_index=True)


def effects_tables(results: pd.DataFrame, reference: str) -> tuple[pd.DataFrame, pd.DataFrame]:
    algorithms = _algorithms(results, reference)
    rows = []
    for (problem, n), cell in results.groupby(["problem", "n"], sort=True):
        ref_values = cell.loc[cell["algorithm"] == reference, "final_hv"].to_numpy()
        if ref_values.size == 0:
            continue
        for other in algorithms[1:]:
            values = cell.loc[cell["algorithm"] == other, "final_hv"].to_numpy()
            if values.size == 0:
                continue
            value = a12(ref_values, values)
            rows.append(
                {
                    "problem": problem,
                    "n": n,
                    "reference": reference,
                    "opponent": other,
                    "a12": value,
                    "effect": str(a12_class(value)),
                }
            )
    effects = pd.DataFrame(rows, columns=["problem", "n", "reference", "opponent", "a12", "effect"])
    classes = [str(e) for e in Effect]
    if effects.empty:
        return effects, pd.DataFrame(columns=["opponent", *classes])
    shares = (
        effects.groupby("opponent")["effect"]
        .value_counts(normalize=True)
        .unstack(fill_value=0.0)
        .reindex(columns=classes, fill_value=0.0)
        .mul(100.0)
        .reset_index()
    )
    shares.columns.name = None
    return effects, shares


def front_frame(record: RunRecord) -> pd.DataFrame:
    F = record.F
    front = F[nondominated_filter(F)] if len(F) else F.reshape(0, 2)
    front = front[np.argsort(front[:, 0], kind="stable")]
    return pd.DataFrame(front, columns=[f"f{j + 1}" for j in range(front.shape[1])])


def pf_frame(problem_name: str, n: int, density: int) -> pd.DataFrame:
    pf = cached_pf_sample(get_problem(problem_name, n), density)
    return pd.DataFrame(pf, columns=["f1", "f2"])


def _write(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False)
    return path


def emit_report(
    records: Sequence[RunRecord],
    out_dir: Path,
    *,
    reference: str = Algorithm.MGD,
    timing: bool = False,
) -> list[Path]:
    """Write every report and plot-data file; returns the written paths."""
    _check_consistent(records)
    out_dir.mkdir(parents=True, exist_ok=True)
    reference = str(reference)
    results = results_frame(records, timing=timing)
    written = [_write(results, out_dir / "results.csv")]

    table = comparison_table(results, reference)
    written.append(_write(table, out_dir / "table.csv"))
    seeds = results.groupby(["problem", "n", "algorithm"])["seed"].nunique()
    footer = (
        f"runs per cell: {int(seeds.min())}-{int(seeds.max())}; "
        f"{DAGGER} p < 0.05 vs {reference}; {BEST} best median\n"
    )
    (out_dir / "table.txt").write_text(table.to_string(index=False) + "\n" + footer)
    written.append(out_dir / "table.txt")

    written.append(_write(ranks_table(results, reference), out_dir / "ranks.csv"))
    effects, shares = effects_tables(results, reference)
    written.append(_write(effects, out_dir / "effects.csv"))
    written.append(_write(shares, out_dir / "effects_summary.csv"))

    for record in sorted(records, key=lambda r: r.stem()):
        written.append(_write(front_frame(record), out_dir / f"front_{record.stem()}.csv"))

    cells = sorted({(r.problem["name"], int(r.problem["n"]), int(r.config.get("pf_density", 2000))) for r in records})
    for name, n, density in cells:
        written.append(_write(pf_frame(name, n, density), out_dir / f"pf_{name}-n{n}.csv"))

    logger.info("report: %d files in %s", len(written), out_dir)
    return written

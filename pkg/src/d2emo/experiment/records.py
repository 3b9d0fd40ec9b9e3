"""Run records and their JSON persistence.

Floats are written with Python's shortest round-trip repr, so a record
loaded back and re-saved is byte-identical. Wall-clock time is only
persisted when explicitly requested.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

import numpy as np

from d2emo.errors import ReportError

SCHEMA_VERSION = 1


class RunStatus(StrEnum):
    OK = "ok"
    FIT_FAILED = "fit_failed"
    EMPTY_BATCH = "empty_batch"


@dataclass(frozen=True)
class IterationTrace:
    iteration: int
    archive_size: int
    hv: float
    candidates: int
    batch: list[list[float]]

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "archive_size": self.archive_size,
            "hv": self.hv,
            "candidates": self.candidates,
            "batch": self.batch,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> IterationTrace:
        return cls(
            iteration=int(raw["iteration"]),
            archive_size=int(raw["archive_size"]),
            hv=float(raw["hv"]),
            candidates=int(raw["candidates"]),
            batch=[[float(v) for v in x] for x in raw["batch"]],
        )


@dataclass
class RunRecord:
    config: dict
    problem: dict
    seed: int
    X: np.ndarray
    F: np.ndarray
    metric_ref: list[float]
    initial_hv: float
    trace: list[IterationTrace] = field(default_factory=list)
    status: RunStatus = RunStatus.OK
    diagnostic: str = ""
    final_hv: float = 0.0
    pf_hv: float = 0.0
    segments_covered: int = 0
    segments_total: int = 0
    wall_clock: float | None = None

    @property
    def algorithm(self) -> str:
        return self.config["algorithm"]

    @property
    def evaluations(self) -> int:
        return len(self.X)

    @property
    def hv_ratio(self) -> float:
        return self.final_hv / self.pf_hv if self.pf_hv > 0 else 0.0

    @property
    def hv_trace(self) -> list[float]:
        return [self.initial_hv] + [t.hv for t in self.trace]

    @property
    def cell(self) -> tuple[str, int]:
        return self.problem["name"], int(self.problem["n"])

    def stem(self) -> str:
        name, n = self.cell
        return f"{name}-n{n}-{self.algorithm}-s{self.seed}"

    def to_dict(self, *, timing: bool = False) -> dict:
        raw = {
            "schema": SCHEMA_VERSION,
            "config": self.config,
            "problem": self.problem,
            "seed": self.seed,
            "status": str(self.status),
            "diagnostic": self.diagnostic,
            "metric_ref": [float(v) for v in self.metric_ref],
            "initial_hv": float(self.initial_hv),
            "final_hv": float(self.final_hv),
            "pf_hv": float(self.pf_hv),
            "segments_covered": self.segments_covered,
            "segments_total": self.segments_total,
            "archive": [
                {"x": x.tolist(), "f": f.tolist()} for x, f in zip(self.X, self.F, strict=True)
            ],
            "trace": [t.to_dict() for t in self.trace],
        }
        if timing and self.wall_clock is not None:
            raw["wall_clock"] = self.wall_clock
        return raw

    @classmethod
    def from_dict(cls, raw: dict) -> RunRecord:
        archive = raw["archive"]
        n = int(raw["problem"]["n"])
        m = int(raw["problem"].get("m", 2))
        return cls(
            config=raw["config"],
            problem=raw["problem"],
            seed=int(raw["seed"]),
            X=np.array([e["x"] for e in archive], dtype=float).reshape(-1, n),
            F=np.array([e["f"] for e in archive], dtype=float).reshape(-1, m),
            metric_ref=[float(v) for v in raw["metric_ref"]],
            initial_hv=float(raw["initial_hv"]),
            trace=[IterationTrace.from_dict(t) for t in raw["trace"]],
            status=RunStatus(raw["status"]),
            diagnostic=raw.get("diagnostic", ""),
            final_hv=float(raw["final_hv"]),
            pf_hv=float(raw["pf_hv"]),
            segments_covered=int(raw["segments_covered"]),
            segments_total=int(raw["segments_total"]),
            wall_clock=raw.get("wall_clock"),
        )


def dumps_record(record: RunRecord, *, timing: bool = False) -> str:
    return json.dumps(record.to_dict(timing=timing), indent=2) + "\n"


def save_record(record: RunRecord, directory: Path, *, timing: bool = False) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{record.stem()}.json"
    path.write_text(dumps_record(record, timing=timing))
    return path


def load_record(path: Path) -> RunRecord:
    try:
        raw = json.loads(path.read_text())
        return RunRecord.from_dict(raw)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        msg = f"cannot read run record {path}: {exc}"
        raise ReportError(msg) from exc


def load_records(directory: Path) -> list[RunRecord]:
    """All records in a directory, in file-name order."""
    paths = sorted(directory.glob("*.json"))
    if not paths:
        msg = f"no run records found in {directory}"
        raise ReportError(msg)
    return [load_record(p) for p in paths]

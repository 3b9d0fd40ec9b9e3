"""Tests for run records and their JSON persistence."""

import json
from pathlib import Path

import numpy as np
import pytest

from d2emo.errors import ReportError
from d2emo.experiment.records import (
    IterationTrace,
    RunRecord,
    RunStatus,
    dumps_record,
    load_record,
    load_records,
    save_record,
)


def _record(seed: int = 0, **overrides) -> RunRecord:
    fields = {
        "config": {"algorithm": "mgd", "problem": {"name": "zdt3", "n": 2, "k": 1}},
        "problem": {"name": "zdt3", "n": 2, "m": 2},
        "seed": seed,
        "X": np.array([[0.1, 0.2], [0.3, 0.4], [1.0 / 3.0, 0.0]]),
        "F": np.array([[0.1, 2.5], [0.3, 1.7], [1.0 / 3.0, 0.9]]),
        "metric_ref": [0.937, 1.1],
        "initial_hv": 0.25,
        "trace": [IterationTrace(iteration=1, archive_size=3, hv=0.3, candidates=7, batch=[[1.0 / 3.0, 0.0]])],
        "final_hv": 0.3,
        "pf_hv": 0.6,
        "segments_covered": 2,
        "segments_total": 5,
        "wall_clock": 1.25,
    }
    fields.update(overrides)
    return RunRecord(**fields)


def test_derived_properties() -> None:
    record = _record(seed=4)
    assert record.algorithm == "mgd"
    assert record.evaluations == 3
    assert record.hv_ratio == pytest.approx(0.5)
    assert record.hv_trace == [0.25, 0.3]
    assert record.cell == ("zdt3", 2)
    assert record.stem() == "zdt3-n2-mgd-s4"


def test_hv_ratio_without_front() -> None:
    assert _record(pf_hv=0.0).hv_ratio == 0.0


def test_save_and_load(tmp_path: Path) -> None:
    record = _record()
    path = save_record(record, tmp_path / "runs")
    assert path.name == "zdt3-n2-mgd-s0.json"
    loaded = load_record(path)
    assert np.array_equal(loaded.X, record.X)
    assert np.array_equal(loaded.F, record.F)
    assert loaded.trace == record.trace
    assert loaded.status is RunStatus.OK
    assert loaded.wall_clock is None


def test_resave_is_byte_identical(tmp_path: Path) -> None:
    path = save_record(_record(), tmp_path)
    assert dumps_record(load_record(path)) == path.read_text()


def test_wall_clock_only_with_timing(tmp_path: Path) -> None:
    record = _record()
    assert "wall_clock" not in json.loads(dumps_record(record))
    assert json.loads(dumps_record(record, timing=True))["wall_clock"] == 1.25
    assert load_record(save_record(record, tmp_path, timing=True)).wall_clock == 1.25


def test_failed_status_round_trips(tmp_path: Path) -> None:
    record = _record(status=RunStatus.FIT_FAILED, diagnostic="covariance not positive definite", trace=[])
    loaded = load_record(save_record(record, tmp_path))
    assert loaded.status is RunStatus.FIT_FAILED
    assert loaded.diagnostic == "covariance not positive definite"
    assert loaded.hv_trace == [0.25]


def test_empty_archive_keeps_shape(tmp_path: Path) -> None:
    record = _record(X=np.empty((0, 2)), F=np.empty((0, 2)), trace=[])
    loaded = load_record(save_record(record, tmp_path))
    assert loaded.X.shape == (0, 2)
    assert loaded.F.shape == (0, 2)


def test_load_records_sorted(tmp_path: Path) -> None:
    for seed in (3, 1, 2):
        save_record(_record(seed=seed), tmp_path)
    assert [r.seed for r in load_records(tmp_path)] == [1, 2, 3]


def test_load_records_empty_directory(tmp_path: Path) -> None:
    with pytest.raises(ReportError, match="no run records"):
        load_records(tmp_path)


@pytest.mark.parametrize("content", ["not json", "{}", '{"archive": [], "problem": {"n": 2}}'])
def test_unreadable_record(tmp_path: Path, content: str) -> None:
    path = tmp_path / "broken.json"
    path.write_text(content)
    with pytest.raises(ReportError, match="cannot read run record"):
        load_record(path)

"""Verification records and their persistence."""

import math

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from pzw_lattice.report import (
    COLUMNS,
    ReportRecord,
    inputs_digest,
    read_records,
    relative,
    render_csv,
    write_records,
)


def _rec(name="charge_identity", residual=1e-9, tolerance=1e-6, **kwargs):
    return ReportRecord.evaluate(name, "charge-from-polarization", lhs=1.0, rhs=1.0, residual=residual,
                                 tolerance=tolerance, inputs=(np.arange(3),), **kwargs)


class TestRecord:
    def test_status_follows_residual(self):
        assert _rec().passed
        assert _rec(residual=1e-3).status == "FAIL"
        assert _rec(residual=1e-6).passed

    def test_zero_tolerance_fails_any_residual(self):
        assert _rec(residual=1e-300, tolerance=0.0).status == "FAIL"
        assert _rec(residual=0.0, tolerance=0.0).passed

    def test_non_finite_residual_fails(self):
        rec = _rec(residual=math.nan)
        assert rec.residual == math.inf
        assert not rec.passed

    def test_status_cannot_contradict_residual(self):
        data = _rec().model_dump()
        data["status"] = "FAIL"
        with pytest.raises(ValidationError):
            ReportRecord.model_validate(data)

    def test_records_are_frozen(self):
        with pytest.raises(ValidationError):
            _rec().residual = 1.0


class TestHelpers:
    def test_relative(self):
        assert relative(0.0, 0.0) == 0.0
        assert relative(1.0, 0.0) == math.inf
        assert relative(1.0, 4.0) == 0.25

    def test_digest_is_stable_and_input_sensitive(self):
        a = inputs_digest("x", np.arange(4.0), 3)
        assert a == inputs_digest("x", np.arange(4.0), 3)
        assert a != inputs_digest("x", np.arange(4.0) + 1e-12, 3)
        assert a != inputs_digest("x", np.arange(4.0).reshape(2, 2), 3)
        assert len(a) == 16


class TestPersistence:
    def test_jsonl_and_csv(self, tmp_path):
        records = [_rec("a"), _rec("b", residual=1.0), _rec("c", detail="dt=0.1")]
        jsonl, csv = write_records(records, tmp_path / "out", "quick")
        assert jsonl.name == "quick.jsonl"
        assert [r.name for r in read_records(jsonl)] == ["a", "b", "c"]
        frame = pd.read_csv(csv)
        assert list(frame.columns) == COLUMNS
        assert frame["status"].tolist() == ["PASS", "FAIL", "PASS"]

    def test_render_csv_to_other_path(self, tmp_path):
        jsonl, _ = write_records([_rec()], tmp_path, "one")
        out = render_csv(jsonl, tmp_path / "again.csv")
        assert pd.read_csv(out)["name"].tolist() == ["charge_identity"]

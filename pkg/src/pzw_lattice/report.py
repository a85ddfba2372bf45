"""
Verification records and their JSONL / CSV serialization.

A record pairs a claim (name + tag) with the numbers that certify it. Status is
derived, never set by hand: PASS iff residual ≤ tolerance.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pzw_lattice.logging_setup import log

COLUMNS = ["name", "tag", "detail", "inputs_digest", "lhs", "rhs", "residual", "tolerance", "status"]


class ReportRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    tag: str
    detail: str = ""
    inputs_digest: str = Field(pattern="^[0-9a-f]{16}$")
    lhs: float
    rhs: float
    residual: float = Field(ge=0)
    tolerance: float = Field(ge=0)
    status: Literal["PASS", "FAIL"]

    @model_validator(mode="after")
    def _status_matches_residual(self) -> ReportRecord:
        expected = "PASS" if self.residual <= self.tolerance else "FAIL"
        if self.status != expected:
            raise ValueError(f"status {self.status} contradicts residual {self.residual} vs {self.tolerance}")
        return self

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    @classmethod
    def evaluate(
        cls,
        name: str,
        tag: str,
        *,
        lhs: float,
        rhs: float,
        residual: float,
        tolerance: float,
        inputs: Iterable = (),
        detail: str = "",
    ) -> ReportRecord:
        residual = float(residual)
        if not math.isfinite(residual):
            residual = math.inf
        return cls(
            name=name,
            tag=tag,
            detail=detail,
            inputs_digest=inputs_digest(name, detail, *inputs),
            lhs=float(lhs),
            rhs=float(rhs),
            residual=residual,
            tolerance=float(tolerance),
            status="PASS" if residual <= tolerance else "FAIL",
        )


def relative(num: float, den: float) -> float:
    """num/den with 0/anything = 0 and x/0 = inf."""
    if num == 0:
        return 0.0
    return float(num / den) if den > 0 else math.inf


def inputs_digest(*items) -> str:
    h = hashlib.sha256()
    for item in items:
        if isinstance(item, np.ndarray):
            arr = np.ascontiguousarray(item)
            h.update(str((arr.shape, arr.dtype.str)).encode())
            h.update(arr.tobytes())
        elif hasattr(item, "values") and isinstance(getattr(item, "values", None), np.ndarray):
            h.update(repr(getattr(item, "grid", "")).encode())
            h.update(np.ascontiguousarray(item.values).tobytes())
        else:
            h.update(repr(item).encode())
        h.update(b"\x1f")
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def records_frame(records: Iterable[ReportRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump() for r in records], columns=COLUMNS)


def write_records(records: list[ReportRecord], out_dir: Path, stem: str) -> tuple[Path, Path]:
    """Write `<stem>.jsonl` (one record per line, declaration order) and `<stem>.csv`."""
    out_dir.mkdir(parents=True, exist_ok=True)
    jsonl = out_dir / f"{stem}.jsonl"
    csv = out_dir / f"{stem}.csv"
    with jsonl.open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.model_dump(), sort_keys=True) + "\n")
    records_frame(records).to_csv(csv, index=False)
    log.info("report_written", jsonl=str(jsonl), csv=str(csv), records=len(records),
             failed=sum(not r.passed for r in records))
    return jsonl, csv


def read_records(jsonl: Path) -> list[ReportRecord]:
    records = []
    with jsonl.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(ReportRecord.model_validate(json.loads(line)))
    return records


def render_csv(jsonl: Path, csv: Path | None = None) -> Path:
    csv = csv or jsonl.with_suffix(".csv")
    records_frame(read_records(jsonl)).to_csv(csv, index=False)
    return csv


__all__ = [
    "ReportRecord",
    "inputs_digest",
    "read_records",
    "records_frame",
    "relative",
    "render_csv",
    "write_records",
]

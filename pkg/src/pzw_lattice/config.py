"""
Defaults for numerics, tolerances and output, loaded from `.env` at the repo root.

Every value is env-overridable; scenario files override these per run and CLI
flags override scenarios. Malformed or out-of-range values fall back to the
default instead of failing at import time.

Numerics:
- PZW_GRID_N          (even int >= 8, default 64)
- PZW_BOX_LENGTH      (float > 0, default 1.0)
- PZW_SIGMA_CELLS     (float >= 3, default 3.0)
- PZW_QUAD_ORDER      (int >= 1, default 32)
- PZW_SAMPLE_ORDER    (int 0-5, default 1 = trilinear)
- PZW_FFT_WORKERS     (int >= 1, default 1)

Tolerances: PZW_TOL_<NAME> for every field of ToleranceCfg.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from dotenv import load_dotenv

REPO_ROOT = Path(__file__).resolve().parents[2]
load_dotenv(REPO_ROOT / ".env")


def _cfg_int(name: str, default: int, lo: int, hi: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        v = int(raw)
    except ValueError:
        return default
    return v if lo <= v <= hi else default


def _cfg_float(name: str, default: float, lo: float = 0.0) -> float:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        v = float(raw)
    except ValueError:
        return default
    return v if v > lo else default


@dataclass(frozen=True)
class NumericsCfg:
    grid_n: int
    box_length: float
    sigma_cells: float
    quad_order: int
    sample_order: int
    fft_workers: int


@dataclass(frozen=True)
class ToleranceCfg:
    identity: float = 1e-6
    projection: float = 1e-10
    neutrality: float = 1e-10
    quad: float = 1e-8
    reconstruct: float = 1e-3
    fd: float = 1e-2
    magic: float = 1e-4
    exact: float = 1e-10
    multipolar: float = 1e-5
    ratio: float = 0.3
    drift: float = 1e-4
    electrostatics: float = 1e-2

    def scaled(self, factor: float) -> ToleranceCfg:
        """Uniform multiplier for refinement studies (`--tol-scale`)."""
        return replace(self, **{f.name: getattr(self, f.name) * factor for f in fields(self)})


@dataclass(frozen=True)
class OutputCfg:
    out_dir: Path


@dataclass(frozen=True)
class Config:
    numerics: NumericsCfg
    tolerances: ToleranceCfg
    output: OutputCfg


def _load_tolerances() -> ToleranceCfg:
    defaults = ToleranceCfg()
    return ToleranceCfg(**{
        f.name: _cfg_float(f"PZW_TOL_{f.name.upper()}", getattr(defaults, f.name))
        for f in fields(ToleranceCfg)
    })


def load_config() -> Config:
    grid_n = _cfg_int("PZW_GRID_N", 64, 8, 1024)
    return Config(
        numerics=NumericsCfg(
            grid_n=grid_n if grid_n % 2 == 0 else 64,
            box_length=_cfg_float("PZW_BOX_LENGTH", 1.0),
            sigma_cells=max(_cfg_float("PZW_SIGMA_CELLS", 3.0), 3.0),
            quad_order=_cfg_int("PZW_QUAD_ORDER", 32, 1, 512),
            sample_order=_cfg_int("PZW_SAMPLE_ORDER", 1, 0, 5),
            fft_workers=_cfg_int("PZW_FFT_WORKERS", 1, 1, 256),
        ),
        tolerances=_load_tolerances(),
        output=OutputCfg(out_dir=Path(os.environ.get("PZW_OUT_DIR", "reports"))),
    )


CONFIG = load_config()

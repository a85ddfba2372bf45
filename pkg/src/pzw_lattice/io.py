"""
Snapshots, particle configuration files and probe-point tables.

Snapshot (.npz, compressed):
    grid            [n_per_axis, box_length, eps0, mu0]
    time            scalar
    a_perp, e_perp  (3, N, N, N) transverse field state
    charges, masses, positions, velocities, smearing_width, immobile_nucleus, center
    e, b            optional (3, N, N, N) fields for field-only snapshots

Particle configuration (.json):
    {"smearing_cells": 3.0, "immobile_nucleus": true,
     "particles": [{"charge": 1, "mass": 1e4, "position": [0, 0, 0], "velocity": [0, 0, 0]}, ...]}

Points (.csv): columns x, y, z.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, model_validator

from pzw_lattice.errors import ConfigError, PzwError
from pzw_lattice.lattice import Grid, VectorField
from pzw_lattice.logging_setup import log
from pzw_lattice.mechanics import FieldState, SystemState
from pzw_lattice.sources import MIN_SIGMA_CELLS, ParticleSet

SNAPSHOT_VERSION = 1


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------

def _grid_array(g: Grid) -> np.ndarray:
    return np.array([g.n_per_axis, g.box_length, g.eps0, g.mu0], dtype=np.float64)


def save_snapshot(path: Path, state: SystemState, e: VectorField | None = None,
                  b: VectorField | None = None) -> Path:
    p = state.particles
    arrays = {
        "version": np.array(SNAPSHOT_VERSION),
        "grid": _grid_array(state.grid),
        "time": np.array(state.time),
        "a_perp": state.field.a_perp.values,
        "e_perp": state.field.e_perp.values,
        "charges": p.charges,
        "masses": p.masses,
        "positions": p.positions,
        "velocities": p.velocities,
        "smearing_width": np.array(p.smearing_width),
        "immobile_nucleus": np.array(p.immobile_nucleus),
        "center": p.center,
    }
    if e is not None:
        arrays["e"] = e.values
    if b is not None:
        arrays["b"] = b.values
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(path, **arrays)
    log.info("snapshot_saved", path=str(path), time=state.time)
    return path


def _open(path: Path) -> dict[str, np.ndarray]:
    if not path.is_file():
        raise ConfigError(f"snapshot not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            return {k: data[k] for k in data.files}
    except (OSError, ValueError) as e:
        raise ConfigError(f"unreadable snapshot {path}: {e}") from e


def _grid_from(data: dict[str, np.ndarray]) -> Grid:
    n, length, eps0, mu0 = data["grid"].tolist()
    return Grid(int(n), float(length), float(eps0), float(mu0))


def load_snapshot(path: Path) -> SystemState:
    data = _open(path)
    try:
        g = _grid_from(data)
        particles = ParticleSet(
            charges=data["charges"],
            masses=data["masses"],
            positions=data["positions"],
            velocities=data["velocities"],
            smearing_width=float(data["smearing_width"]),
            immobile_nucleus=bool(data["immobile_nucleus"]),
            center=data["center"],
        )
        field = FieldState(VectorField(g, data["a_perp"]), VectorField(g, data["e_perp"]))
    except KeyError as e:
        raise ConfigError(f"snapshot {path} lacks {e}") from e
    return SystemState(particles, field, float(data["time"]))


def load_fields(path: Path) -> tuple[VectorField, VectorField, SystemState]:
    """(E, B, state): stored E and B when present, else those of the state."""
    state = load_snapshot(path)
    data = _open(path)
    g = state.grid
    e = VectorField(g, data["e"]) if "e" in data else state.e
    b = VectorField(g, data["b"]) if "b" in data else state.b
    return e, b, state


# ---------------------------------------------------------------------------
# Particle configuration
# ---------------------------------------------------------------------------

class ParticleSpec(BaseModel):
    charge: float
    mass: float = Field(gt=0)
    position: tuple[float, float, float]
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)


class ParticleConfig(BaseModel):
    particles: list[ParticleSpec] = Field(min_length=2)
    smearing_cells: float = Field(default=3.0, ge=MIN_SIGMA_CELLS)
    immobile_nucleus: bool = True
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @model_validator(mode="after")
    def _neutral(self) -> ParticleConfig:
        total = sum(s.charge for s in self.particles)
        if abs(total) > 1e-12 * max(1.0, sum(abs(s.charge) for s in self.particles)):
            raise ValueError(f"atom must be neutral, total charge {total}")
        return self

    def to_particle_set(self, grid: Grid, sigma_cells: float | None = None) -> ParticleSet:
        cells = self.smearing_cells if sigma_cells is None else sigma_cells
        try:
            return ParticleSet(
                charges=[s.charge for s in self.particles],
                masses=[s.mass for s in self.particles],
                positions=[s.position for s in self.particles],
                velocities=[s.velocity for s in self.particles],
                smearing_width=cells * grid.dx,
                immobile_nucleus=self.immobile_nucleus,
                center=self.center,
            )
        except PzwError as e:
            raise ConfigError(str(e)) from e


def load_particle_config(path: Path) -> ParticleConfig:
    try:
        return ParticleConfig.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except FileNotFoundError as e:
        raise ConfigError(f"particle file not found: {path}") from e
    except (json.JSONDecodeError, ValidationError) as e:
        raise ConfigError(f"invalid particle file {path}: {e}") from e


# ---------------------------------------------------------------------------
# Points
# ---------------------------------------------------------------------------

def load_points(path: Path) -> np.ndarray:
    try:
        df = pd.read_csv(path)
    except FileNotFoundError as e:
        raise ConfigError(f"points file not found: {path}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigError(f"invalid points file {path}: {e}") from e
    missing = {"x", "y", "z"} - set(df.columns)
    if missing:
        raise ConfigError(f"points file {path} lacks columns {sorted(missing)}")
    pts = df[["x", "y", "z"]].to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(pts)):
        raise ConfigError(f"non-finite coordinates in {path}")
    return pts


def write_points(path: Path, pts: np.ndarray) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(np.atleast_2d(pts), columns=["x", "y", "z"]).to_csv(path, index=False)
    return path


__all__ = [
    "ParticleConfig",
    "ParticleSpec",
    "load_fields",
    "load_particle_config",
    "load_points",
    "load_snapshot",
    "save_snapshot",
    "write_points",
]

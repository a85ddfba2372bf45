"""
Self-consistent evolution of the atom and the transverse field.

One step is a Strang splitting:

1. field half-step: exact per-mode solution of Ȧ⊥ = −E⊥, Ė⊥ = c²k²A⊥ − j⊥/ε₀
   with j⊥ frozen at the current particle state;
2. particle step: half drift, Boris kick with E⊥ + E∥ and B gathered at the
   half position (E∥ re-derived from the particles there), half drift;
3. field half-step with the current of the new particle state.

Fields are gathered with the same Gaussian the charges are deposited with.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass
from typing import Callable, Iterator, Literal

import numpy as np
import pandas as pd

from pzw_lattice.errors import StabilityViolation
from pzw_lattice.lattice import (
    Grid,
    from_spectrum,
    to_spectrum,
    transverse_spectrum,
)
from pzw_lattice.logging_setup import log
from pzw_lattice.mechanics import FieldState, SystemState
from pzw_lattice.report import relative
from pzw_lattice.sources import ParticleSet, continuity_residual, current_density, smeared_sample

STABILITY_FACTOR = 0.5


@dataclass(frozen=True)
class TrajectoryConfig:
    dt: float
    n_steps: int
    output_stride: int = 1
    integrator: Literal["leapfrog"] = "leapfrog"

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise StabilityViolation(f"dt must be positive, got {self.dt}")
        if self.n_steps < 0 or self.output_stride < 1:
            raise ValueError(f"n_steps={self.n_steps}, output_stride={self.output_stride}")
        if self.integrator != "leapfrog":
            raise ValueError(f"unknown integrator {self.integrator!r}")

    def check_stability(self, grid: Grid) -> None:
        check_time_step(grid, self.dt)


def check_time_step(grid: Grid, dt: float) -> None:
    limit = STABILITY_FACTOR * grid.dx / grid.c
    if not 0 < dt < limit:
        raise StabilityViolation(f"dt={dt:.4g} outside (0, {STABILITY_FACTOR}·dx/c = {limit:.4g})")


# ---------------------------------------------------------------------------
# Field half-step
# ---------------------------------------------------------------------------

def _field_advance(field: FieldState, j_spec: np.ndarray | None, tau: float) -> FieldState:
    """Exact rotation of (A⊥, E⊥) over tau per mode, transverse current held fixed."""
    g = field.grid
    omega = g.c * np.sqrt(g.k_squared)
    c = np.cos(omega * tau)
    s = tau * np.sinc(omega * tau / np.pi)
    q = 0.5 * tau ** 2 * np.sinc(omega * tau / (2 * np.pi)) ** 2

    a_hat = to_spectrum(field.a_perp)
    e_hat = to_spectrum(field.e_perp)
    a_new = c * a_hat - s * e_hat
    e_new = omega ** 2 * s * a_hat + c * e_hat
    if j_spec is not None:
        a_new = a_new + q * j_spec / g.eps0
        e_new = e_new - s * j_spec / g.eps0
    return FieldState(from_spectrum(g, a_new), from_spectrum(g, e_new))


def _transverse_current(p: ParticleSet, g: Grid) -> np.ndarray:
    return transverse_spectrum(to_spectrum(current_density(p, g)), g)


# ---------------------------------------------------------------------------
# Particle step
# ---------------------------------------------------------------------------

def _half_position_push(x: np.ndarray, v: np.ndarray, dt: float, mobile: np.ndarray) -> np.ndarray:
    out = x.copy()
    out[mobile] += 0.5 * dt * v[mobile]
    return out


def _push_momentum(v: np.ndarray, e: np.ndarray, b: np.ndarray, q_over_m: np.ndarray, dt: float) -> np.ndarray:
    """Non-relativistic Boris rotation with two half electric kicks."""
    k = (0.5 * dt * q_over_m)[:, None]
    v_minus = v + k * e
    t = k * b
    s = 2 * t / (1 + np.sum(t ** 2, axis=1, keepdims=True))
    v_prime = v_minus + np.cross(v_minus, t)
    v_plus = v_minus + np.cross(v_prime, s)
    return v_plus + k * e


def _particle_step(s: SystemState, dt: float) -> ParticleSet:
    p, g = s.particles, s.grid
    mobile = p.mobile
    x_half = _half_position_push(p.positions, p.velocities, dt, mobile)
    half = s.with_particles(p.with_kinematics(x_half, p.velocities))

    sigma = p.smearing_width
    e = smeared_sample(half.e, x_half[mobile], sigma)
    b = smeared_sample(half.b, x_half[mobile], sigma)
    v_new = p.velocities.copy()
    v_new[mobile] = _push_momentum(p.velocities[mobile], e, b, p.charges[mobile] / p.masses[mobile], dt)
    x_new = _half_position_push(x_half, v_new, dt, mobile)
    return p.with_kinematics(x_new, v_new)


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def step(s: SystemState, dt: float) -> SystemState:
    g = s.grid
    check_time_step(g, dt)
    field = _field_advance(s.field, _transverse_current(s.particles, g), 0.5 * dt)
    particles = _particle_step(SystemState(s.particles, field, s.time + 0.5 * dt), dt)
    field = _field_advance(field, _transverse_current(particles, g), 0.5 * dt)
    return SystemState(particles, field, s.time + dt)


def iterate(s0: SystemState, cfg: TrajectoryConfig) -> Iterator[tuple[int, SystemState]]:
    """(step, state) every `output_stride` steps, starting with s0 and ending with the final state."""
    cfg.check_stability(s0.grid)
    yield 0, s0
    s = s0
    for n in range(1, cfg.n_steps + 1):
        s = step(s, cfg.dt)
        if n % cfg.output_stride == 0 or n == cfg.n_steps:
            yield n, s


def run(s0: SystemState, cfg: TrajectoryConfig) -> list[SystemState]:
    t0 = _time.perf_counter()
    snapshots = [s for _, s in iterate(s0, cfg)]
    log.info("trajectory_done", steps=cfg.n_steps, dt=cfg.dt, snapshots=len(snapshots),
             seconds=round(_time.perf_counter() - t0, 3))
    return snapshots


def run_energy(s0: SystemState, cfg: TrajectoryConfig,
               on_snapshot: Callable[[int, SystemState], None] | None = None) -> tuple[SystemState, pd.DataFrame]:
    """
    Final state and the energy series at every output stride, without keeping
    the intermediate states. `on_snapshot` sees each retained state.
    """
    t0 = _time.perf_counter()
    rows = []
    s = s0
    for n, s in iterate(s0, cfg):
        rows.append({"step": n, **_energy_row(s)})
        if on_snapshot is not None:
            on_snapshot(n, s)
    log.info("trajectory_done", steps=cfg.n_steps, dt=cfg.dt, snapshots=len(rows),
             seconds=round(_time.perf_counter() - t0, 3))
    return s, pd.DataFrame(rows, columns=["step", *_ENERGY_COLUMNS])


def vacuum_evolve(field: FieldState, dt: float, n_steps: int) -> FieldState:
    """Charge-free evolution: every mode rotates exactly at ω = c|k|."""
    check_time_step(field.grid, dt)
    for _ in range(n_steps):
        field = _field_advance(field, None, dt)
    return field


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

_ENERGY_COLUMNS = ["t", "kinetic", "field", "electrostatic", "total"]


def _energy_row(s: SystemState) -> dict[str, float]:
    kinetic = s.particles.kinetic_energy()
    radiation = s.field.energy()
    electrostatic = s.electrostatic_energy()
    return {
        "t": s.time,
        "kinetic": kinetic,
        "field": radiation,
        "electrostatic": electrostatic,
        "total": kinetic + radiation + electrostatic,
    }


def energy_series(snapshots: list[SystemState]) -> pd.DataFrame:
    return pd.DataFrame([_energy_row(s) for s in snapshots], columns=_ENERGY_COLUMNS)


def energy_drift(series: pd.DataFrame) -> float:
    """max_t |H(t) − H(0)| / |H(0)| of the energy form."""
    total = series["total"].to_numpy()
    return relative(float(np.max(np.abs(total - total[0]))), abs(float(total[0])))


def continuity_residuals(snapshots: list[SystemState]) -> np.ndarray:
    """Midpoint continuity residual between consecutive snapshots."""
    if len(snapshots) < 2:
        return np.zeros(0)
    g = snapshots[0].grid
    return np.array([
        continuity_residual(g, a.particles, b.particles, b.time - a.time)
        for a, b in zip(snapshots[:-1], snapshots[1:])
    ])


def halving_ratio(coarse: float, fine: float) -> float:
    """coarse/fine; 4 for a second-order quantity."""
    return coarse / fine if fine > 0 else float("inf")


__all__ = [
    "STABILITY_FACTOR",
    "TrajectoryConfig",
    "check_time_step",
    "continuity_residuals",
    "energy_drift",
    "energy_series",
    "halving_ratio",
    "iterate",
    "run",
    "run_energy",
    "step",
    "vacuum_evolve",
]

"""Reference atoms, field states and gauge functions used by the suite and the tests."""

from __future__ import annotations

import math

import numpy as np

from pzw_lattice.config import CONFIG
from pzw_lattice.dynamics import step
from pzw_lattice.gauges import GaugeFunction
from pzw_lattice.lattice import Grid, ScalarField, VectorField, from_spectrum, to_spectrum, transverse_spectrum
from pzw_lattice.mechanics import FieldState, SystemState
from pzw_lattice.sources import ParticleSet, longitudinal_field, smeared_sample

ELECTRON_MASS = 100.0
NUCLEUS_MASS = 1.0e4


def default_sigma(grid: Grid, sigma_cells: float | None = None) -> float:
    return (CONFIG.numerics.sigma_cells if sigma_cells is None else sigma_cells) * grid.dx


# ---------------------------------------------------------------------------
# Atoms
# ---------------------------------------------------------------------------

def hydrogen_like(grid: Grid, sigma: float | None = None, separation: float | None = None,
                  velocity=(0.0, 0.0, 0.0)) -> ParticleSet:
    """Nucleus +1 at the origin, electron −1 at (d, 0, 0) with d = 0.1 L by default."""
    d = 0.1 * grid.box_length if separation is None else separation
    return ParticleSet(
        charges=[1.0, -1.0],
        masses=[NUCLEUS_MASS, ELECTRON_MASS],
        positions=[[0, 0, 0], [d, 0, 0]],
        velocities=[[0, 0, 0], list(velocity)],
        smearing_width=default_sigma(grid) if sigma is None else sigma,
    )


def three_particle(grid: Grid, sigma: float | None = None) -> ParticleSet:
    """Nucleus +2 with two electrons on different sides, both moving."""
    L = grid.box_length
    return ParticleSet(
        charges=[2.0, -1.0, -1.0],
        masses=[NUCLEUS_MASS, ELECTRON_MASS, ELECTRON_MASS],
        positions=[[0, 0, 0], [0.1 * L, 0.03 * L, 0.0], [-0.05 * L, 0.08 * L, 0.04 * L]],
        velocities=[[0, 0, 0], [0.0, 0.05, 0.02], [0.03, -0.01, 0.04]],
        smearing_width=default_sigma(grid) if sigma is None else sigma,
    )


def random_atom(grid: Grid, rng: np.random.Generator, z: int = 4, sigma: float | None = None,
                speed: float = 0.05, max_radius: float | None = None) -> ParticleSet:
    """Nucleus +Z at rest at the origin, Z electrons at random points of the ball, random velocities."""
    r_max = 0.8 * grid.trusted_radius if max_radius is None else max_radius
    directions = rng.normal(size=(z, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = r_max * rng.uniform(0.3, 1.0, size=z)
    positions = np.vstack([np.zeros(3), directions * radii[:, None]])
    velocities = np.vstack([np.zeros(3), speed * rng.normal(size=(z, 3))])
    return ParticleSet(
        charges=np.concatenate([[float(z)], -np.ones(z)]),
        masses=np.concatenate([[NUCLEUS_MASS], np.full(z, ELECTRON_MASS)]),
        positions=positions,
        velocities=velocities,
        smearing_width=default_sigma(grid) if sigma is None else sigma,
    )


def circular_speed(p: ParticleSet, grid: Grid, alpha: int = 1) -> float:
    """Speed of a circular orbit about the origin in the lattice E∥ of the atom at rest."""
    x = p.positions[alpha]
    e = smeared_sample(longitudinal_field(p, grid), x, p.smearing_width)
    r = float(np.linalg.norm(x))
    radial_force = p.charges[alpha] * float(e @ x) / r
    if radial_force >= 0:
        raise ValueError("no attractive force toward the origin")
    return math.sqrt(-radial_force * r / p.masses[alpha])


def circular_orbit(grid: Grid, sigma: float | None = None, radius: float | None = None) -> ParticleSet:
    """Hydrogen-like atom with the electron on a circular orbit in the xy plane."""
    at_rest = hydrogen_like(grid, sigma, radius)
    v = circular_speed(at_rest, grid)
    return hydrogen_like(grid, sigma, radius, velocity=(0.0, v, 0.0))


def orbit_angular_velocity(p: ParticleSet, alpha: int = 1) -> float:
    x, v = p.positions[alpha], p.velocities[alpha]
    return float(np.cross(x, v)[2] / (x @ x))


def rotated_orbit(p: ParticleSet, omega: float, t: float) -> ParticleSet:
    """Mobile particles rigidly rotated about z by ωt: exact kinematics of a prescribed circular orbit."""
    c, s = math.cos(omega * t), math.sin(omega * t)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    x = p.positions.copy()
    v = p.velocities.copy()
    x[p.mobile] = p.positions[p.mobile] @ rot.T
    v[p.mobile] = p.velocities[p.mobile] @ rot.T
    return p.with_kinematics(x, v)


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------

def single_mode(grid: Grid, amplitude: float = 1.0, mode: tuple[int, int, int] = (1, 0, 0),
                polarization=(0.0, 1.0, 0.0), phase: float = 0.0) -> FieldState:
    """
    A⊥ = a ê cos(k·x − φ), E⊥ = −∂ₜA⊥ for the forward-travelling wave at t = 0.

    ê must be orthogonal to k.
    """
    k = 2 * np.pi * np.asarray(mode, dtype=np.float64) / grid.box_length
    e_hat = np.asarray(polarization, dtype=np.float64)
    if abs(k @ e_hat) > 1e-12 * np.linalg.norm(k):
        raise ValueError("polarization must be orthogonal to the wavevector")
    omega = grid.c * float(np.linalg.norm(k))
    x = grid.coords
    arg = np.einsum("i,i...->...", k, x) - phase
    a = amplitude * e_hat[:, None, None, None] * np.cos(arg)
    e = -amplitude * omega * e_hat[:, None, None, None] * np.sin(arg)
    return FieldState(VectorField(grid, a), VectorField(grid, e))


def _band_limit(spectrum: np.ndarray, grid: Grid, kmax: int) -> np.ndarray:
    n = np.fft.fftfreq(grid.n_per_axis, d=1.0 / grid.n_per_axis)
    nz = np.fft.rfftfreq(grid.n_per_axis, d=1.0 / grid.n_per_axis)
    nx, ny, nzz = np.meshgrid(n, n, nz, indexing="ij")
    keep = (np.abs(nx) <= kmax) & (np.abs(ny) <= kmax) & (np.abs(nzz) <= kmax)
    return spectrum * keep


def band_limited_vector(grid: Grid, rng: np.random.Generator, kmax: int = 3, transverse: bool = False,
                        rms: float = 1.0) -> VectorField:
    raw = VectorField(grid, rng.normal(size=(3, *grid.shape)))
    spec = _band_limit(to_spectrum(raw), grid, kmax)
    if transverse:
        spec = transverse_spectrum(spec, grid)
    v = from_spectrum(grid, spec)
    norm = float(np.sqrt(np.mean(v.values ** 2)))
    return v * (rms / norm) if norm > 0 else v


def band_limited_scalar(grid: Grid, rng: np.random.Generator, kmax: int = 3, rms: float = 1.0) -> ScalarField:
    v = band_limited_vector(grid, rng, kmax, rms=rms)
    return ScalarField(grid, v.values[0])


def random_field_state(grid: Grid, rng: np.random.Generator, kmax: int = 3,
                       a_rms: float = 0.05, e_rms: float = 0.05) -> FieldState:
    return FieldState(
        band_limited_vector(grid, rng, kmax, transverse=True, rms=a_rms),
        band_limited_vector(grid, rng, kmax, transverse=True, rms=e_rms),
    )


def random_gauge(grid: Grid, rng: np.random.Generator, kmax: int = 3) -> GaugeFunction:
    return GaugeFunction(band_limited_scalar(grid, rng, kmax), band_limited_scalar(grid, rng, kmax))


def uniform_b(grid: Grid, b0=(0.0, 0.0, 1.0)) -> VectorField:
    """Synthetic uniform B; no periodic A⊥ produces it, so it only feeds probes."""
    return VectorField(grid, np.broadcast_to(np.asarray(b0, dtype=np.float64)[:, None, None, None],
                                             (3, *grid.shape)).copy())


def radiating_snapshot_pair(grid: Grid, dt: float, warmup_steps: int, fd_dt: float,
                            particles: ParticleSet | None = None,
                            field: FieldState | None = None) -> tuple[SystemState, SystemState]:
    """Evolve an orbiting electron for `warmup_steps`, then take one short step of fd_dt."""
    s = SystemState(particles or circular_orbit(grid), field or FieldState.zeros(grid), 0.0)
    for _ in range(warmup_steps):
        s = step(s, dt)
    return s, step(s, fd_dt)


__all__ = [
    "ELECTRON_MASS",
    "NUCLEUS_MASS",
    "band_limited_scalar",
    "band_limited_vector",
    "circular_orbit",
    "circular_speed",
    "default_sigma",
    "hydrogen_like",
    "orbit_angular_velocity",
    "radiating_snapshot_pair",
    "random_atom",
    "random_field_state",
    "random_gauge",
    "rotated_orbit",
    "single_mode",
    "three_particle",
]

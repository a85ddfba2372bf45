"""
One neutral atom of regularized point charges.

Every Dirac delta becomes a periodic Gaussian of width σ (sum over box images,
analytic normalization (2π)^{-3/2} σ^{-3}). The Gaussian is separable, so
deposition and gathering are outer products of 1D profiles; with σ ≥ 3Δx the
lattice sum of a smeared delta equals 1 far below 1e-8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from pzw_lattice.errors import ConfigError, NonNeutralSource, OutOfTrustedRegion, SmearingTooNarrow
from pzw_lattice.lattice import (
    Field,
    Grid,
    ScalarField,
    VectorField,
    divergence,
    gradient,
    poisson_solve,
)

MIN_SIGMA_CELLS = 3.0
_GATHER_BATCH = 1024


# ---------------------------------------------------------------------------
# Smeared delta
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmearedDelta:
    width: float

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise SmearingTooNarrow(f"smearing width must be positive, got {self.width}")

    @property
    def normalization(self) -> float:
        return (2 * math.pi) ** -1.5 * self.width ** -3

    def peak(self, charge: float = 1.0) -> float:
        return charge * self.normalization

    def check_on(self, grid: Grid) -> None:
        if self.width < MIN_SIGMA_CELLS * grid.dx * (1 - 1e-12):
            raise SmearingTooNarrow(
                f"sigma={self.width:.4g} < {MIN_SIGMA_CELLS}·dx={MIN_SIGMA_CELLS * grid.dx:.4g}"
            )

    def profiles(self, grid: Grid, centers: np.ndarray, derivative: bool = False) -> np.ndarray:
        """
        Unnormalized periodic 1D Gaussians per axis, shape (m, 3, N).

        With derivative=True returns ∂/∂x of each profile (derivative with respect
        to the field point, not the centre).
        """
        L, s = grid.box_length, self.width
        centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        d = grid.wrap(grid.axis[None, None, :] - centers[:, :, None])
        n_img = int(math.ceil(8 * s / L)) + 1
        out = np.zeros_like(d)
        for n in range(-n_img, n_img + 1):
            shifted = d + n * L
            g = np.exp(-0.5 * (shifted / s) ** 2)
            out += (-shifted / s ** 2) * g if derivative else g
        return out

    def evaluate(self, grid: Grid, center) -> ScalarField:
        return deposit(grid, self.width, np.atleast_2d(center), np.ones(1))

    def lattice_integral(self, grid: Grid, center) -> float:
        return float(self.evaluate(grid, center).values.sum() * grid.cell_volume)


def deposit(
    grid: Grid,
    sigma: float,
    centers: np.ndarray,
    weights: np.ndarray,
    direction: np.ndarray | None = None,
) -> Field:
    """
    Σ_m w_m δσ(x − c_m), or Σ_m w_m (u_m·∇)δσ(x − c_m) when `direction` u is given.

    Scalar weights (m,) give a ScalarField, vector weights (m, 3) a VectorField.
    """
    delta = SmearedDelta(sigma)
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.float64)
    vector = weights.ndim == 2
    w = weights if vector else weights[:, None]
    if centers.shape[0] == 0:
        return VectorField.zeros(grid) if vector else ScalarField.zeros(grid)

    g = delta.profiles(grid, centers)
    if direction is None:
        values = np.einsum("mc,ma,mb,md->cabd", w, g[:, 0], g[:, 1], g[:, 2], optimize=True)
    else:
        u = np.asarray(direction, dtype=np.float64)
        dg = delta.profiles(grid, centers, derivative=True)
        values = (
            np.einsum("mc,m,ma,mb,md->cabd", w, u[:, 0], dg[:, 0], g[:, 1], g[:, 2], optimize=True)
            + np.einsum("mc,m,ma,mb,md->cabd", w, u[:, 1], g[:, 0], dg[:, 1], g[:, 2], optimize=True)
            + np.einsum("mc,m,ma,mb,md->cabd", w, u[:, 2], g[:, 0], g[:, 1], dg[:, 2], optimize=True)
        )
    values *= delta.normalization
    return VectorField(grid, values) if vector else ScalarField(grid, values[0])


def smeared_sample(v: Field, x, sigma: float) -> np.ndarray:
    """
    Gaussian-weighted gather Δx³ Σ δσ(site − x) v(site) at positions x ((3,) or (m, 3)).

    Adjoint of `deposit`: Σ_m w_m·smeared_sample(v, c_m) equals the lattice
    integral of v against the deposited weights.
    """
    grid = v.grid
    delta = SmearedDelta(sigma)
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    scale = delta.normalization * grid.cell_volume
    spec = "abd,ma,mb,md->m" if v.rank == 0 else "cabd,ma,mb,md->mc"
    chunks = []
    # bounded intermediate of shape (3, N, N, batch)
    for start in range(0, max(pts.shape[0], 1), _GATHER_BATCH):
        g = delta.profiles(grid, pts[start:start + _GATHER_BATCH])
        chunks.append(np.einsum(spec, v.values, g[:, 0], g[:, 1], g[:, 2], optimize=True))
    out = np.concatenate(chunks) * scale
    return out[0] if single else out


# ---------------------------------------------------------------------------
# Particles
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ParticleSet:
    """
    Charges, masses and kinematics of one neutral atom.

    With `immobile_nucleus` (default) particle 0 is the nucleus, pinned at the
    origin at rest, and multipolar fields sum over α ≥ 1. Without it every
    particle is summed about the fixed charge centre `center`.
    """

    charges: np.ndarray
    masses: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    smearing_width: float
    immobile_nucleus: bool = True
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        q = np.atleast_1d(np.array(self.charges, dtype=np.float64))
        m = np.atleast_1d(np.array(self.masses, dtype=np.float64))
        n = q.shape[0]
        try:
            x = np.array(self.positions, dtype=np.float64).reshape(n, 3)
            v = np.array(self.velocities, dtype=np.float64).reshape(n, 3)
            c = np.array(self.center, dtype=np.float64).reshape(3)
        except ValueError as e:
            raise ConfigError(f"particle arrays do not match {n} charges: {e}") from e
        if m.shape != (n,):
            raise ConfigError(f"{n} charges but masses of shape {m.shape}")
        if np.any(m <= 0):
            raise ConfigError("masses must be positive")
        if not all(np.all(np.isfinite(a)) for a in (q, m, x, v, c)):
            raise ConfigError("particle data must be finite")
        if not self.smearing_width > 0:
            raise SmearingTooNarrow(f"smearing width must be positive, got {self.smearing_width}")
        if abs(q.sum()) > 1e-12 * max(1.0, np.abs(q).sum()):
            raise NonNeutralSource(f"atom is not neutral: sum(q)={q.sum():.3e}")
        if self.immobile_nucleus and n and (np.any(x[0] != 0) or np.any(v[0] != 0)):
            raise ConfigError("immobile nucleus must sit at the origin at rest")
        for name, arr in (("charges", q), ("masses", m), ("positions", x), ("velocities", v), ("center", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_particles(self) -> int:
        return int(self.charges.shape[0])

    @property
    def z(self) -> int:
        return max(self.n_particles - 1, 0)

    @property
    def mobile(self) -> np.ndarray:
        """Indices of particles that move and carry multipolar segments."""
        start = 1 if self.immobile_nucleus else 0
        return np.arange(start, self.n_particles)

    @property
    def reference_point(self) -> np.ndarray:
        return np.zeros(3) if self.immobile_nucleus else self.center

    @property
    def delta(self) -> SmearedDelta:
        return SmearedDelta(self.smearing_width)

    def with_kinematics(self, positions, velocities) -> ParticleSet:
        return replace(self, positions=np.array(positions, dtype=np.float64),
                       velocities=np.array(velocities, dtype=np.float64))

    def kinetic_energy(self) -> float:
        return float(0.5 * np.sum(self.masses * np.sum(self.velocities ** 2, axis=1)))

    def dipole_moment(self) -> np.ndarray:
        return self.charges @ (self.positions - self.reference_point)

    def check_on(self, grid: Grid) -> None:
        """σ ≥ 3Δx and every particle inside the trusted ball."""
        self.delta.check_on(grid)
        r = np.linalg.norm(self.positions - self.reference_point, axis=1) if self.n_particles else np.zeros(0)
        if np.any(r > grid.trusted_radius):
            raise OutOfTrustedRegion(f"|x_alpha| up to {r.max():.4g} > L/4={grid.trusted_radius:.4g}")


# ---------------------------------------------------------------------------
# Densities and the longitudinal field
# ---------------------------------------------------------------------------

def charge_density(p: ParticleSet, g: Grid) -> ScalarField:
    p.delta.check_on(g)
    return deposit(g, p.smearing_width, p.positions, p.charges)


def current_density(p: ParticleSet, g: Grid) -> VectorField:
    p.delta.check_on(g)
    return deposit(g, p.smearing_width, p.positions, p.charges[:, None] * p.velocities)


def coulomb_potential(p: ParticleSet, g: Grid) -> ScalarField:
    return poisson_solve(charge_density(p, g), g.eps0)


def longitudinal_field(p: ParticleSet, g: Grid) -> VectorField:
    """E∥ = −∇Φ_C of the smeared charges."""
    return -gradient(coulomb_potential(p, g))


def continuity_residual(g: Grid, p_before: ParticleSet, p_after: ParticleSet, dt: float) -> float:
    """
    ‖(ρ_after − ρ_before)/dt + div j_mid‖ / ‖∂ₜρ‖ with j_mid at midpoint kinematics.

    O(dt²) along smooth trajectories.
    """
    drho_dt = (charge_density(p_after, g) - charge_density(p_before, g)) / dt
    mid = p_before.with_kinematics(
        0.5 * (p_before.positions + p_after.positions),
        0.5 * (p_before.velocities + p_after.velocities),
    )
    residual = drho_dt + divergence(current_density(mid, g))
    num = residual.norm()
    return 0.0 if num == 0 else num / drho_dt.norm()


# ---------------------------------------------------------------------------
# Free-space oracles
# ---------------------------------------------------------------------------

def self_energy(p: ParticleSet, eps0: float) -> float:
    """Σ q_α²/(8π^{3/2} ε₀ σ): electrostatic self-energy of the Gaussians in free space."""
    return float(np.sum(p.charges ** 2) / (8 * math.pi ** 1.5 * eps0 * p.smearing_width))


def free_space_potential(p: ParticleSet, x, eps0: float, box_volume: float | None = None) -> np.ndarray:
    """
    Potential of the Gaussian charges in infinite space, Σ q erf(r/√2σ)/(4πε₀r).

    With `box_volume` the leading periodic-image term of the zero-mean periodic
    solution, Σ q |x − x_α|²/(6ε₀V), is added.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    d = pts[:, None, :] - p.positions[None, :, :]
    r = np.linalg.norm(d, axis=-1)
    s = p.smearing_width
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = np.where(r > 0, special.erf(r / (math.sqrt(2) * s)) / r, math.sqrt(2 / math.pi) / s)
    phi = kernel @ p.charges / (4 * math.pi * eps0)
    if box_volume is not None:
        phi = phi + (r ** 2) @ p.charges / (6 * eps0 * box_volume)
    return phi if np.ndim(x) > 1 else phi[0]


def free_space_field(p: ParticleSet, x, eps0: float, box_volume: float | None = None) -> np.ndarray:
    """−∇ of `free_space_potential`; the periodic term is the uniform field p/(3ε₀V)."""
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    d = pts[:, None, :] - p.positions[None, :, :]
    r = np.linalg.norm(d, axis=-1)
    s = p.smearing_width
    with np.errstate(divide="ignore", invalid="ignore"):
        radial = special.erf(r / (math.sqrt(2) * s)) - math.sqrt(2 / math.pi) * (r / s) * np.exp(-0.5 * (r / s) ** 2)
        kernel = np.where(r > 0, radial / r ** 3, 0.0)
    e = np.einsum("mn,n,mnc->mc", kernel, p.charges, d) / (4 * math.pi * eps0)
    if box_volume is not None:
        e = e + (p.charges @ p.positions) / (3 * eps0 * box_volume)
    return e if np.ndim(x) > 1 else e[0]


__all__ = [
    "ParticleSet",
    "SmearedDelta",
    "charge_density",
    "continuity_residual",
    "coulomb_potential",
    "current_density",
    "deposit",
    "free_space_field",
    "free_space_potential",
    "longitudinal_field",
    "self_energy",
    "smeared_sample",
]

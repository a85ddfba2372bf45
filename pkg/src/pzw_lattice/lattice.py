"""
Periodic cubic lattice, lattice fields and spectral operators.

Sites sit at x_i = (i - N/2)·Δx on every axis: the box is [-L/2, L/2)³ and the
origin (the charge centre) is a lattice site.

First derivatives multiply by i·k with the Nyquist wavenumber set to zero. The
same wavevector feeds gradient, divergence, curl, the Poisson inverse and the
Helmholtz projector, so div∘curl = 0, curl∘grad = 0 and v = v⊥ + v∥ hold to
rounding. Modes whose wavevector vanishes (the mean and the pure-Nyquist
corners) belong to the transverse part.

Every ∫d³x is realized as Δx³·Σ over sites (`inner_product`).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from numbers import Real
from typing import Callable, ClassVar, Union

import numpy as np
from scipy import constants, fft, ndimage

from pzw_lattice.config import CONFIG
from pzw_lattice.errors import GridError, GridMismatch, NonFiniteField, NonNeutralSource

_AXES = (-3, -2, -1)


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    n_per_axis: int
    box_length: float
    eps0: float = 1.0
    mu0: float = 1.0

    def __post_init__(self) -> None:
        if self.n_per_axis < 8 or self.n_per_axis % 2:
            raise GridError(f"n_per_axis must be even and >= 8, got {self.n_per_axis}")
        if not self.box_length > 0:
            raise GridError(f"box_length must be positive, got {self.box_length}")
        c2 = 1.0 / (self.eps0 * self.mu0) if self.eps0 > 0 and self.mu0 > 0 else float("nan")
        if not (np.isfinite(c2) and c2 > 0):
            raise GridError(f"eps0={self.eps0}, mu0={self.mu0} do not give a finite positive c²")

    @classmethod
    def si(cls, n_per_axis: int, box_length: float) -> Grid:
        """SI vacuum constants from scipy."""
        return cls(n_per_axis, box_length, constants.epsilon_0, constants.mu_0)

    @property
    def dx(self) -> float:
        return self.box_length / self.n_per_axis

    @property
    def c2(self) -> float:
        return 1.0 / (self.eps0 * self.mu0)

    @property
    def c(self) -> float:
        return float(np.sqrt(self.c2))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_per_axis,) * 3

    @property
    def cell_volume(self) -> float:
        return self.dx ** 3

    @property
    def volume(self) -> float:
        return self.box_length ** 3

    @property
    def trusted_radius(self) -> float:
        return self.box_length / 4

    @property
    def probe_radius(self) -> float:
        return self.box_length / 8

    @cached_property
    def axis(self) -> np.ndarray:
        return (np.arange(self.n_per_axis) - self.n_per_axis // 2) * self.dx

    @cached_property
    def coords(self) -> np.ndarray:
        """Site positions, shape (3, N, N, N)."""
        return np.stack(np.meshgrid(self.axis, self.axis, self.axis, indexing="ij"))

    @cached_property
    def wavevectors(self) -> np.ndarray:
        """Derivative wavevector on the rfft half-spectrum, shape (3, N, N, N//2 + 1)."""
        n, d = self.n_per_axis, self.dx
        k_full = 2 * np.pi * fft.fftfreq(n, d=d)
        k_half = 2 * np.pi * fft.rfftfreq(n, d=d)
        k_full[n // 2] = 0.0
        k_half[-1] = 0.0
        return np.stack(np.meshgrid(k_full, k_full, k_half, indexing="ij"))

    @cached_property
    def k_squared(self) -> np.ndarray:
        return np.sum(self.wavevectors ** 2, axis=0)

    @cached_property
    def inverse_k_squared(self) -> np.ndarray:
        k2 = self.k_squared
        return np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Map positions into [-L/2, L/2)."""
        L = self.box_length
        return (np.asarray(x, dtype=np.float64) + L / 2) % L - L / 2


def _forward(values: np.ndarray) -> np.ndarray:
    return fft.rfftn(values, axes=_AXES, workers=CONFIG.numerics.fft_workers)


def _inverse(spectrum: np.ndarray, grid: Grid) -> np.ndarray:
    return fft.irfftn(spectrum, s=grid.shape, axes=_AXES, workers=CONFIG.numerics.fft_workers)


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _LatticeField:
    grid: Grid
    values: np.ndarray

    rank: ClassVar[int] = 0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        expected = (3, *self.grid.shape) if self.rank else self.grid.shape
        if values.shape != expected:
            raise GridError(f"{type(self).__name__} expects shape {expected}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteField(f"{type(self).__name__} holds NaN/Inf samples")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid):
        shape = (3, *grid.shape) if cls.rank else grid.shape
        return cls(grid, np.zeros(shape))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]):
        """Sample fn(x, y, z) on the site coordinates."""
        x, y, z = grid.coords
        values = np.asarray(fn(x, y, z), dtype=np.float64)
        shape = (3, *grid.shape) if cls.rank else grid.shape
        return cls(grid, np.broadcast_to(values, shape).copy())

    def _operand(self, other):
        if isinstance(other, _LatticeField):
            if type(other) is not type(self):
                raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
            _require_same_grid(self, other)
            return other.values
        if isinstance(other, Real):
            return float(other)
        return NotImplemented

    def __add__(self, other):
        rhs = self._operand(other)
        return NotImplemented if rhs is NotImplemented else type(self)(self.grid, self.values + rhs)

    __radd__ = __add__

    def __sub__(self, other):
        rhs = self._operand(other)
        return NotImplemented if rhs is NotImplemented else type(self)(self.grid, self.values - rhs)

    def __rsub__(self, other):
        rhs = self._operand(other)
        return NotImplemented if rhs is NotImplemented else type(self)(self.grid, rhs - self.values)

    def __neg__(self):
        return type(self)(self.grid, -self.values)

    def __mul__(self, other):
        if not isinstance(other, Real):
            return NotImplemented
        return type(self)(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Real):
            return NotImplemented
        return type(self)(self.grid, self.values / float(other))

    def norm(self) -> float:
        """L2 norm with the lattice measure."""
        return float(np.sqrt(inner_product(self, self)))


@dataclass(frozen=True, eq=False)
class ScalarField(_LatticeField):
    rank: ClassVar[int] = 0


@dataclass(frozen=True, eq=False)
class VectorField(_LatticeField):
    rank: ClassVar[int] = 1

    def dot(self, other: VectorField) -> ScalarField:
        _require_same_grid(self, other)
        return ScalarField(self.grid, np.einsum("i...,i...->...", self.values, other.values))

    def integral(self) -> np.ndarray:
        """∫v d³x, one number per component."""
        return self.values.sum(axis=(1, 2, 3)) * self.grid.cell_volume


Field = Union[ScalarField, VectorField]


def _require_same_grid(a: _LatticeField, b: _LatticeField) -> None:
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")


# ---------------------------------------------------------------------------
# Spectral operators
# ---------------------------------------------------------------------------

def gradient(f: ScalarField) -> VectorField:
    g = f.grid
    fh = _forward(f.values)
    return VectorField(g, _inverse(1j * g.wavevectors * fh[None], g))


def divergence(v: VectorField) -> ScalarField:
    g = v.grid
    vh = _forward(v.values)
    return ScalarField(g, _inverse(np.sum(1j * g.wavevectors * vh, axis=0), g))


def curl(v: VectorField) -> VectorField:
    g = v.grid
    vh = _forward(v.values)
    return VectorField(g, _inverse(1j * np.cross(g.wavevectors, vh, axis=0), g))


def poisson_solve(rho: ScalarField, eps0: float | None = None, tol: float | None = None) -> ScalarField:
    """Zero-mean Φ with ∇²Φ = −ρ/ε₀."""
    g = rho.grid
    eps0 = g.eps0 if eps0 is None else eps0
    tol = CONFIG.tolerances.neutrality if tol is None else tol
    mean = float(rho.values.mean())
    rms = float(np.sqrt(np.mean(rho.values ** 2)))
    if abs(mean) > tol * rms:
        raise NonNeutralSource(f"mean(rho)={mean:.3e} exceeds {tol:.1e}·rms={rms:.3e}")
    phi_hat = _forward(rho.values) * g.inverse_k_squared / eps0
    return ScalarField(g, _inverse(phi_hat, g))


def _longitudinal_hat(v_hat: np.ndarray, g: Grid) -> np.ndarray:
    k = g.wavevectors
    return k * (np.sum(k * v_hat, axis=0) * g.inverse_k_squared)[None]


def helmholtz_split(v: VectorField) -> tuple[VectorField, VectorField]:
    """(transverse, longitudinal); the mean mode goes to the transverse part."""
    g = v.grid
    vh = _forward(v.values)
    lh = _longitudinal_hat(vh, g)
    return VectorField(g, _inverse(vh - lh, g)), VectorField(g, _inverse(lh, g))


def to_spectrum(v: VectorField) -> np.ndarray:
    """rfft half-spectrum of the components, shape (3, N, N, N//2 + 1)."""
    return _forward(v.values)


def from_spectrum(grid: Grid, spectrum: np.ndarray) -> VectorField:
    return VectorField(grid, _inverse(spectrum, grid))


def transverse_spectrum(spectrum: np.ndarray, grid: Grid) -> np.ndarray:
    return spectrum - _longitudinal_hat(spectrum, grid)


def transverse_part(v: VectorField) -> VectorField:
    return helmholtz_split(v)[0]


def longitudinal_part(v: VectorField) -> VectorField:
    return helmholtz_split(v)[1]


def is_transverse(v: VectorField, tol: float | None = None) -> bool:
    """‖div v‖·Δx ≤ tol·‖v‖ (Δx makes the comparison dimensionless)."""
    tol = CONFIG.tolerances.projection if tol is None else tol
    return divergence(v).norm() * v.grid.dx <= tol * v.norm()


def is_longitudinal(v: VectorField, tol: float | None = None) -> bool:
    tol = CONFIG.tolerances.projection if tol is None else tol
    return curl(v).norm() * v.grid.dx <= tol * v.norm()


# ---------------------------------------------------------------------------
# Transverse delta
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4)
def _transverse_kernel(grid: Grid) -> np.ndarray:
    k = grid.wavevectors
    proj = np.eye(3)[:, :, None, None, None] - np.einsum("i...,j...->ij...", k, k) * grid.inverse_k_squared
    # continuum normalization: ∫δ⊥(x − y)·v(y) d³y = Δx³ Σ_y δ⊥(x − y)·v(y)
    return _inverse(proj, grid) / grid.cell_volume


def transverse_delta(grid: Grid) -> np.ndarray:
    """Full real-space transverse delta, shape (3, 3, N, N, N), zero separation at index 0."""
    return _transverse_kernel(grid)


def transverse_projector_kernel(grid: Grid, displacement) -> np.ndarray:
    """δ⊥ᵢⱼ(x − y) for a lattice displacement, given as a position difference."""
    d = np.asarray(displacement, dtype=np.float64) / grid.dx
    offsets = np.rint(d)
    if np.any(np.abs(d - offsets) > 1e-9):
        raise GridError(f"displacement {displacement} is not a lattice vector")
    i, j, k = (offsets.astype(int) % grid.n_per_axis).tolist()
    return _transverse_kernel(grid)[:, :, i, j, k].copy()


def apply_transverse_kernel(v: VectorField) -> VectorField:
    """Real-space convolution with δ⊥. Direct O(N⁶) sum: meant for small grids."""
    g = v.grid
    kernel = _transverse_kernel(g)
    out = np.zeros_like(v.values)
    for offset in np.ndindex(*g.shape):
        shifted = np.roll(v.values, offset, axis=(1, 2, 3))
        out += np.einsum("ij,j...->i...", kernel[(slice(None), slice(None), *offset)], shifted)
    return VectorField(g, out * g.cell_volume)


# ---------------------------------------------------------------------------
# Integrals and sampling
# ---------------------------------------------------------------------------

def inner_product(a: Field, b: Field) -> float:
    if type(a) is not type(b):
        raise TypeError(f"cannot pair {type(a).__name__} with {type(b).__name__}")
    _require_same_grid(a, b)
    return float(np.vdot(a.values, b.values)) * a.grid.cell_volume


def sample_at(v: Field, x, order: int | None = None) -> np.ndarray:
    """
    Interpolate a field at positions x (shape (3,) or (m, 3)), periodically wrapped.

    order=1 (default) is trilinear with O(Δx²) error; higher orders use scipy's
    periodic spline prefilter.
    """
    order = CONFIG.numerics.sample_order if order is None else order
    g = v.grid
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    idx = pts.T / g.dx + g.n_per_axis // 2
    if v.rank == 0:
        out = ndimage.map_coordinates(v.values, idx, order=order, mode="grid-wrap")
    else:
        out = np.stack(
            [ndimage.map_coordinates(v.values[c], idx, order=order, mode="grid-wrap") for c in range(3)],
            axis=-1,
        )
    return out[0] if single else out


__all__ = [
    "Field",
    "Grid",
    "ScalarField",
    "VectorField",
    "apply_transverse_kernel",
    "curl",
    "divergence",
    "from_spectrum",
    "gradient",
    "helmholtz_split",
    "inner_product",
    "is_longitudinal",
    "is_transverse",
    "longitudinal_part",
    "poisson_solve",
    "sample_at",
    "to_spectrum",
    "transverse_delta",
    "transverse_part",
    "transverse_projector_kernel",
    "transverse_spectrum",
]

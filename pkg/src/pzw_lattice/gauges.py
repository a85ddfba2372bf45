"""
Potentials in the Coulomb and Poincaré gauges, and gauge transformations.

Coulomb potentials are lattice fields. Poincaré potentials are pointwise
functionals of the fields, built from line integrals from the origin:

    u(x) = ∫₀¹ E(sx) ds            Φ_P(x) = Φ₀ − x·u(x)
    v(x) = ∫₀¹ s B(sx) ds          A_P(x) = −x × v(x)

so x·A_P = 0 holds algebraically. They are not periodic and are only evaluated
inside the trusted ball |x| ≤ L/4.

Fields enter the Poincaré construction through a probe (positions (m, 3) in,
vectors (m, 3) out): trilinear `sample_at` for general use, or the smeared
Gaussian gather, which is a smooth function of position and keeps the pairing
with smeared sources exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, NamedTuple, get_args

import numpy as np
import pandas as pd

from pzw_lattice.config import CONFIG
from pzw_lattice.errors import GridMismatch, NonTransverseInput, OutOfTrustedRegion, UnknownVariant
from pzw_lattice.lattice import (
    Grid,
    ScalarField,
    VectorField,
    curl,
    gradient,
    inner_product,
    is_transverse,
    sample_at,
    transverse_part,
)
from pzw_lattice.logging_setup import log
from pzw_lattice.multipolar import SQuadrature, magnetization_field, polarization_field
from pzw_lattice.report import ReportRecord, relative
from pzw_lattice.sources import ParticleSet, coulomb_potential, smeared_sample

GaugeLabel = Literal["coulomb", "poincare", "transformed"]
Probe = Callable[[np.ndarray], np.ndarray]
ProbeKind = Literal["lattice", "smeared"]


# ---------------------------------------------------------------------------
# Lattice potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Potentials:
    phi: ScalarField
    a: VectorField
    a_dot: VectorField
    gauge_label: GaugeLabel

    def __post_init__(self) -> None:
        if self.gauge_label not in get_args(GaugeLabel):
            raise UnknownVariant(f"unknown gauge label {self.gauge_label!r}")
        if not (self.phi.grid == self.a.grid == self.a_dot.grid):
            raise GridMismatch("potential components live on different grids")

    @property
    def grid(self) -> Grid:
        return self.phi.grid


@dataclass(frozen=True, eq=False)
class GaugeFunction:
    """χ and ∂ₜχ at one instant."""

    chi: ScalarField
    chi_dot: ScalarField

    def __post_init__(self) -> None:
        if self.chi.grid != self.chi_dot.grid:
            raise GridMismatch("chi and chi_dot live on different grids")

    @classmethod
    def zero(cls, grid: Grid) -> GaugeFunction:
        return cls(ScalarField.zeros(grid), ScalarField.zeros(grid))

    @classmethod
    def from_functions(cls, grid: Grid, chi: Callable, chi_dot: Callable, t: float) -> GaugeFunction:
        """Sample χ(x, y, z, t) and ∂ₜχ(x, y, z, t) at time t."""
        return cls(
            ScalarField.from_function(grid, lambda x, y, z: chi(x, y, z, t)),
            ScalarField.from_function(grid, lambda x, y, z: chi_dot(x, y, z, t)),
        )

    @classmethod
    def separable(cls, profile: ScalarField, amplitude: float, rate: float) -> GaugeFunction:
        """χ = f(x)·a(t) with a(t) = amplitude and ȧ(t) = rate at this instant."""
        return cls(profile * amplitude, profile * rate)


def coulomb_potentials(e: VectorField, a_perp: VectorField, p: ParticleSet,
                       tol: float | None = None) -> Potentials:
    """Φ_C from the charges, A = A⊥, ∂ₜA = −E⊥."""
    if not is_transverse(a_perp, tol):
        raise NonTransverseInput("vector potential handed to the Coulomb gauge has a divergence")
    return Potentials(
        phi=coulomb_potential(p, e.grid),
        a=a_perp,
        a_dot=-transverse_part(e),
        gauge_label="coulomb",
    )


def apply_gauge_transform(pot: Potentials, chi: GaugeFunction) -> Potentials:
    """Φ' = Φ + ∂ₜχ, A' = A − ∇χ, ∂ₜA' = ∂ₜA − ∇∂ₜχ."""
    return Potentials(
        phi=pot.phi + chi.chi_dot,
        a=pot.a - gradient(chi.chi),
        a_dot=pot.a_dot - gradient(chi.chi_dot),
        gauge_label="transformed",
    )


def fields_from_potentials(pot: Potentials) -> tuple[VectorField, VectorField]:
    """(E, B) = (−∂ₜA − ∇Φ, curl A)."""
    return -pot.a_dot - gradient(pot.phi), curl(pot.a)


# ---------------------------------------------------------------------------
# Probes
# ---------------------------------------------------------------------------

def lattice_probe(v: VectorField, order: int | None = None) -> Probe:
    return lambda pts: sample_at(v, pts, order)


def smeared_probe(v: VectorField, sigma: float) -> Probe:
    return lambda pts: smeared_sample(v, pts, sigma)


def zero_probe(pts: np.ndarray) -> np.ndarray:
    return np.zeros_like(np.atleast_2d(pts))


def make_probe(v: VectorField | Probe | None, kind: ProbeKind = "lattice", sigma: float | None = None) -> Probe:
    if v is None:
        return zero_probe
    if not isinstance(v, VectorField):
        return v
    if kind == "lattice":
        return lattice_probe(v)
    if kind == "smeared":
        if sigma is None:
            raise ValueError("smeared probe needs a width")
        return smeared_probe(v, sigma)
    raise UnknownVariant(f"unknown probe kind {kind!r}")


# ---------------------------------------------------------------------------
# Poincaré gauge
# ---------------------------------------------------------------------------

class PoincarePoint(NamedTuple):
    phi: np.ndarray
    a: np.ndarray


@dataclass(frozen=True, eq=False)
class PoincareGauge:
    """Poincaré potentials about `origin` (the charge centre) for one field snapshot."""

    e_probe: Probe = zero_probe
    b_probe: Probe = zero_probe
    phi0: float = 0.0
    quad: SQuadrature = field(default_factory=SQuadrature.default)
    radius: float = math.inf
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def from_fields(
        cls,
        e: VectorField | Probe | None,
        b: VectorField | Probe | None,
        phi0: float = 0.0,
        quad: SQuadrature | None = None,
        probe: ProbeKind = "lattice",
        sigma: float | None = None,
        origin=None,
        radius: float | None = None,
    ) -> PoincareGauge:
        """
        Lattice fields bound the trusted ball by their grid. Callable probes carry
        no grid: pass `radius` to bound them, otherwise every point is accepted.
        """
        grids = [f.grid for f in (e, b) if isinstance(f, VectorField)]
        if len(grids) == 2 and grids[0] != grids[1]:
            raise GridMismatch("E and B live on different grids")
        return cls(
            e_probe=make_probe(e, probe, sigma),
            b_probe=make_probe(b, probe, sigma),
            phi0=phi0,
            quad=quad or SQuadrature.default(),
            radius=radius if radius is not None else (grids[0].trusted_radius if grids else math.inf),
            origin=np.zeros(3) if origin is None else np.asarray(origin, dtype=np.float64),
        )

    def _points(self, x) -> tuple[np.ndarray, bool]:
        """Positions relative to the origin, checked against the trusted radius."""
        pts = np.asarray(x, dtype=np.float64)
        single = pts.ndim == 1
        rel = np.atleast_2d(pts) - self.origin
        r = np.linalg.norm(rel, axis=1)
        if r.size and r.max() > self.radius * (1 + 1e-12):
            raise OutOfTrustedRegion(f"|x| = {r.max():.4g} > {self.radius:.4g}")
        return rel, single

    def _line_integral(self, probe: Probe, rel: np.ndarray, s_power: int) -> np.ndarray:
        nodes = self.origin + self.quad.nodes[:, None, None] * rel[None]
        values = np.asarray(probe(nodes.reshape(-1, 3)), dtype=np.float64).reshape(nodes.shape)
        return np.tensordot(self.quad.weights * self.quad.nodes ** s_power, values, axes=(0, 0))

    def u(self, x) -> np.ndarray:
        rel, single = self._points(x)
        out = self._line_integral(self.e_probe, rel, 0)
        return out[0] if single else out

    def v(self, x) -> np.ndarray:
        rel, single = self._points(x)
        out = self._line_integral(self.b_probe, rel, 1)
        return out[0] if single else out

    def phi(self, x) -> np.ndarray:
        rel, single = self._points(x)
        out = self.phi0 - np.einsum("mi,mi->m", rel, self._line_integral(self.e_probe, rel, 0))
        return out[0] if single else out

    def a(self, x) -> np.ndarray:
        rel, single = self._points(x)
        out = -np.cross(rel, self._line_integral(self.b_probe, rel, 1))
        return out[0] if single else out

    def potentials(self, x) -> PoincarePoint:
        return PoincarePoint(self.phi(x), self.a(x))


def poincare_auxiliary_u(e: VectorField | Probe, x, quad: SQuadrature | None = None) -> np.ndarray:
    """u(x) = Σ w_i E(s_i x)."""
    return PoincareGauge.from_fields(e, None, quad=quad).u(x)


def poincare_auxiliary_v(b: VectorField | Probe, x, quad: SQuadrature | None = None) -> np.ndarray:
    """v(x) = Σ w_i s_i B(s_i x)."""
    return PoincareGauge.from_fields(None, b, quad=quad).v(x)


def poincare_potentials(e: VectorField | Probe | None, b: VectorField | Probe | None, x,
                        phi0: float = 0.0, quad: SQuadrature | None = None) -> PoincarePoint:
    return PoincareGauge.from_fields(e, b, phi0, quad).potentials(x)


# ---------------------------------------------------------------------------
# Point-stencil derivatives
# ---------------------------------------------------------------------------

_FD_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_FD_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


def point_jacobian(fn: Callable[[np.ndarray], np.ndarray], pts: np.ndarray, h: float) -> np.ndarray:
    """J[m, i, j] = ∂_j f_i at each point by fourth-order central differences (i has size 1 for scalar f)."""
    pts = np.atleast_2d(pts)
    eye = np.eye(3)
    stencil = pts[:, None, None, :] + h * _FD_OFFSETS[None, None, :, None] * eye[None, :, None, :]
    values = np.asarray(fn(stencil.reshape(-1, 3))).reshape(pts.shape[0], 3, _FD_OFFSETS.size, -1)
    # values[m, j, o, i]: component i at offset o along axis j; scalar fn gives i = 0 only
    return np.einsum("o,mjoi->mij", _FD_WEIGHTS, values) / h


def _curl(jac: np.ndarray) -> np.ndarray:
    return np.stack([
        jac[:, 2, 1] - jac[:, 1, 2],
        jac[:, 0, 2] - jac[:, 2, 0],
        jac[:, 1, 0] - jac[:, 0, 1],
    ], axis=-1)


def _radial_derivative(fn: Callable[[np.ndarray], np.ndarray], pts: np.ndarray, h: float) -> np.ndarray:
    """(x·∇)f by fourth-order differences along the ray λx at λ = 1."""
    r = np.linalg.norm(pts, axis=1)
    lam = np.divide(h, r, out=np.zeros_like(r), where=r > 0)
    stencil = pts[:, None, :] * (1.0 + lam[:, None, None] * _FD_OFFSETS[None, :, None])
    values = np.asarray(fn(stencil.reshape(-1, 3))).reshape(pts.shape[0], _FD_OFFSETS.size, 3)
    deriv = np.einsum("o,moi->mi", _FD_WEIGHTS, values)
    return np.divide(deriv, lam[:, None], out=np.zeros_like(deriv), where=lam[:, None] > 0)


def _l2(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(a ** 2)))


def _record(name: str, tag: str, lhs: float, rhs: float, residual: float, tol: float, inputs,
            detail: str) -> ReportRecord:
    rec = ReportRecord.evaluate(name, tag, lhs=lhs, rhs=rhs, residual=residual, tolerance=tol,
                                inputs=inputs, detail=detail)
    log.info("identity_checked", check=name, detail=detail, residual=rec.residual, status=rec.status)
    return rec


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def verify_poincare_condition(b: VectorField | Probe | PoincareGauge, sample_points,
                              quad: SQuadrature | None = None, tol: float = 1e-12,
                              detail: str = "") -> ReportRecord:
    """max |x·A_P(x)| relative to max |x||A_P(x)|."""
    gauge = b if isinstance(b, PoincareGauge) else PoincareGauge.from_fields(None, b, quad=quad)
    pts = np.atleast_2d(np.asarray(sample_points, dtype=np.float64))
    a = gauge.a(pts)
    lhs = float(np.max(np.abs(np.einsum("mi,mi->m", pts, a)), initial=0.0))
    scale = float(np.max(np.linalg.norm(pts, axis=1) * np.linalg.norm(a, axis=1), initial=0.0))
    return _record("poincare_condition", "poincare-gauge-condition", lhs, scale, relative(lhs, scale), tol,
                   (pts, a), detail)


def verify_poincare_reconstruction(
    before: PoincareGauge,
    after: PoincareGauge,
    e_mid: Probe,
    b_mid: Probe,
    dt: float,
    sample_points,
    h: float,
    tol: float | None = None,
    detail: str = "",
) -> list[ReportRecord]:
    """
    B = curl A_P and E = −∇Φ_P − ∂ₜA_P at the mid time of two snapshots dt apart.

    Potentials at mid time are snapshot averages; ∂ₜA_P is their difference over dt.
    """
    tol = CONFIG.tolerances.reconstruct if tol is None else tol
    pts = np.atleast_2d(np.asarray(sample_points, dtype=np.float64))

    def a_mid(x):
        return 0.5 * (before.a(x) + after.a(x))

    def phi_mid(x):
        return 0.5 * (before.phi(x) + after.phi(x))

    b_ref = np.asarray(b_mid(pts))
    b_rec = _curl(point_jacobian(a_mid, pts, h))
    grad_phi = point_jacobian(phi_mid, pts, h)[:, 0, :]
    a_rate = (after.a(pts) - before.a(pts)) / dt
    e_ref = np.asarray(e_mid(pts))
    e_rec = -grad_phi - a_rate

    records = []
    for name, ref, rec in (("poincare_reconstruction_b", b_ref, b_rec), ("poincare_reconstruction_e", e_ref, e_rec)):
        records.append(_record(name, "poincare-potentials", _l2(ref), _l2(rec),
                               relative(_l2(rec - ref), _l2(ref)), tol, (pts, ref, rec), detail))
    return records


def verify_auxiliary_conditions(
    e_t0: VectorField | Probe,
    e_t1: VectorField | Probe,
    b_t0: VectorField | Probe,
    b_t1: VectorField | Probe,
    dt: float,
    sample_points,
    h: float,
    quad: SQuadrature | None = None,
    tol: float | None = None,
    detail: str = "",
    radius: float | None = None,
) -> list[ReportRecord]:
    """
    curl u = −∂ₜv and div v = 0 at the mid time, by stencils over sampled u, v.

    Residuals are relative to the Frobenius norm of the respective Jacobian.
    """
    tol = CONFIG.tolerances.fd if tol is None else tol
    g0 = PoincareGauge.from_fields(e_t0, b_t0, quad=quad, radius=radius)
    g1 = PoincareGauge.from_fields(e_t1, b_t1, quad=quad, radius=radius)
    pts = np.atleast_2d(np.asarray(sample_points, dtype=np.float64))

    ju = point_jacobian(lambda x: 0.5 * (g0.u(x) + g1.u(x)), pts, h)
    jv = point_jacobian(lambda x: 0.5 * (g0.v(x) + g1.v(x)), pts, h)
    v_rate = (g1.v(pts) - g0.v(pts)) / dt
    faraday = _curl(ju) + v_rate
    div_v = np.trace(jv, axis1=1, axis2=2)

    return [
        _record("auxiliary_faraday", "auxiliary-field-conditions", _l2(_curl(ju)), _l2(v_rate),
                relative(_l2(faraday), _l2(ju)), tol, (pts, ju, v_rate), detail),
        _record("auxiliary_divergence", "auxiliary-field-conditions", _l2(div_v), 0.0,
                relative(_l2(div_v), _l2(jv)), tol, (pts, jv), detail),
    ]


def auxiliary_stencil_convergence(
    e_t0: VectorField | Probe,
    e_t1: VectorField | Probe,
    b_t0: VectorField | Probe,
    b_t1: VectorField | Probe,
    dt: float,
    sample_points,
    h: float,
    quad: SQuadrature | None = None,
    radius: float | None = None,
) -> tuple[float, float]:
    """
    (|F(h) − F(h/2)|, |F(h/2) − F(h/4)|) for the Faraday residual F = curl u + ∂ₜv.

    The time-difference error is common to every h and cancels, leaving the
    stencil error alone: the two numbers shrink 16-fold per halving.
    """
    g0 = PoincareGauge.from_fields(e_t0, b_t0, quad=quad, radius=radius)
    g1 = PoincareGauge.from_fields(e_t1, b_t1, quad=quad, radius=radius)
    pts = np.atleast_2d(np.asarray(sample_points, dtype=np.float64))
    v_rate = (g1.v(pts) - g0.v(pts)) / dt
    faraday = [
        _curl(point_jacobian(lambda x: 0.5 * (g0.u(x) + g1.u(x)), pts, step)) + v_rate
        for step in (h, 0.5 * h, 0.25 * h)
    ]
    return _l2(faraday[0] - faraday[1]), _l2(faraday[1] - faraday[2])


def verify_auxiliary_reconstruction(
    e: VectorField | Probe,
    b: VectorField | Probe,
    sample_points,
    h: float,
    quad: SQuadrature | None = None,
    tol: float | None = None,
    detail: str = "",
    radius: float | None = None,
) -> list[ReportRecord]:
    """(x·∇)u + u = E and (x·∇)v + 2v = B at the sample points."""
    tol = CONFIG.tolerances.reconstruct if tol is None else tol
    gauge = PoincareGauge.from_fields(e, b, quad=quad, radius=radius)
    pts = np.atleast_2d(np.asarray(sample_points, dtype=np.float64))
    e_probe, b_probe = gauge.e_probe, gauge.b_probe

    e_rec = _radial_derivative(gauge.u, pts, h) + gauge.u(pts)
    b_rec = _radial_derivative(gauge.v, pts, h) + 2 * gauge.v(pts)
    e_ref = np.asarray(e_probe(pts))
    b_ref = np.asarray(b_probe(pts))
    return [
        _record("auxiliary_reconstruction_e", "auxiliary-field-reconstruction", _l2(e_ref), _l2(e_rec),
                relative(_l2(e_rec - e_ref), _l2(e_ref)), tol, (pts, e_ref), detail),
        _record("auxiliary_reconstruction_b", "auxiliary-field-reconstruction", _l2(b_ref), _l2(b_rec),
                relative(_l2(b_rec - b_ref), _l2(b_ref)), tol, (pts, b_ref), detail),
    ]


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

TABLE_COLUMNS = ["x", "y", "z", "phi", "a_x", "a_y", "a_z", "x_dot_a", "trusted"]


def poincare_table(gauge: PoincareGauge, points) -> pd.DataFrame:
    """
    One row per point: position, Φ_P, A_P and (x − origin)·A_P.

    Points outside the trusted ball get NaN values and trusted=False instead of
    failing the whole table.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    rel = pts - gauge.origin
    trusted = np.linalg.norm(rel, axis=1) <= gauge.radius * (1 + 1e-12)
    phi = np.full(len(pts), np.nan)
    a = np.full((len(pts), 3), np.nan)
    if trusted.any():
        phi[trusted] = gauge.phi(pts[trusted])
        a[trusted] = gauge.a(pts[trusted])
    if not trusted.all():
        log.warning("points_outside_trusted_region", count=int((~trusted).sum()), radius=gauge.radius)
    return pd.DataFrame({
        "x": pts[:, 0], "y": pts[:, 1], "z": pts[:, 2],
        "phi": phi, "a_x": a[:, 0], "a_y": a[:, 1], "a_z": a[:, 2],
        "x_dot_a": np.einsum("mi,mi->m", rel, a),
        "trusted": trusted,
    }, columns=TABLE_COLUMNS)


class CouplingPair(NamedTuple):
    potential_form: float
    multipolar_form: float


def poincare_coupling(p: ParticleSet, e: VectorField, b: VectorField, quad: SQuadrature | None = None,
                      phi0: float = 0.0) -> tuple[CouplingPair, CouplingPair]:
    """
    (−Σ q Φ_P(x_α), ∫P·E) and (Σ q ẋ·A_P(x_α), ∫M·B) for one atom.

    Potentials at the particles use the smeared probe, so each pair agrees to
    rounding; Φ₀ drops out by neutrality.
    """
    quad = quad or SQuadrature.default()
    g = e.grid
    gauge = PoincareGauge.from_fields(e, b, phi0, quad, probe="smeared", sigma=p.smearing_width,
                                      origin=p.reference_point)
    pts = p.positions
    electric = -float(p.charges @ gauge.phi(pts))
    magnetic = float(np.sum(p.charges * np.einsum("mi,mi->m", p.velocities, gauge.a(pts))))
    return (
        CouplingPair(electric, inner_product(polarization_field(p, g, quad), e)),
        CouplingPair(magnetic, inner_product(magnetization_field(p, g, quad), b)),
    )


__all__ = [
    "CouplingPair",
    "GaugeFunction",
    "PoincareGauge",
    "PoincarePoint",
    "Potentials",
    "apply_gauge_transform",
    "auxiliary_stencil_convergence",
    "coulomb_potentials",
    "fields_from_potentials",
    "lattice_probe",
    "make_probe",
    "point_jacobian",
    "poincare_table",
    "poincare_auxiliary_u",
    "poincare_auxiliary_v",
    "poincare_coupling",
    "poincare_potentials",
    "smeared_probe",
    "verify_auxiliary_conditions",
    "verify_auxiliary_reconstruction",
    "verify_poincare_condition",
    "verify_poincare_reconstruction",
]

"""
Scenario documents and the identity-verification suite.

A scenario (JSON) names the grid, the atom, the quadrature, tolerance overrides
and the checks to run. Each check is a function of a SuiteContext returning one
or more ReportRecords; the registry below fixes their declaration order, which
is also the order records are written in.
"""

from __future__ import annotations

import json
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from functools import cached_property
from pathlib import Path
from typing import Callable, Literal

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from pzw_lattice import presets
from pzw_lattice.config import CONFIG, ToleranceCfg
from pzw_lattice.dynamics import (
    TrajectoryConfig,
    continuity_residuals,
    energy_drift,
    halving_ratio,
    run_energy,
    step,
    vacuum_evolve,
)
from pzw_lattice.errors import ConfigError, PzwError
from pzw_lattice.gauges import (
    GaugeFunction,
    apply_gauge_transform,
    auxiliary_stencil_convergence,
    coulomb_potentials,
    fields_from_potentials,
    poincare_coupling,
    smeared_probe,
    verify_auxiliary_conditions,
    verify_auxiliary_reconstruction,
    verify_poincare_condition,
    verify_poincare_reconstruction,
)
from pzw_lattice.io import load_particle_config
from pzw_lattice.lattice import (
    Grid,
    VectorField,
    curl,
    divergence,
    helmholtz_split,
    sample_at,
    transverse_delta,
    transverse_part,
)
from pzw_lattice.logging_setup import get_logger, log
from pzw_lattice.mechanics import (
    FieldState,
    SystemState,
    gauge_delta_L,
    hamiltonian_minimal,
    hamiltonian_pzw,
    lagrangian_generic,
    lagrangian_minimal,
    lagrangian_poincare_modified,
    lagrangian_pzw,
    magic_identity_residual,
    midpoint_state,
    momentum_variant_difference,
    particle_momentum_pzw,
    picture_equivalence,
    supplement_overlap,
)
from pzw_lattice.multipolar import (
    SQuadrature,
    polarization_field,
    verify_charge_identity,
    verify_current_identity,
    verify_displacement_transverse,
    verify_longitudinal_consistency,
)
from pzw_lattice.report import ReportRecord, relative
from pzw_lattice.sources import (
    ParticleSet,
    coulomb_potential,
    free_space_field,
    free_space_potential,
    longitudinal_field,
    self_energy,
)

AtomPreset = Literal["hydrogen_like", "three_particle", "random_atom", "circular_orbit"]
CheckFn = Callable[["SuiteContext"], list[ReportRecord]]

CHECKS: dict[str, CheckFn] = {}


def check(name: str) -> Callable[[CheckFn], CheckFn]:
    def register(fn: CheckFn) -> CheckFn:
        CHECKS[name] = fn
        return fn
    return register


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------

class GridSpec(BaseModel):
    n_per_axis: int = Field(default=CONFIG.numerics.grid_n, ge=8)
    box_length: float = Field(default=CONFIG.numerics.box_length, gt=0)
    eps0: float = Field(default=1.0, gt=0)
    mu0: float = Field(default=1.0, gt=0)

    @field_validator("n_per_axis")
    @classmethod
    def _even(cls, v: int) -> int:
        if v % 2:
            raise ValueError("n_per_axis must be even")
        return v

    def build(self) -> Grid:
        return Grid(self.n_per_axis, self.box_length, self.eps0, self.mu0)


class DynamicsSpec(BaseModel):
    dt_cells: float = Field(default=0.25, gt=0)
    """Time step in units of Δx/c."""
    n_steps: int = Field(default=1000, ge=0)
    output_stride: int = Field(default=10, ge=1)
    warmup_steps: int = Field(default=8, ge=0)
    initial_field: Literal["zero", "random"] = "zero"


class Scenario(BaseModel):
    name: str = Field(default="default", pattern=r"^[A-Za-z0-9_.-]+$")
    grid: GridSpec = Field(default_factory=GridSpec)
    sigma_cells: float = Field(default=CONFIG.numerics.sigma_cells, ge=3.0)
    particles: AtomPreset = "hydrogen_like"
    particles_file: Path | None = None
    quad_order: int = Field(default=CONFIG.numerics.quad_order, ge=1)
    tolerances: dict[str, float] = Field(default_factory=dict)
    checks: list[str] = Field(default_factory=lambda: list(CHECKS))
    seed: int = Field(default=0, ge=0)
    dynamics: DynamicsSpec = Field(default_factory=DynamicsSpec)
    electrostatics_grid: int = Field(default=128, ge=8)
    random_states: int = Field(default=20, ge=1)
    gauge_functions: int = Field(default=10, ge=1)
    probe_points: int = Field(default=100, ge=1)
    stencil_points: int = Field(default=24, ge=1)
    fd_dt_fraction: float = Field(default=1 / 16, gt=0, le=1)

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, v: dict[str, float]) -> dict[str, float]:
        known = {f.name for f in fields(ToleranceCfg)}
        unknown = sorted(set(v) - known)
        if unknown:
            raise ValueError(f"unknown tolerances {unknown}; known: {sorted(known)}")
        bad = sorted(k for k, t in v.items() if not (t >= 0 and math.isfinite(t)))
        if bad:
            raise ValueError(f"tolerances must be finite and non-negative: {bad}")
        return v

    @field_validator("checks")
    @classmethod
    def _known_checks(cls, v: list[str]) -> list[str]:
        unknown = [c for c in v if c not in CHECKS]
        if unknown:
            raise ValueError(f"unknown checks {unknown}")
        if len(set(v)) != len(v):
            raise ValueError("checks listed twice")
        return v

    @model_validator(mode="after")
    def _electrostatics_grid_even(self) -> Scenario:
        if self.electrostatics_grid % 2:
            raise ValueError("electrostatics_grid must be even")
        return self


def load_scenario(path: Path) -> Scenario:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"scenario not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"scenario {path} is not valid JSON: {e}") from e
    if isinstance(raw, dict) and raw.get("particles_file"):
        # relative to the scenario file
        raw["particles_file"] = str((Path(path).parent / raw["particles_file"]).resolve())
    return _validate(raw, str(path))


def _validate(raw: dict, source: str) -> Scenario:
    try:
        return Scenario.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid scenario {source}: {e}") from e


def with_overrides(scenario: Scenario, grid: int | None = None, sigma: float | None = None,
                   seed: int | None = None) -> Scenario:
    """CLI flags over scenario values, revalidated."""
    raw = scenario.model_dump()
    if grid is not None:
        raw["grid"]["n_per_axis"] = grid
    if sigma is not None:
        raw["sigma_cells"] = sigma
    if seed is not None:
        raw["seed"] = seed
    return _validate(raw, "overrides")


# ---------------------------------------------------------------------------
# Context
# ---------------------------------------------------------------------------

@dataclass
class SuiteContext:
    scenario: Scenario
    tol_scale: float = 1.0

    @cached_property
    def tol(self) -> ToleranceCfg:
        return replace(CONFIG.tolerances, **self.scenario.tolerances).scaled(self.tol_scale)

    @cached_property
    def grid(self) -> Grid:
        return self.scenario.grid.build()

    @cached_property
    def sigma(self) -> float:
        return presets.default_sigma(self.grid, self.scenario.sigma_cells)

    @cached_property
    def quad(self) -> SQuadrature:
        return SQuadrature.gauss_legendre(self.scenario.quad_order)

    @property
    def dt(self) -> float:
        return self.scenario.dynamics.dt_cells * self.grid.dx / self.grid.c

    @property
    def fd_dt(self) -> float:
        return self.dt * self.scenario.fd_dt_fraction

    @property
    def h(self) -> float:
        return 0.5 * self.grid.dx

    def rng(self, stream: str) -> np.random.Generator:
        """Independent stream per consumer, so checks stay reproducible in any subset or order."""
        return np.random.default_rng([self.scenario.seed, zlib.crc32(stream.encode())])

    @cached_property
    def atom(self) -> ParticleSet:
        sc = self.scenario
        if sc.particles_file is not None:
            return load_particle_config(sc.particles_file).to_particle_set(self.grid, sc.sigma_cells)
        if sc.particles == "random_atom":
            return presets.random_atom(self.grid, self.rng("atom"), sigma=self.sigma)
        return getattr(presets, sc.particles)(self.grid, self.sigma)

    @cached_property
    def orbit(self) -> ParticleSet:
        return presets.circular_orbit(self.grid, self.sigma)

    @cached_property
    def atoms(self) -> list[tuple[str, ParticleSet]]:
        """Atoms at rest or moving, for the source identities."""
        g, s = self.grid, self.sigma
        return [
            ("dipole", presets.hydrogen_like(g, s)),
            ("three_particle", presets.three_particle(g, s)),
            ("random_z4", presets.random_atom(g, self.rng("random_z4"), sigma=s)),
            (f"scenario:{self.scenario.name}", self.atom),
        ]

    @cached_property
    def moving_atoms(self) -> list[tuple[str, ParticleSet]]:
        candidates = [("circular_orbit", self.orbit), *self.atoms[1:]]
        return [(label, p) for label, p in candidates if np.any(p.velocities[p.mobile] != 0)]

    @cached_property
    def radiating_pair(self) -> tuple[SystemState, SystemState]:
        return presets.radiating_snapshot_pair(self.grid, self.dt, self.scenario.dynamics.warmup_steps,
                                               self.fd_dt, particles=self.orbit)

    @cached_property
    def random_states(self) -> list[SystemState]:
        rng = self.rng("random_states")
        return [
            SystemState(presets.random_atom(self.grid, rng, z=4, sigma=self.sigma),
                        presets.random_field_state(self.grid, rng))
            for _ in range(self.scenario.random_states)
        ]

    @cached_property
    def probe_points(self) -> np.ndarray:
        """Uniform in the ball |x| ≤ L/8."""
        rng = self.rng("probe_points")
        n = self.scenario.probe_points
        directions = rng.normal(size=(n, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = self.grid.probe_radius * rng.uniform(0.0, 1.0, size=n) ** (1 / 3)
        return directions * radii[:, None]

    @property
    def stencil_points(self) -> np.ndarray:
        """Probe points kept away from the edge of the ball by the stencil reach."""
        pts = self.probe_points
        inner = pts[np.linalg.norm(pts, axis=1) <= self.grid.probe_radius - 2 * self.h]
        return inner[: self.scenario.stencil_points]


def _record(name: str, tag: str, lhs: float, rhs: float, residual: float, tol: float, inputs=(),
            detail: str = "") -> ReportRecord:
    rec = ReportRecord.evaluate(name, tag, lhs=lhs, rhs=rhs, residual=residual, tolerance=tol,
                                inputs=inputs, detail=detail)
    log.info("identity_checked", check=name, detail=detail, residual=rec.residual, status=rec.status)
    return rec


def _convergence_record(name: str, tag: str, coarse: float, fine: float, ctx: SuiteContext,
                        inputs, expected: float = 4.0) -> ReportRecord:
    """|coarse/fine − expected| for a residual at dt and dt/2, or h and h/2."""
    ratio = halving_ratio(coarse, fine)
    tol = ctx.tol.ratio * expected / 4
    return _record(f"{name}_convergence", tag, coarse, fine, abs(ratio - expected), tol, inputs,
                   f"ratio={ratio:.4f}")


# ---------------------------------------------------------------------------
# Lattice
# ---------------------------------------------------------------------------

@check("helmholtz_split")
def _helmholtz_split(ctx: SuiteContext) -> list[ReportRecord]:
    g = ctx.grid
    v = presets.band_limited_vector(g, ctx.rng("helmholtz"), kmax=g.n_per_axis // 4)
    perp, long = helmholtz_split(v)
    tol = ctx.tol.projection
    return [
        _record("helmholtz_sum", "helmholtz-decomposition", v.norm(), (perp + long).norm(),
                relative((perp + long - v).norm(), v.norm()), tol, (v,)),
        _record("helmholtz_transverse", "helmholtz-decomposition", divergence(perp).norm(), 0.0,
                relative(divergence(perp).norm() * g.dx, perp.norm()), tol, (v,)),
        _record("helmholtz_longitudinal", "helmholtz-decomposition", curl(long).norm(), 0.0,
                relative(curl(long).norm() * g.dx, long.norm()), tol, (v,)),
    ]


@check("transverse_delta_trace")
def _transverse_delta_trace(ctx: SuiteContext) -> list[ReportRecord]:
    g = ctx.grid
    n3 = g.n_per_axis ** 3
    kernel = transverse_delta(g)
    trace = np.trace(kernel, axis1=0, axis2=1)
    at_zero = float(trace[0, 0, 0]) * g.cell_volume
    summed = float(trace.sum()) * g.cell_volume
    expected = 2.0 + 8.0 / n3
    return [
        _record("transverse_delta_trace", "transverse-delta", at_zero, expected, abs(at_zero - expected),
                ctx.tol.exact, (g,), "cell volume times trace at zero separation"),
        _record("transverse_delta_trace_sum", "transverse-delta", summed, 3.0, abs(summed - 3.0),
                ctx.tol.exact, (g,), "lattice sum carries the mean mode"),
    ]


# ---------------------------------------------------------------------------
# Multipolar sources
# ---------------------------------------------------------------------------

@check("charge_identity")
def _charge_identity(ctx: SuiteContext) -> list[ReportRecord]:
    return [verify_charge_identity(p, ctx.grid, ctx.quad, ctx.tol.identity, label) for label, p in ctx.atoms]


@check("current_identity")
def _current_identity(ctx: SuiteContext) -> list[ReportRecord]:
    return [verify_current_identity(p, ctx.grid, ctx.quad, ctx.tol.identity, label)
            for label, p in ctx.moving_atoms]


@check("longitudinal_consistency")
def _longitudinal_consistency(ctx: SuiteContext) -> list[ReportRecord]:
    return [verify_longitudinal_consistency(p, ctx.grid, ctx.quad, ctx.tol.identity, label)
            for label, p in ctx.atoms]


@check("displacement_transverse")
def _displacement_transverse(ctx: SuiteContext) -> list[ReportRecord]:
    e_perp = presets.random_field_state(ctx.grid, ctx.rng("displacement")).e_perp
    return [verify_displacement_transverse(p, ctx.grid, e_perp, ctx.quad, ctx.tol.identity, label)
            for label, p in ctx.atoms]


def _dipole_on_refined_grid(ctx: SuiteContext) -> tuple[Grid, ParticleSet, np.ndarray]:
    """±1 at ±6Δx on the x axis of the refined grid, and lattice sites with 5σ ≤ r ≤ L/8 from +q."""
    base = ctx.grid
    g = Grid(ctx.scenario.electrostatics_grid, base.box_length, base.eps0, base.mu0)
    sigma = ctx.scenario.sigma_cells * g.dx
    half = 6 * g.dx
    p = ParticleSet(
        charges=[1.0, -1.0],
        masses=[presets.NUCLEUS_MASS, presets.ELECTRON_MASS],
        positions=[[half, 0, 0], [-half, 0, 0]],
        velocities=np.zeros((2, 3)),
        smearing_width=sigma,
        immobile_nucleus=False,
    )
    r_cells = np.arange(math.ceil(5 * sigma / g.dx - 1e-9), math.floor(g.probe_radius / g.dx + 1e-9) + 1)
    if r_cells.size == 0:
        raise ConfigError(f"no lattice radius with 5σ ≤ r ≤ L/8 on N={g.n_per_axis}; refine the grid")
    pts = []
    for r in r_cells * g.dx:
        pts += [[half + r, 0, 0], [half, r, 0], [half, 0, r], [half, -r, 0]]
    return g, p, np.array(pts)


@check("electrostatics")
def _electrostatics(ctx: SuiteContext) -> list[ReportRecord]:
    g, p, pts = _dipole_on_refined_grid(ctx)
    phi_lat = sample_at(coulomb_potential(p, g), pts, order=1)
    e_lat = sample_at(longitudinal_field(p, g), pts, order=1)

    def errors(volume: float | None) -> tuple[np.ndarray, np.ndarray, float, float]:
        phi_ref = free_space_potential(p, pts, g.eps0, volume)
        e_ref = free_space_field(p, pts, g.eps0, volume)
        phi_err = float(np.max(np.abs(phi_lat - phi_ref) / np.abs(phi_ref)))
        e_err = float(np.max(np.linalg.norm(e_lat - e_ref, axis=1) / np.linalg.norm(e_ref, axis=1)))
        return phi_ref, e_ref, phi_err, e_err

    phi_ref, e_ref, phi_err, e_err = errors(g.volume)
    # the bare free-space oracle lacks the periodic-image term; reported, not judged
    _, _, phi_bare, e_bare = errors(None)
    detail = f"N={g.n_per_axis} points={len(pts)}"
    return [
        _record("electrostatics_potential", "electrostatic-potential", float(np.abs(phi_lat).max()),
                float(np.abs(phi_ref).max()), phi_err, ctx.tol.electrostatics, (g, pts),
                f"{detail} free_space={phi_bare:.3e}"),
        _record("electrostatics_field", "electrostatic-field", float(np.abs(e_lat).max()),
                float(np.abs(e_ref).max()), e_err, ctx.tol.electrostatics, (g, pts),
                f"{detail} free_space={e_bare:.3e}"),
    ]


# ---------------------------------------------------------------------------
# Gauges
# ---------------------------------------------------------------------------

@check("gauge_invariance")
def _gauge_invariance(ctx: SuiteContext) -> list[ReportRecord]:
    s = ctx.random_states[0]
    pot = coulomb_potentials(s.e, s.field.a_perp, s.particles)
    e0, b0 = fields_from_potentials(pot)
    l0 = lagrangian_minimal(s).total
    rng = ctx.rng("gauge_invariance")
    field_err = a_err = lag_err = 0.0
    for _ in range(ctx.scenario.gauge_functions):
        moved = apply_gauge_transform(pot, presets.random_gauge(ctx.grid, rng))
        e1, b1 = fields_from_potentials(moved)
        field_err = max(field_err, relative((e1 - e0).norm(), e0.norm()), relative((b1 - b0).norm(), b0.norm()))
        a_perp = transverse_part(moved.a)
        a_err = max(a_err, relative((a_perp - pot.a).norm(), pot.a.norm()))
        rebuilt = SystemState(s.particles, FieldState.project(moved.a, -moved.a_dot), s.time)
        lag_err = max(lag_err, relative(abs(lagrangian_minimal(rebuilt).total - l0), abs(l0)))
    n = f"gauges={ctx.scenario.gauge_functions}"
    tol = ctx.tol.exact
    return [
        _record("gauge_invariance_fields", "gauge-invariance", e0.norm(), b0.norm(), field_err, tol, (s.field.a_perp,), n),
        _record("gauge_invariance_transverse_a", "gauge-invariance", pot.a.norm(), 0.0, a_err, tol, (s.field.a_perp,), n),
        _record("gauge_invariance_lagrangian", "gauge-invariance", l0, 0.0, lag_err, tol, (s.field.a_perp,), n),
    ]


@check("gauge_change_law")
def _gauge_change_law(ctx: SuiteContext) -> list[ReportRecord]:
    g = ctx.grid
    p0 = ctx.orbit
    omega = presets.orbit_angular_velocity(p0)
    rate = 3.0 * omega
    profile = presets.band_limited_scalar(g, ctx.rng("gauge_change_law"))

    def gauge_at(t: float) -> GaugeFunction:
        return GaugeFunction.separable(profile, math.cos(rate * t), -rate * math.sin(rate * t))

    def state(t: float) -> SystemState:
        return SystemState(presets.rotated_orbit(p0, omega, t), FieldState.zeros(g), t)

    t0 = 0.3 / omega
    residuals, comparisons = [], []
    for dt in (ctx.dt, 0.5 * ctx.dt):
        s = state(t0)
        pot = coulomb_potentials(s.e, s.field.a_perp, s.particles)
        cmp = gauge_delta_L(s, pot, gauge_at, state(t0 - dt), state(t0 + dt))
        residuals.append(abs(cmp.lhs - cmp.rhs))
        comparisons.append(cmp)
    fine = comparisons[-1]
    inputs = (p0.positions, p0.velocities, profile)
    return [
        _record("gauge_change_law", "gauge-change-lagrangian", fine.lhs, fine.rhs, fine.residual, ctx.tol.fd,
                inputs, f"dt={0.5 * ctx.dt:.4g}"),
        _convergence_record("gauge_change_law", "gauge-change-lagrangian", residuals[0], residuals[1], ctx, inputs),
    ]


@check("poincare_condition")
def _poincare_condition(ctx: SuiteContext) -> list[ReportRecord]:
    before, _ = ctx.radiating_pair
    gauge = before.poincare_gauge(quad=ctx.quad)
    return [verify_poincare_condition(gauge, ctx.probe_points, tol=ctx.tol.exact,
                                      detail=f"points={len(ctx.probe_points)}")]


def _smeared(ctx: SuiteContext, v: VectorField):
    return smeared_probe(v, ctx.orbit.smearing_width)


@check("poincare_reconstruction")
def _poincare_reconstruction(ctx: SuiteContext) -> list[ReportRecord]:
    before, after = ctx.radiating_pair
    e_mid = _smeared(ctx, (before.e + after.e) * 0.5)
    b_mid = _smeared(ctx, (before.b + after.b) * 0.5)
    return verify_poincare_reconstruction(
        before.poincare_gauge(quad=ctx.quad), after.poincare_gauge(quad=ctx.quad), e_mid, b_mid,
        after.time - before.time, ctx.stencil_points, ctx.h, ctx.tol.reconstruct,
        detail=f"points={len(ctx.stencil_points)} h={ctx.h:.4g}",
    )


@check("auxiliary_conditions")
def _auxiliary_conditions(ctx: SuiteContext) -> list[ReportRecord]:
    before, after = ctx.radiating_pair
    fields = tuple(_smeared(ctx, v) for v in (before.e, after.e, before.b, after.b))
    dt, pts, radius = after.time - before.time, ctx.stencil_points, ctx.grid.trusted_radius
    records = verify_auxiliary_conditions(*fields, dt, pts, ctx.h, ctx.quad, ctx.tol.fd,
                                          detail=f"points={len(pts)} h={ctx.h:.4g}", radius=radius)
    coarse, fine = auxiliary_stencil_convergence(*fields, dt, pts, ctx.h, ctx.quad, radius=radius)
    records.append(_convergence_record("auxiliary_faraday_stencil", "auxiliary-field-conditions",
                                       coarse, fine, ctx, (pts, ctx.h), expected=16.0))
    return records


@check("auxiliary_reconstruction")
def _auxiliary_reconstruction(ctx: SuiteContext) -> list[ReportRecord]:
    before, _ = ctx.radiating_pair
    return verify_auxiliary_reconstruction(
        _smeared(ctx, before.e), _smeared(ctx, before.b), ctx.stencil_points, ctx.h, ctx.quad,
        ctx.tol.reconstruct, detail=f"points={len(ctx.stencil_points)} h={ctx.h:.4g}",
        radius=ctx.grid.trusted_radius,
    )


@check("poincare_coupling")
def _poincare_coupling(ctx: SuiteContext) -> list[ReportRecord]:
    s, _ = ctx.radiating_pair
    p = s.particles
    electric, magnetic = poincare_coupling(p, s.e, s.b, ctx.quad, phi0=0.0)
    shifted, _ = poincare_coupling(p, s.e, s.b, ctx.quad, phi0=1.7)
    inputs = (p.positions, p.velocities, s.field.a_perp)
    return [
        _record("poincare_coupling_electric", "poincare-coupling", electric.potential_form,
                electric.multipolar_form,
                relative(abs(electric.potential_form - electric.multipolar_form), abs(electric.multipolar_form)),
                ctx.tol.multipolar, inputs),
        _record("poincare_coupling_magnetic", "poincare-coupling", magnetic.potential_form,
                magnetic.multipolar_form,
                relative(abs(magnetic.potential_form - magnetic.multipolar_form), abs(magnetic.multipolar_form)),
                ctx.tol.multipolar, inputs),
        _record("poincare_phi0_independence", "poincare-coupling", electric.potential_form,
                shifted.potential_form,
                relative(abs(electric.potential_form - shifted.potential_form), abs(electric.potential_form)),
                ctx.tol.exact, inputs, "phi0=1.7"),
    ]


@check("uniform_b_momentum")
def _uniform_b_momentum(ctx: SuiteContext) -> list[ReportRecord]:
    g = ctx.grid
    b0 = np.array([0.0, 0.0, 1.0])
    s = SystemState(ctx.orbit, FieldState.zeros(g))
    p = s.particles
    worst, lhs_norm, rhs_norm = 0.0, 0.0, 0.0
    for alpha in p.mobile.tolist():
        magnetic = particle_momentum_pzw(s, alpha, ctx.quad, b=presets.uniform_b(g, b0)) - p.masses[alpha] * p.velocities[alpha]
        symmetric = p.charges[alpha] * 0.5 * np.cross(b0, p.positions[alpha] - p.reference_point)
        worst = max(worst, relative(float(np.linalg.norm(magnetic - symmetric)), float(np.linalg.norm(symmetric))))
        lhs_norm, rhs_norm = float(np.linalg.norm(magnetic)), float(np.linalg.norm(symmetric))
    return [_record("uniform_b_momentum", "uniform-field-momentum", lhs_norm, rhs_norm, worst, ctx.tol.quad,
                    (p.positions, b0))]


# ---------------------------------------------------------------------------
# Mechanics
# ---------------------------------------------------------------------------

def _radiating_triples(ctx: SuiteContext, dt: float, centre_steps: int) -> tuple[SystemState, SystemState, SystemState]:
    rng = ctx.rng("picture_equivalence")
    s = SystemState(ctx.orbit, presets.random_field_state(ctx.grid, rng))
    states = [s]
    for _ in range(centre_steps + 1):
        s = step(s, dt)
        states.append(s)
    return states[centre_steps - 1], states[centre_steps], states[centre_steps + 1]


@check("picture_equivalence")
def _picture_equivalence(ctx: SuiteContext) -> list[ReportRecord]:
    residuals, comparisons = [], []
    for dt, n in ((ctx.dt, 4), (0.5 * ctx.dt, 8)):
        cmp = picture_equivalence(*_radiating_triples(ctx, dt, n), ctx.quad)
        residuals.append(abs(cmp.lhs - cmp.rhs))
        comparisons.append(cmp)
    fine = comparisons[-1]
    inputs = (ctx.orbit.positions, ctx.orbit.velocities, ctx.scenario.seed)
    return [
        _record("picture_equivalence", "pzw-transformation", fine.lhs, fine.rhs, fine.residual, ctx.tol.fd,
                inputs, f"dt={0.5 * ctx.dt:.4g}"),
        _convergence_record("picture_equivalence", "pzw-transformation", residuals[0], residuals[1], ctx, inputs),
    ]


@check("poincare_lagrangian")
def _poincare_lagrangian(ctx: SuiteContext) -> list[ReportRecord]:
    s, _ = ctx.radiating_pair
    poincare = lagrangian_generic(s, s.poincare_gauge(quad=ctx.quad)).total
    pzw = lagrangian_pzw(s, ctx.quad).total
    coulomb = lagrangian_generic(s, coulomb_potentials(s.e, s.field.a_perp, s.particles)).total
    minimal = lagrangian_minimal(s).lattice_total
    inputs = (s.particles.positions, s.field.a_perp)
    return [
        _record("poincare_lagrangian", "poincare-lagrangian", poincare, pzw,
                relative(abs(poincare - pzw), abs(pzw)), ctx.tol.multipolar, inputs),
        _record("coulomb_lagrangian", "minimal-lagrangian", coulomb, minimal,
                relative(abs(coulomb - minimal), abs(minimal)), ctx.tol.exact, inputs),
    ]


@check("hamiltonian_chain")
def _hamiltonian_chain(ctx: SuiteContext) -> list[ReportRecord]:
    legendre_err = multipolar_err = 0.0
    last = None
    for s in ctx.random_states:
        forms = hamiltonian_pzw(s, ctx.quad)
        legendre_err = max(legendre_err, relative(abs(forms.legendre - forms.energy_form), abs(forms.energy_form)))
        multipolar_err = max(multipolar_err,
                             relative(abs(forms.multipolar_form - forms.energy_form), abs(forms.energy_form)))
        last = forms
    detail = f"states={len(ctx.random_states)}"
    inputs = (ctx.scenario.seed, len(ctx.random_states))
    return [
        _record("hamiltonian_legendre", "pzw-hamiltonian", last.legendre, last.energy_form, legendre_err,
                ctx.tol.exact, inputs, detail),
        _record("hamiltonian_multipolar", "pzw-hamiltonian", last.multipolar_form, last.energy_form,
                multipolar_err, ctx.tol.multipolar, inputs, detail),
    ]


@check("hamiltonian_minimal")
def _hamiltonian_minimal(ctx: SuiteContext) -> list[ReportRecord]:
    worst, lhs, rhs = 0.0, 0.0, 0.0
    for s in ctx.random_states:
        lhs = hamiltonian_minimal(s) + self_energy(s.particles, s.grid.eps0)
        rhs = s.energy_form()
        worst = max(worst, relative(abs(lhs - rhs), abs(rhs)))
    return [_record("hamiltonian_minimal", "minimal-hamiltonian", lhs, rhs, worst, ctx.tol.exact,
                    (ctx.scenario.seed, len(ctx.random_states)), f"states={len(ctx.random_states)}")]


@check("momentum_variants")
def _momentum_variants(ctx: SuiteContext) -> list[ReportRecord]:
    worst_perp = worst_long = 0.0
    for s in ctx.random_states[:3]:
        perp, long = momentum_variant_difference(s, ctx.quad)
        scale = polarization_field(s.particles, s.grid, ctx.quad).norm()
        worst_perp = max(worst_perp, relative(perp.norm(), scale))
        worst_long = max(worst_long, relative(long.norm(), scale))
    inputs = (ctx.scenario.seed,)
    return [
        _record("momentum_variant_transverse", "field-momentum-variants", worst_perp, 0.0, worst_perp,
                ctx.tol.projection, inputs, "pzw minus minimal is -P_perp"),
        _record("momentum_variant_longitudinal", "field-momentum-variants", worst_long, 0.0, worst_long,
                ctx.tol.identity, inputs, "no longitudinal difference"),
    ]


@check("supplement_overlap")
def _supplement_overlap(ctx: SuiteContext) -> list[ReportRecord]:
    worst, overlap, scale = 0.0, 0.0, 0.0
    for s in ctx.random_states:
        cmp = supplement_overlap(s)
        overlap, scale = cmp.lhs, cmp.rhs
        worst = max(worst, relative(abs(cmp.lhs), cmp.rhs))
    return [_record("supplement_overlap", "supplement-basis", overlap, scale, worst, ctx.tol.exact,
                    (ctx.scenario.seed, len(ctx.random_states)), f"states={len(ctx.random_states)}")]


@check("magic_identity")
def _magic_identity(ctx: SuiteContext) -> list[ReportRecord]:
    before, after = ctx.radiating_pair
    m = magic_identity_residual(before, after, ctx.quad)
    inputs = (before.particles.positions, after.particles.positions, before.field.a_perp)
    pzw = lagrangian_pzw(midpoint_state(before, after), ctx.quad).total
    modified = lagrangian_poincare_modified(before, after, ctx.quad).total
    return [
        _record("magic_identity", "magic-identity", m.lhs, m.rhs,
                relative(abs(m.lhs - m.rhs), max(abs(m.lhs), abs(m.rhs))), ctx.tol.magic, inputs,
                f"total={m.total:.3e}"),
        _record("modified_poincare_lagrangian", "magic-identity", pzw, modified,
                relative(abs(pzw - modified), abs(m.lhs)), ctx.tol.magic, inputs,
                "relative to |∫P⊥·E⊥|"),
    ]


# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------

@check("vacuum_dispersion")
def _vacuum_dispersion(ctx: SuiteContext) -> list[ReportRecord]:
    g = ctx.grid
    n_steps = 100
    mode = presets.single_mode(g)
    k = 2 * math.pi / g.box_length
    t = n_steps * ctx.dt
    evolved = vacuum_evolve(mode, ctx.dt, n_steps)
    expected = presets.single_mode(g, phase=g.c * k * t)
    err = relative((evolved.a_perp - expected.a_perp).norm(), expected.a_perp.norm())
    return [_record("vacuum_dispersion", "vacuum-dispersion", evolved.a_perp.norm(), expected.a_perp.norm(), err,
                    ctx.tol.exact, (g, ctx.dt, n_steps), f"steps={n_steps}")]


def _orbit_drift(ctx: SuiteContext, dt: float, n_steps: int) -> float:
    s0 = SystemState(ctx.orbit, FieldState.zeros(ctx.grid))
    _, series = run_energy(s0, TrajectoryConfig(dt, n_steps))
    return energy_drift(series)


@check("energy_drift")
def _energy_drift(ctx: SuiteContext) -> list[ReportRecord]:
    n = ctx.scenario.dynamics.n_steps
    if n == 0:
        raise ConfigError("energy drift needs n_steps > 0")
    coarse = _orbit_drift(ctx, ctx.dt, n)
    fine = _orbit_drift(ctx, 0.5 * ctx.dt, 2 * n)
    inputs = (ctx.orbit.positions, ctx.orbit.velocities, ctx.dt, n)
    return [
        _record("energy_drift", "energy-conservation", coarse, 0.0, coarse, ctx.tol.drift, inputs, f"steps={n}"),
        _convergence_record("energy_drift", "energy-conservation", coarse, fine, ctx, inputs),
    ]


@check("continuity")
def _continuity(ctx: SuiteContext) -> list[ReportRecord]:
    s0 = SystemState(ctx.orbit, FieldState.zeros(ctx.grid))
    coarse = float(continuity_residuals([s0, step(s0, ctx.dt)])[0])
    fine = float(continuity_residuals([s0, step(s0, 0.5 * ctx.dt)])[0])
    inputs = (ctx.orbit.positions, ctx.orbit.velocities, ctx.dt)
    return [
        _record("continuity", "continuity", coarse, 0.0, coarse, ctx.tol.fd, inputs),
        _convergence_record("continuity", "continuity", coarse, fine, ctx, inputs),
    ]


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def _run_check(ctx: SuiteContext, name: str) -> list[ReportRecord]:
    clog = get_logger(scenario=ctx.scenario.name, check=name)
    try:
        records = CHECKS[name](ctx)
    except PzwError as e:
        clog.error("check_failed", error=str(e), kind=type(e).__name__)
        return [ReportRecord.evaluate(name, "error", lhs=math.nan, rhs=math.nan, residual=math.inf,
                                      tolerance=0.0, inputs=(type(e).__name__,), detail=str(e))]
    clog.debug("check_done", records=len(records), failed=sum(not r.passed for r in records))
    return records


def run_suite(ctx: SuiteContext, workers: int = 1) -> list[ReportRecord]:
    """Records of every configured check, in declaration order whatever the worker count."""
    names = [n for n in CHECKS if n in set(ctx.scenario.checks)]
    slog = get_logger(scenario=ctx.scenario.name)
    slog.info("suite_started", checks=len(names), workers=workers)
    if workers > 1:
        # shared inputs are built once before the pool fans out
        ctx.random_states, ctx.radiating_pair  # noqa: B018
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(lambda n: _run_check(ctx, n), names))
    else:
        batches = [_run_check(ctx, n) for n in names]
    records = [r for batch in batches for r in batch]
    slog.info("suite_done", records=len(records), failed=sum(not r.passed for r in records))
    return records


__all__ = [
    "CHECKS",
    "DynamicsSpec",
    "GridSpec",
    "Scenario",
    "SuiteContext",
    "load_scenario",
    "run_suite",
    "with_overrides",
]

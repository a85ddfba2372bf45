"""Lagrangians, momenta and Hamiltonians of an atom coupled to the transverse field."""

import numpy as np
import pytest

from pzw_lattice import presets
from pzw_lattice.dynamics import step, vacuum_evolve
from pzw_lattice.errors import GridMismatch, InconsistentPotentials, NonTransverseInput, UnknownVariant
from pzw_lattice.gauges import GaugeFunction, PoincareGauge, Potentials, coulomb_potentials
from pzw_lattice.lattice import Grid, ScalarField, VectorField, inner_product
from pzw_lattice.mechanics import (
    FieldState,
    SystemState,
    field_momentum,
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
    particle_momentum_minimal,
    particle_momentum_pzw,
    picture_equivalence,
    pzw_boundary_term,
    supplement_overlap,
)
from pzw_lattice.multipolar import polarization_field
from pzw_lattice.sources import ParticleSet, self_energy


class TestFieldState:
    def test_rejects_longitudinal_input(self, grid16, rng):
        v = presets.band_limited_vector(grid16, rng)
        with pytest.raises(NonTransverseInput):
            FieldState(v, VectorField.zeros(grid16))

    def test_rejects_grid_mismatch(self, grid16):
        with pytest.raises(GridMismatch):
            FieldState(VectorField.zeros(grid16), VectorField.zeros(Grid(16, 2.0)))

    def test_project_keeps_transverse_parts(self, grid16, rng):
        a = presets.band_limited_vector(grid16, rng)
        e = presets.band_limited_vector(grid16, rng)
        state = FieldState.project(a, e)
        assert state.grid == grid16

    def test_single_mode_energy(self, grid16):
        mode = presets.single_mode(grid16, amplitude=0.2)
        k = 2 * np.pi
        # E and B each carry a²k²/4 over the unit box
        assert mode.energy() == pytest.approx(0.2**2 * k**2 / 2, rel=1e-10)


class TestLagrangians:
    def test_coulomb_generic_matches_minimal(self, random_state):
        s = random_state
        generic = lagrangian_generic(s, coulomb_potentials(s.e, s.field.a_perp, s.particles)).total
        assert generic == pytest.approx(lagrangian_minimal(s).lattice_total, rel=1e-10)

    def test_poincare_generic_matches_pzw(self, random_state, quad):
        s = random_state
        poincare = lagrangian_generic(s, s.poincare_gauge(quad=quad)).total
        assert poincare == pytest.approx(lagrangian_pzw(s, quad).total, rel=1e-9)

    def test_inconsistent_potentials(self, random_state, grid16):
        s = random_state
        bogus = Potentials(ScalarField.zeros(grid16), s.field.a_perp, -s.field.e_perp, "coulomb")
        with pytest.raises(InconsistentPotentials):
            lagrangian_generic(s, bogus)

    def test_breakdown_totals(self, random_state):
        lag = lagrangian_minimal(random_state)
        assert lag.total == pytest.approx(lag.kinetic + lag.electrostatic + lag.field + lag.interaction)
        assert lag.lattice_total == pytest.approx(lag.total - lag.self_energy)
        assert lag.self_energy > 0

    def test_pictures_differ_by_a_total_derivative(self, grid16, orbit, quad):
        s = SystemState(orbit, presets.random_field_state(grid16, np.random.default_rng(5)))
        dt = 0.1 * grid16.dx / grid16.c
        states = [s]
        for _ in range(3):
            states.append(step(states[-1], dt))
        cmp = picture_equivalence(states[0], states[1], states[2], quad)
        assert cmp.residual < 2e-2, cmp

    def test_boundary_term_only_sees_transverse_field(self, random_state, quad):
        s = random_state
        pol = polarization_field(s.particles, s.grid, quad)
        assert pzw_boundary_term(s, quad) == pytest.approx(inner_product(pol, s.field.a_perp), rel=1e-9)
        assert pzw_boundary_term(SystemState(s.particles, FieldState.zeros(s.grid)), quad) == 0.0

    def test_gauge_change_law_for_a_linear_ramp(self, grid16, dipole, random_state, rng):
        profile = presets.band_limited_scalar(grid16, rng)

        def gauge_at(t: float) -> GaugeFunction:
            return GaugeFunction.separable(profile, 0.2 + 0.5 * t, 0.5)

        def state(t: float) -> SystemState:
            return SystemState(dipole, random_state.field, t)

        s = state(1.0)
        pot = coulomb_potentials(s.e, s.field.a_perp, s.particles)
        cmp = gauge_delta_L(s, pot, gauge_at, state(0.9), state(1.1))
        # at rest: ΔL = −∫ρ ∂ₜχ
        assert cmp.lhs == pytest.approx(-0.5 * inner_product(s.rho, profile), rel=1e-9)
        assert cmp.lhs == pytest.approx(cmp.rhs, rel=1e-9)
        assert abs(cmp.lhs) > 0

    def test_gauge_change_law_without_a_field(self, grid16, orbit, rng):
        # B = 0 everywhere: the potentials are checked against the Coulomb E alone
        omega = presets.orbit_angular_velocity(orbit)
        profile = presets.band_limited_scalar(grid16, rng)

        def gauge_at(t: float) -> GaugeFunction:
            return GaugeFunction.separable(profile, 0.2 + 0.5 * t, 0.5)

        def state(t: float) -> SystemState:
            return SystemState(presets.rotated_orbit(orbit, omega, t), FieldState.zeros(grid16), t)

        s = state(0.4)
        pot = coulomb_potentials(s.e, s.field.a_perp, s.particles)
        cmp = gauge_delta_L(s, pot, gauge_at, state(0.4 - 1e-3), state(0.4 + 1e-3))
        assert cmp.residual < 1e-4, cmp
        assert abs(cmp.lhs) > 0


def _off_axis_atom(grid):
    """+1 at the origin, −1 at rest off every axis through it."""
    return ParticleSet(
        charges=[1.0, -1.0],
        masses=[presets.NUCLEUS_MASS, presets.ELECTRON_MASS],
        positions=[[0.0, 0.0, 0.0], [0.1, 0.1, 0.0]],
        velocities=np.zeros((2, 3)),
        smearing_width=presets.default_sigma(grid),
    )


def _wave_snapshots(grid, particles, field):
    dt = 0.01 * grid.dx / grid.c
    return SystemState(particles, field), SystemState(particles, vacuum_evolve(field, dt, 1), dt)


class TestMagicIdentity:
    def test_atom_at_rest_in_a_free_wave(self, grid16, three, quad):
        at_rest = three.with_kinematics(three.positions, np.zeros_like(three.velocities))
        field = presets.random_field_state(grid16, np.random.default_rng(21))
        magic = magic_identity_residual(*_wave_snapshots(grid16, at_rest, field), quad)
        assert abs(magic.total) <= 1e-9 * abs(magic.lhs)
        assert magic.rhs == pytest.approx(magic.lhs, rel=1e-3)
        assert abs(magic.lhs) > 0

    def test_plane_wave_across_an_off_axis_electron(self, grid16, quad):
        field = presets.single_mode(grid16, amplitude=0.01)
        magic = magic_identity_residual(*_wave_snapshots(grid16, _off_axis_atom(grid16), field), quad)
        assert magic.rhs == pytest.approx(magic.lhs, rel=1e-3)
        assert abs(magic.lhs) > 0

    def test_right_side_needs_the_poincare_vector_potential(self, grid16, quad, monkeypatch):
        field = presets.single_mode(grid16, amplitude=0.01)
        before, after = _wave_snapshots(grid16, _off_axis_atom(grid16), field)
        monkeypatch.setattr(PoincareGauge, "a",
                            lambda self, x: np.zeros_like(np.atleast_2d(np.asarray(x, float))))
        magic = magic_identity_residual(before, after, quad)
        assert magic.total == 0.0
        assert abs(magic.rhs - magic.lhs) > 0.5 * abs(magic.lhs)

    def test_modified_poincare_lagrangian_matches_pzw(self, grid16, three, quad):
        at_rest = three.with_kinematics(three.positions, np.zeros_like(three.velocities))
        field = presets.random_field_state(grid16, np.random.default_rng(22))
        before, after = _wave_snapshots(grid16, at_rest, field)
        modified = lagrangian_poincare_modified(before, after, quad)
        pzw = lagrangian_pzw(midpoint_state(before, after), quad)
        magic = magic_identity_residual(before, after, quad)
        assert modified.kinetic == pzw.kinetic
        assert modified.field == pytest.approx(pzw.field, rel=1e-12)
        assert abs(modified.total - pzw.total) <= 1e-3 * abs(magic.lhs)


class TestMomenta:
    def test_pzw_momentum_in_uniform_field(self, grid16, orbit, quad):
        s = SystemState(orbit, FieldState.zeros(grid16))
        b0 = np.array([0.0, 0.0, 1.0])
        p = particle_momentum_pzw(s, 1, quad, b=presets.uniform_b(grid16, b0))
        expected = orbit.masses[1] * orbit.velocities[1] + orbit.charges[1] * 0.5 * np.cross(b0, orbit.positions[1])
        assert np.allclose(p, expected, rtol=1e-9, atol=1e-12)

    def test_nucleus_has_no_own_momentum(self, random_state):
        with pytest.raises(ValueError):
            particle_momentum_pzw(random_state, 0)
        with pytest.raises(ValueError):
            particle_momentum_minimal(random_state, 0)

    def test_unknown_sampling(self, random_state):
        with pytest.raises(UnknownVariant):
            particle_momentum_pzw(random_state, 1, sampling="nearest")

    def test_minimal_momentum_without_field_is_kinetic(self, grid16, orbit):
        s = SystemState(orbit, FieldState.zeros(grid16))
        assert np.allclose(particle_momentum_minimal(s, 1), orbit.masses[1] * orbit.velocities[1])

    def test_unknown_field_momentum_variant(self, random_state):
        with pytest.raises(UnknownVariant):
            field_momentum(random_state, "canonical")

    def test_transverse_variants_coincide(self, random_state):
        a = field_momentum(random_state, "minimal_transverse")
        b = field_momentum(random_state, "pzw_transverse")
        assert np.array_equal(a.values, b.values)

    def test_pzw_minus_minimal_is_minus_transverse_polarization(self, random_state, quad):
        perp, long = momentum_variant_difference(random_state, quad)
        scale = polarization_field(random_state.particles, random_state.grid, quad).norm()
        assert perp.norm() <= 1e-10 * scale
        assert long.norm() <= 1e-6 * scale


class TestHamiltonians:
    def test_pzw_forms_agree(self, random_state, quad):
        forms = hamiltonian_pzw(random_state, quad)
        assert forms.legendre == pytest.approx(forms.energy_form, rel=1e-9)
        assert forms.multipolar_form == pytest.approx(forms.energy_form, rel=1e-9)

    def test_minimal_plus_self_energy_is_energy(self, random_state):
        s = random_state
        h = hamiltonian_minimal(s) + self_energy(s.particles, s.grid.eps0)
        assert h == pytest.approx(s.energy_form(), rel=1e-10)

    def test_electrostatic_energy_is_longitudinal_field_energy(self, random_state):
        s = random_state
        assert s.electrostatic_energy() == pytest.approx(0.5 * s.grid.eps0 * s.e_par.norm() ** 2, rel=1e-10)

    def test_supplement_overlap_vanishes(self, random_state):
        cmp = supplement_overlap(random_state)
        assert abs(cmp.lhs) <= 1e-10 * cmp.rhs

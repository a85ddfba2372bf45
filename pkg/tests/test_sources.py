"""Smeared deltas, particle sets, densities and the free-space oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pzw_lattice import presets
from pzw_lattice.errors import ConfigError, NonNeutralSource, OutOfTrustedRegion, SmearingTooNarrow
from pzw_lattice.lattice import Grid, VectorField, inner_product
from pzw_lattice.sources import (
    ParticleSet,
    SmearedDelta,
    charge_density,
    continuity_residual,
    current_density,
    deposit,
    free_space_field,
    free_space_potential,
    self_energy,
    smeared_sample,
)


def _atom(**overrides):
    kwargs = dict(
        charges=[1.0, -1.0],
        masses=[1e4, 100.0],
        positions=[[0, 0, 0], [0.1, 0, 0]],
        velocities=[[0, 0, 0], [0, 0.05, 0]],
        smearing_width=3 / 16,
    )
    kwargs.update(overrides)
    return ParticleSet(**kwargs)


class TestSmearedDelta:
    @given(center=st.tuples(*[st.floats(min_value=-0.5, max_value=0.5)] * 3))
    @settings(max_examples=15, deadline=None)
    def test_lattice_integral_is_one(self, center):
        g = Grid(16, 1.0)
        assert SmearedDelta(3 * g.dx).lattice_integral(g, center) == pytest.approx(1.0, abs=1e-10)

    def test_peak(self):
        d = SmearedDelta(0.2)
        assert d.peak(2.0) == pytest.approx(2.0 / ((2 * math.pi) ** 1.5 * 0.2**3))

    def test_too_narrow_for_grid(self, grid16):
        with pytest.raises(SmearingTooNarrow):
            SmearedDelta(2.5 * grid16.dx).check_on(grid16)
        SmearedDelta(3 * grid16.dx).check_on(grid16)

    def test_non_positive_width(self):
        with pytest.raises(SmearingTooNarrow):
            SmearedDelta(0.0)


class TestParticleSet:
    def test_rejects_charged_atom(self):
        with pytest.raises(NonNeutralSource):
            _atom(charges=[1.0, -0.5])

    def test_rejects_non_positive_mass(self):
        with pytest.raises(ConfigError):
            _atom(masses=[1e4, 0.0])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ConfigError):
            _atom(positions=[[0, 0, 0]])

    def test_rejects_moving_nucleus(self):
        with pytest.raises(ConfigError):
            _atom(velocities=[[0.1, 0, 0], [0, 0.05, 0]])

    def test_free_nucleus_may_move(self):
        p = _atom(positions=[[0.02, 0, 0], [0.1, 0, 0]], immobile_nucleus=False, center=[0.05, 0, 0])
        assert p.mobile.tolist() == [0, 1]
        assert np.allclose(p.reference_point, [0.05, 0, 0])

    def test_arrays_are_read_only(self):
        p = _atom()
        with pytest.raises(ValueError):
            p.positions[1, 0] = 0.2

    def test_derived_quantities(self):
        p = _atom()
        assert p.z == 1
        assert p.mobile.tolist() == [1]
        assert p.kinetic_energy() == pytest.approx(0.5 * 100 * 0.05**2)
        assert np.allclose(p.dipole_moment(), [-0.1, 0, 0])

    def test_outside_trusted_ball(self, grid16):
        with pytest.raises(OutOfTrustedRegion):
            _atom(positions=[[0, 0, 0], [0.3, 0, 0]]).check_on(grid16)


class TestDensities:
    def test_neutral_charge_density_integrates_to_zero(self, grid16, three):
        rho = charge_density(three, grid16)
        assert abs(rho.values.sum() * grid16.cell_volume) < 1e-12

    def test_current_integrates_to_total_current(self, grid16, three):
        j = current_density(three, grid16)
        expected = three.charges @ three.velocities
        assert np.allclose(j.integral(), expected, atol=1e-10)

    def test_sample_is_adjoint_of_deposit(self, grid16, rng):
        v = presets.band_limited_vector(grid16, rng)
        centers = rng.uniform(-0.3, 0.3, size=(5, 3))
        weights = rng.normal(size=(5, 3))
        sigma = 3 * grid16.dx
        lhs = inner_product(deposit(grid16, sigma, centers, weights), v)
        rhs = float(np.sum(weights * smeared_sample(v, centers, sigma)))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)

    def test_sample_of_constant_field(self, grid16):
        v = VectorField(grid16, np.broadcast_to(np.array([1.0, -2.0, 0.5])[:, None, None, None],
                                                (3, *grid16.shape)).copy())
        got = smeared_sample(v, [0.07, -0.11, 0.2], 3 * grid16.dx)
        assert np.allclose(got, [1.0, -2.0, 0.5], atol=1e-10)

    def test_continuity_residual_is_second_order(self, grid16, orbit):
        omega = presets.orbit_angular_velocity(orbit)
        residuals = []
        for dt in (0.02 / omega, 0.01 / omega):
            after = presets.rotated_orbit(orbit, omega, dt)
            residuals.append(continuity_residual(grid16, orbit, after, dt))
        assert residuals[0] < 1e-3
        assert 3.5 < residuals[0] / residuals[1] < 4.5


class TestFreeSpace:
    def test_self_energy_scales_inversely_with_width(self):
        narrow, wide = _atom(smearing_width=0.2), _atom(smearing_width=0.4)
        assert self_energy(narrow, 1.0) == pytest.approx(2 * self_energy(wide, 1.0))
        assert self_energy(narrow, 1.0) == pytest.approx(2 / (8 * math.pi**1.5 * 0.2))

    def test_potential_is_finite_at_a_charge(self):
        p = _atom()
        phi = free_space_potential(p, [0.1, 0, 0], 1.0)
        assert np.isfinite(phi)

    def test_far_field_is_coulomb(self):
        p = _atom(smearing_width=0.01)
        x = np.array([0.0, 0.0, 5.0])
        r_plus, r_minus = np.linalg.norm(x), np.linalg.norm(x - [0.1, 0, 0])
        expected = (1 / r_plus - 1 / r_minus) / (4 * math.pi)
        assert free_space_potential(p, x, 1.0) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("box_volume", [None, 1.0])
    def test_field_is_minus_gradient_of_potential(self, box_volume):
        p = _atom()
        x = np.array([[0.05, 0.08, -0.02], [0.2, -0.1, 0.07]])
        h = 1e-5
        grad = np.zeros_like(x)
        for axis in range(3):
            step = np.zeros(3)
            step[axis] = h
            grad[:, axis] = (free_space_potential(p, x + step, 1.0, box_volume)
                             - free_space_potential(p, x - step, 1.0, box_volume)) / (2 * h)
        assert np.allclose(free_space_field(p, x, 1.0, box_volume), -grad, rtol=1e-6, atol=1e-8)

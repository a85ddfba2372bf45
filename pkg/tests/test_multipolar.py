"""Polarization and magnetization fields and the source identities they satisfy."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pzw_lattice import presets
from pzw_lattice.errors import QuadratureTooCoarse
from pzw_lattice.lattice import Grid, helmholtz_split
from pzw_lattice.multipolar import (
    SQuadrature,
    displacement_field,
    magnetization_field,
    polarization_field,
    polarization_rate_fd,
    polarization_time_derivative,
    segment_nodes,
    verify_charge_identity,
    verify_current_identity,
    verify_displacement_transverse,
    verify_longitudinal_consistency,
)
from pzw_lattice.sources import ParticleSet


class TestQuadrature:
    @pytest.mark.parametrize("order", [1, 4, 24])
    def test_exact_for_polynomials(self, order):
        q = SQuadrature.gauss_legendre(order)
        assert q.weights.sum() == pytest.approx(1.0)
        assert np.all((q.nodes > 0) & (q.nodes < 1))
        degree = 2 * order - 1
        assert q.integrate(q.nodes**degree) == pytest.approx(1 / (degree + 1))

    def test_refined_doubles_order(self):
        assert SQuadrature.gauss_legendre(12).refined().order == 24

    def test_rejects_zero_order(self):
        with pytest.raises(ValueError):
            SQuadrature.gauss_legendre(0)

    def test_segment_nodes_lie_on_segments(self, dipole):
        q = SQuadrature.gauss_legendre(5)
        nodes = segment_nodes(dipole, q)
        assert nodes.shape == (5, 1, 3)
        assert np.allclose(nodes[:, 0, 0], 0.1 * q.nodes)
        assert np.allclose(nodes[:, 0, 1:], 0.0)


class TestFields:
    def test_total_polarization_is_dipole_moment(self, grid16, three, quad):
        pol = polarization_field(three, grid16, quad)
        assert np.allclose(pol.integral(), three.dipole_moment(), atol=1e-10)

    def test_atom_at_rest_has_no_magnetization(self, grid16, dipole, quad):
        assert magnetization_field(dipole, grid16, quad).norm() == 0.0

    def test_coarse_quadrature_is_reported(self, grid16, dipole):
        with pytest.raises(QuadratureTooCoarse):
            polarization_field(dipole, grid16, SQuadrature.gauss_legendre(1), check_convergence=True)

    def test_converged_quadrature_passes(self, grid16, dipole, quad):
        polarization_field(dipole, grid16, quad, check_convergence=True)
        magnetization_field(presets.three_particle(grid16), grid16, quad, check_convergence=True)

    def test_time_derivative_matches_centered_difference(self, grid16, orbit, quad):
        omega = presets.orbit_angular_velocity(orbit)
        dt = 1e-3 / omega
        fd = polarization_rate_fd(presets.rotated_orbit(orbit, omega, -dt), presets.rotated_orbit(orbit, omega, dt),
                                  grid16, dt, quad)
        analytic = polarization_time_derivative(orbit, grid16, quad)
        assert (fd - analytic).norm() <= 1e-4 * analytic.norm()

    def test_displacement_without_radiation_is_transverse(self, grid16, three, quad):
        d = displacement_field(three, grid16, quad=quad)
        _, d_long = helmholtz_split(d)
        assert d_long.norm() <= 1e-6 * polarization_field(three, grid16, quad).norm()


class TestIdentities:
    @pytest.mark.parametrize("preset", ["hydrogen_like", "three_particle", "circular_orbit"])
    def test_charge_identity(self, grid16, quad, preset):
        p = getattr(presets, preset)(grid16)
        rec = verify_charge_identity(p, grid16, quad, detail=preset)
        assert rec.passed, rec
        assert rec.tag == "charge-from-polarization"

    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=5, deadline=None)
    def test_identities_for_random_atoms(self, seed):
        g = Grid(16, 1.0)
        q = SQuadrature.gauss_legendre(24)
        p = presets.random_atom(g, np.random.default_rng(seed))
        assert verify_charge_identity(p, g, q).passed
        assert verify_current_identity(p, g, q).passed
        assert verify_longitudinal_consistency(p, g, q).passed

    def test_current_identity_for_moving_atoms(self, grid16, quad, three, orbit):
        for p in (three, orbit):
            assert verify_current_identity(p, grid16, quad).passed

    def test_free_charge_centre(self, grid16, quad):
        p = ParticleSet(
            charges=[1.0, -1.0],
            masses=[1e4, 100.0],
            positions=[[0.03, 0.0, 0.0], [-0.07, 0.02, 0.0]],
            velocities=[[0.0, 0.01, 0.0], [0.0, -0.05, 0.02]],
            smearing_width=3 * grid16.dx,
            immobile_nucleus=False,
            center=[0.01, 0.0, 0.0],
        )
        assert verify_charge_identity(p, grid16, quad).passed
        assert verify_current_identity(p, grid16, quad).passed

    def test_displacement_with_radiation(self, grid16, quad, three, rng):
        e_perp = presets.random_field_state(grid16, rng).e_perp
        assert verify_displacement_transverse(three, grid16, e_perp, quad).passed

    def test_record_fails_under_zero_tolerance(self, grid16, quad, three):
        rec = verify_longitudinal_consistency(three, grid16, quad, tol=0.0)
        assert rec.status == "FAIL"
        assert rec.residual > 0

"""Grid, spectral operators, Helmholtz split, Poisson solve and the transverse delta."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pzw_lattice import presets
from pzw_lattice.errors import GridError, GridMismatch, NonFiniteField, NonNeutralSource
from pzw_lattice.lattice import (
    Grid,
    ScalarField,
    VectorField,
    apply_transverse_kernel,
    curl,
    divergence,
    gradient,
    helmholtz_split,
    inner_product,
    is_longitudinal,
    is_transverse,
    poisson_solve,
    sample_at,
    transverse_delta,
    transverse_part,
    transverse_projector_kernel,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestGrid:
    @pytest.mark.parametrize("n", [7, 6, 0, 15])
    def test_rejects_odd_or_small_n(self, n):
        with pytest.raises(GridError):
            Grid(n, 1.0)

    @pytest.mark.parametrize("length", [0.0, -1.0])
    def test_rejects_non_positive_box(self, length):
        with pytest.raises(GridError):
            Grid(16, length)

    def test_rejects_non_positive_constants(self):
        with pytest.raises(GridError):
            Grid(16, 1.0, eps0=-1.0)

    def test_geometry(self, grid16):
        assert grid16.dx == pytest.approx(1 / 16)
        assert grid16.c == pytest.approx(1.0)
        assert grid16.trusted_radius == pytest.approx(0.25)
        assert grid16.probe_radius == pytest.approx(0.125)
        assert grid16.axis[0] == pytest.approx(-0.5)
        assert grid16.axis[8] == pytest.approx(0.0)
        assert grid16.coords.shape == (3, 16, 16, 16)

    def test_si_constants_give_light_speed(self):
        g = Grid.si(8, 1.0)
        assert g.c == pytest.approx(299_792_458.0, rel=1e-8)

    def test_wrap_maps_into_half_open_box(self, grid16):
        assert grid16.wrap(np.array(0.5)) == pytest.approx(-0.5)
        assert grid16.wrap(np.array(0.75)) == pytest.approx(-0.25)
        assert grid16.wrap(np.array(-0.1)) == pytest.approx(-0.1)

    def test_nyquist_wavenumber_is_zeroed(self, grid16):
        k = grid16.wavevectors
        assert k[0, 8, 0, 0] == 0.0
        assert k[2, 0, 0, -1] == 0.0


class TestFields:
    def test_wrong_shape(self, grid8):
        with pytest.raises(GridError):
            VectorField(grid8, np.zeros((8, 8, 8)))

    def test_non_finite(self, grid8):
        values = np.zeros((8, 8, 8))
        values[1, 2, 3] = np.nan
        with pytest.raises(NonFiniteField):
            ScalarField(grid8, values)

    def test_grid_mismatch(self, grid8):
        with pytest.raises(GridMismatch):
            ScalarField.zeros(grid8) + ScalarField.zeros(Grid(8, 2.0))

    def test_mixed_ranks(self, grid8):
        with pytest.raises(TypeError):
            ScalarField.zeros(grid8) + VectorField.zeros(grid8)
        with pytest.raises(TypeError):
            inner_product(ScalarField.zeros(grid8), VectorField.zeros(grid8))

    def test_arithmetic(self, grid8):
        f = ScalarField.from_function(grid8, lambda x, y, z: x + 2 * y)
        g = 2.0 * f - f / 2 + 1.0
        assert np.allclose(g.values, 1.5 * f.values + 1.0)
        assert np.allclose((-f).values, -f.values)

    def test_norm_uses_lattice_measure(self, grid8):
        ones = ScalarField(grid8, np.ones(grid8.shape))
        assert ones.norm() == pytest.approx(1.0)


class TestOperators:
    def test_gradient_of_single_mode_is_exact(self, grid16):
        k = 2 * np.pi
        f = ScalarField.from_function(grid16, lambda x, y, z: np.sin(k * x) * np.cos(2 * k * z))
        grad = gradient(f)
        x, _, z = grid16.coords
        assert np.allclose(grad.values[0], k * np.cos(k * x) * np.cos(2 * k * z), atol=1e-10)
        assert np.allclose(grad.values[1], 0.0, atol=1e-10)
        assert np.allclose(grad.values[2], -2 * k * np.sin(k * x) * np.sin(2 * k * z), atol=1e-10)

    def test_curl_of_gradient_vanishes(self, grid16, rng):
        f = presets.band_limited_scalar(grid16, rng)
        assert curl(gradient(f)).norm() < 1e-10 * gradient(f).norm()

    def test_divergence_of_curl_vanishes(self, grid16, rng):
        v = presets.band_limited_vector(grid16, rng)
        assert divergence(curl(v)).norm() < 1e-10 * curl(v).norm()

    @given(seed=seeds)
    @settings(max_examples=10, deadline=None)
    def test_helmholtz_split(self, seed):
        g = Grid(16, 1.0)
        v = presets.band_limited_vector(g, np.random.default_rng(seed), kmax=4)
        perp, long = helmholtz_split(v)
        assert (perp + long - v).norm() <= 1e-12 * v.norm()
        assert is_transverse(perp)
        assert is_longitudinal(long)
        assert abs(inner_product(perp, long)) <= 1e-10 * v.norm() ** 2

    def test_transverse_part_is_idempotent(self, grid16, rng):
        v = presets.band_limited_vector(grid16, rng)
        once = transverse_part(v)
        assert (transverse_part(once) - once).norm() <= 1e-12 * once.norm()

    def test_mean_mode_goes_to_transverse_part(self, grid8):
        v = VectorField(grid8, np.ones((3, *grid8.shape)))
        perp, long = helmholtz_split(v)
        assert np.allclose(perp.values, 1.0)
        assert long.norm() < 1e-12


class TestPoisson:
    def test_inverts_laplacian(self, grid16, rng):
        rho = presets.band_limited_scalar(grid16, rng)
        rho = rho - float(rho.values.mean())
        phi = poisson_solve(rho, eps0=2.0)
        lap = divergence(gradient(phi))
        assert (lap + rho / 2.0).norm() <= 1e-10 * rho.norm()
        assert abs(phi.values.mean()) < 1e-12

    def test_rejects_non_neutral_density(self, grid16, rng):
        rho = presets.band_limited_scalar(grid16, rng)
        rho = rho - float(rho.values.mean()) + 0.5
        with pytest.raises(NonNeutralSource):
            poisson_solve(rho)


class TestTransverseDelta:
    @pytest.mark.parametrize("n", [8, 16])
    def test_trace_at_zero_separation(self, n):
        g = Grid(n, 1.0)
        trace = np.trace(transverse_delta(g), axis1=0, axis2=1)
        assert trace[0, 0, 0] * g.cell_volume == pytest.approx(2 + 8 / n**3, abs=1e-12)
        assert trace.sum() * g.cell_volume == pytest.approx(3.0, abs=1e-10)

    def test_kernel_is_symmetric(self, grid8):
        k = transverse_projector_kernel(grid8, [grid8.dx, 2 * grid8.dx, 0.0])
        assert np.allclose(k, k.T, atol=1e-12)
        assert np.allclose(transverse_projector_kernel(grid8, [0, 0, 0]), transverse_delta(grid8)[:, :, 0, 0, 0])

    def test_rejects_off_lattice_displacement(self, grid8):
        with pytest.raises(GridError):
            transverse_projector_kernel(grid8, [0.3 * grid8.dx, 0, 0])

    def test_real_space_convolution_matches_spectral_projection(self, grid8, rng):
        v = presets.band_limited_vector(grid8, rng, kmax=2)
        direct = apply_transverse_kernel(v)
        assert (direct - transverse_part(v)).norm() <= 1e-10 * v.norm()


class TestSampling:
    def test_exact_at_sites(self, grid16, rng):
        v = presets.band_limited_vector(grid16, rng)
        idx = np.array([[0, 0, 0], [3, 8, 15], [8, 8, 8]])
        pts = (idx - 8) * grid16.dx
        got = sample_at(v, pts, order=1)
        want = np.stack([v.values[:, i, j, k] for i, j, k in idx])
        assert np.allclose(got, want, atol=1e-12)

    def test_periodic(self, grid16, rng):
        f = presets.band_limited_scalar(grid16, rng)
        x = np.array([0.137, -0.21, 0.33])
        assert sample_at(f, x) == pytest.approx(sample_at(f, x + np.array([1.0, -1.0, 0.0])), abs=1e-12)

    def test_trilinear_error_is_second_order(self):
        errors = []
        for n in (16, 32):
            g = Grid(n, 1.0)
            f = ScalarField.from_function(g, lambda x, y, z: np.sin(2 * np.pi * x))
            x = np.zeros((2001, 3))
            x[:, 0] = np.linspace(-0.5, 0.5, 2001)
            errors.append(np.max(np.abs(sample_at(f, x, order=1) - np.sin(2 * np.pi * x[:, 0]))))
        assert 3.5 < errors[0] / errors[1] < 4.5

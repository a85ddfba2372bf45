"""Shared fixtures: small grids, a quadrature rule and the reference atoms."""

from __future__ import annotations

import numpy as np
import pytest

from pzw_lattice import presets
from pzw_lattice.lattice import Grid
from pzw_lattice.mechanics import SystemState
from pzw_lattice.multipolar import SQuadrature


@pytest.fixture(scope="session")
def grid8() -> Grid:
    return Grid(8, 1.0)


@pytest.fixture(scope="session")
def grid16() -> Grid:
    return Grid(16, 1.0)


@pytest.fixture(scope="session")
def quad() -> SQuadrature:
    return SQuadrature.gauss_legendre(24)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def dipole(grid16):
    return presets.hydrogen_like(grid16)


@pytest.fixture(scope="session")
def three(grid16):
    return presets.three_particle(grid16)


@pytest.fixture(scope="session")
def orbit(grid16):
    return presets.circular_orbit(grid16)


@pytest.fixture(scope="session")
def random_state(grid16) -> SystemState:
    r = np.random.default_rng(99)
    return SystemState(presets.random_atom(grid16, r), presets.random_field_state(grid16, r))

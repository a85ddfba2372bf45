"""Snapshots, particle configuration files and probe-point tables."""

import json

import numpy as np
import pytest

from pzw_lattice import presets
from pzw_lattice.config import REPO_ROOT
from pzw_lattice.errors import ConfigError
from pzw_lattice.io import (
    ParticleConfig,
    load_fields,
    load_particle_config,
    load_points,
    load_snapshot,
    save_snapshot,
    write_points,
)
from pzw_lattice.mechanics import SystemState


class TestSnapshots:
    def test_save_and_load(self, tmp_path, random_state):
        path = save_snapshot(tmp_path / "snap" / "s.npz", random_state)
        loaded = load_snapshot(path)
        assert loaded.grid == random_state.grid
        assert loaded.time == random_state.time
        assert np.array_equal(loaded.particles.positions, random_state.particles.positions)
        assert loaded.particles.smearing_width == random_state.particles.smearing_width
        assert np.array_equal(loaded.field.a_perp.values, random_state.field.a_perp.values)

    def test_stored_fields_override_state_fields(self, tmp_path, grid16, dipole):
        state = SystemState(dipole, presets.single_mode(grid16, amplitude=0.01))
        b = presets.uniform_b(grid16)
        path = save_snapshot(tmp_path / "b.npz", state, b=b)
        e_loaded, b_loaded, _ = load_fields(path)
        assert np.array_equal(b_loaded.values, b.values)
        assert np.allclose(e_loaded.values, state.e.values)

    def test_missing_snapshot(self, tmp_path):
        with pytest.raises(ConfigError):
            load_snapshot(tmp_path / "nope.npz")

    def test_unreadable_snapshot(self, tmp_path):
        path = tmp_path / "junk.npz"
        path.write_text("not an archive")
        with pytest.raises(ConfigError):
            load_snapshot(path)


class TestParticleConfig:
    def test_shipped_lithium_file(self, grid16):
        cfg = load_particle_config(REPO_ROOT / "scenarios" / "lithium_like.particles.json")
        p = cfg.to_particle_set(grid16)
        assert p.n_particles == 4
        assert p.charges.sum() == pytest.approx(0.0)
        assert p.smearing_width == pytest.approx(cfg.smearing_cells * grid16.dx)

    def test_rejects_charged_atom(self, tmp_path):
        path = tmp_path / "ion.json"
        path.write_text(json.dumps({"particles": [
            {"charge": 2, "mass": 1e4, "position": [0, 0, 0]},
            {"charge": -1, "mass": 100, "position": [0.1, 0, 0]},
        ]}))
        with pytest.raises(ConfigError):
            load_particle_config(path)

    def test_rejects_narrow_smearing(self):
        with pytest.raises(ValueError):
            ParticleConfig.model_validate({"smearing_cells": 2.0, "particles": [
                {"charge": 1, "mass": 1, "position": [0, 0, 0]},
                {"charge": -1, "mass": 1, "position": [0.1, 0, 0]},
            ]})

    def test_displaced_nucleus_becomes_config_error(self, grid16):
        cfg = ParticleConfig.model_validate({"particles": [
            {"charge": 1, "mass": 1e4, "position": [0.01, 0, 0]},
            {"charge": -1, "mass": 100, "position": [0.1, 0, 0]},
        ]})
        with pytest.raises(ConfigError):
            cfg.to_particle_set(grid16)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_particle_config(tmp_path / "absent.json")


class TestPoints:
    def test_write_and_load(self, tmp_path):
        pts = np.array([[0.0, 0.1, 0.2], [0.3, -0.1, 0.0]])
        assert np.allclose(load_points(write_points(tmp_path / "p.csv", pts)), pts)

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,y\n0,1\n")
        with pytest.raises(ConfigError):
            load_points(path)

    def test_shipped_points(self):
        pts = load_points(REPO_ROOT / "scenarios" / "probe_points.csv")
        assert pts.shape == (6, 3)

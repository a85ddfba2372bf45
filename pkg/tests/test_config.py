"""Environment-driven defaults."""

import pytest

from pzw_lattice.config import ToleranceCfg, load_config


def test_defaults(monkeypatch):
    for name in ("PZW_GRID_N", "PZW_QUAD_ORDER", "PZW_TOL_IDENTITY", "PZW_OUT_DIR"):
        monkeypatch.delenv(name, raising=False)
    cfg = load_config()
    assert cfg.numerics.grid_n == 64
    assert cfg.numerics.quad_order == 32
    assert cfg.tolerances.identity == 1e-6
    assert str(cfg.output.out_dir) == "reports"


@pytest.mark.parametrize("raw", ["abc", "7", "4", "100000"])
def test_bad_grid_size_falls_back(monkeypatch, raw):
    monkeypatch.setenv("PZW_GRID_N", raw)
    assert load_config().numerics.grid_n == 64


def test_overrides(monkeypatch):
    monkeypatch.setenv("PZW_GRID_N", "32")
    monkeypatch.setenv("PZW_SIGMA_CELLS", "1.5")
    monkeypatch.setenv("PZW_TOL_MAGIC", "1e-3")
    monkeypatch.setenv("PZW_TOL_RATIO", "-1")
    cfg = load_config()
    assert cfg.numerics.grid_n == 32
    assert cfg.numerics.sigma_cells == 3.0
    assert cfg.tolerances.magic == 1e-3
    assert cfg.tolerances.ratio == ToleranceCfg().ratio


def test_scaled_tolerances():
    tol = ToleranceCfg().scaled(10.0)
    assert tol.identity == pytest.approx(1e-5)
    assert tol.exact == pytest.approx(1e-9)

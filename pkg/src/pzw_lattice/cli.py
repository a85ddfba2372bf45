"""CLI: verification suite, trajectories, Poincaré tables and report re-rendering."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from pzw_lattice.config import CONFIG
from pzw_lattice.errors import CheckFailure, PzwError, StabilityViolation
from pzw_lattice.logging_setup import log

EXIT_FAIL = 1
EXIT_CONFIG = 2


def _abort(e: Exception, code: int = EXIT_CONFIG) -> None:
    log.error("command_failed", error=str(e), kind=type(e).__name__, exit_code=code)
    click.echo(f"error: {e}", err=True)
    sys.exit(code)


def _scenario(path: Path | None, grid: int | None, sigma: float | None, seed: int | None):
    from pzw_lattice.suite import Scenario, load_scenario, with_overrides

    scenario = load_scenario(path) if path is not None else Scenario()
    return with_overrides(scenario, grid=grid, sigma=sigma, seed=seed)


_scenario_opt = click.option("--scenario", "scenario_path", type=click.Path(path_type=Path), default=None,
                             help="Scenario JSON (defaults built in when omitted)")
_out_opt = click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
                        default=None, help="Output directory")
_seed_opt = click.option("--seed", type=click.IntRange(min=0), default=None, help="Seed for randomized inputs")
_grid_opt = click.option("--grid", type=int, default=None, help="Lattice points per axis")
_sigma_opt = click.option("--sigma", type=float, default=None, help="Smearing width in lattice spacings")


@click.group()
def main():
    """pzw-lattice CLI."""
    pass


@main.command()
@_scenario_opt
@_out_opt
@_seed_opt
@click.option("--tol-scale", type=click.FloatRange(min=0), default=1.0,
              help="Uniform tolerance multiplier for refinement studies")
@_grid_opt
@_sigma_opt
@click.option("--workers", type=click.IntRange(min=1), default=1,
              help="Threads running checks concurrently; only FFT and numpy kernels release the GIL")
def verify(scenario_path: Path | None, out_dir: Path | None, seed: int | None, tol_scale: float,
           grid: int | None, sigma: float | None, workers: int) -> None:
    """Run the identity suite; exit 0 iff every record passes."""
    from pzw_lattice.report import write_records
    from pzw_lattice.suite import SuiteContext, run_suite

    try:
        scenario = _scenario(scenario_path, grid, sigma, seed)
    except PzwError as e:
        _abort(e)
    records = run_suite(SuiteContext(scenario, tol_scale), workers=workers)
    jsonl, csv = write_records(records, out_dir or CONFIG.output.out_dir, scenario.name)
    failed = [r.name for r in records if not r.passed]
    click.echo(json.dumps({
        "scenario": scenario.name,
        "records": len(records),
        "failed": failed,
        "jsonl": str(jsonl),
        "csv": str(csv),
    }, indent=2))
    if failed:
        _abort(CheckFailure(f"{len(failed)} of {len(records)} records failed"), EXIT_FAIL)


@main.command()
@_scenario_opt
@_out_opt
@_seed_opt
@_grid_opt
@_sigma_opt
@click.option("--n-steps", type=click.IntRange(min=0), default=None, help="Overrides the scenario step count")
@click.option("--dt", "dt_cells", type=float, default=None, help="Time step in units of dx/c")
@click.option("--save-snapshots", is_flag=True, default=False, help="Write every retained state as .npz")
def simulate(scenario_path: Path | None, out_dir: Path | None, seed: int | None, grid: int | None,
             sigma: float | None, n_steps: int | None, dt_cells: float | None, save_snapshots: bool) -> None:
    """Evolve the scenario atom and write its energy series and final snapshot."""
    from pzw_lattice import presets
    from pzw_lattice.dynamics import TrajectoryConfig, energy_drift, run_energy
    from pzw_lattice.io import save_snapshot
    from pzw_lattice.mechanics import FieldState, SystemState
    from pzw_lattice.suite import SuiteContext

    try:
        scenario = _scenario(scenario_path, grid, sigma, seed)
        ctx = SuiteContext(scenario)
        d = scenario.dynamics
        dt = (d.dt_cells if dt_cells is None else dt_cells) * ctx.grid.dx / ctx.grid.c
        cfg = TrajectoryConfig(dt, d.n_steps if n_steps is None else n_steps, d.output_stride)
        cfg.check_stability(ctx.grid)
        field = (presets.random_field_state(ctx.grid, ctx.rng("initial_field"))
                 if d.initial_field == "random" else FieldState.zeros(ctx.grid))
        s0 = SystemState(ctx.atom, field)
    except (PzwError, ValueError) as e:
        _abort(e)

    out = (out_dir or CONFIG.output.out_dir) / scenario.name
    snap_dir = out / "snapshots"

    def keep(n: int, s: SystemState) -> None:
        if save_snapshots:
            save_snapshot(snap_dir / f"step_{n:06d}.npz", s)

    try:
        final, series = run_energy(s0, cfg, on_snapshot=keep)
    except StabilityViolation as e:
        _abort(e)
    out.mkdir(parents=True, exist_ok=True)
    energy_csv = out / "energy.csv"
    series.to_csv(energy_csv, index=False)
    final_npz = save_snapshot(out / "final.npz", final)
    click.echo(json.dumps({
        "scenario": scenario.name,
        "steps": cfg.n_steps,
        "dt": cfg.dt,
        "energy_drift": energy_drift(series),
        "energy_csv": str(energy_csv),
        "final_snapshot": str(final_npz),
    }, indent=2))


@main.command()
@click.option("--snapshot", "snapshot_path", type=click.Path(path_type=Path), required=True)
@click.option("--points", "points_path", type=click.Path(path_type=Path), required=True,
              help="CSV with columns x, y, z")
@click.option("--phi0", type=float, default=0.0, help="Potential at the charge centre")
@click.option("--quad-order", type=click.IntRange(min=1), default=None)
@click.option("--probe", type=click.Choice(["lattice", "smeared"]), default="lattice")
@click.option("--out", "out_csv", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Table path (stdout when omitted)")
def poincare(snapshot_path: Path, points_path: Path, phi0: float, quad_order: int | None, probe: str,
             out_csv: Path | None) -> None:
    """Tabulate Φ_P, A_P and x·A_P of a snapshot at the given points."""
    from pzw_lattice.gauges import PoincareGauge, poincare_table
    from pzw_lattice.io import load_fields, load_points
    from pzw_lattice.multipolar import SQuadrature

    try:
        e, b, state = load_fields(snapshot_path)
        pts = load_points(points_path)
    except PzwError as e:
        _abort(e)
    quad = SQuadrature.gauss_legendre(quad_order) if quad_order else SQuadrature.default()
    p = state.particles
    gauge = PoincareGauge.from_fields(e, b, phi0, quad, probe=probe, sigma=p.smearing_width,
                                      origin=p.reference_point)
    table = poincare_table(gauge, pts)
    if out_csv is None:
        click.echo(table.to_csv(index=False), nl=False)
    else:
        out_csv.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out_csv, index=False)
        click.echo(json.dumps({"points": len(table), "flagged": int((~table["trusted"]).sum()),
                               "csv": str(out_csv)}, indent=2))


@main.command()
@click.argument("jsonl", type=click.Path(path_type=Path))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
def report(jsonl: Path, csv_path: Path | None) -> None:
    """Re-render saved records to CSV."""
    from pydantic import ValidationError

    from pzw_lattice.report import read_records, render_csv

    try:
        records = read_records(jsonl)
        csv = render_csv(jsonl, csv_path)
    except (OSError, ValueError, ValidationError) as e:
        _abort(e)
    click.echo(json.dumps({
        "records": len(records),
        "failed": [r.name for r in records if not r.passed],
        "csv": str(csv),
    }, indent=2))


if __name__ == "__main__":
    main()

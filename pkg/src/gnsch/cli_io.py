"""On-disk formats (snapshot / diagnostics / convergence CSVs), bundled
configurations, and the command-line entry point.

All files are comma-separated text with a single header row and full
double precision (17 significant digits), so reading a file back
reproduces the arrays bit-exactly.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from importlib import resources

import numpy as np

from . import driver
from .config import parse_config, parse_config_text, serialize_config  # noqa: F401
from .driver import DiagRecord
from .errors import GnschError

_FMT = "%.17g"


def _fmt(value):
    return _FMT % value


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def bundled_config_path(name):
    """Path of a configuration shipped with the package (name without .cfg)."""
    ref = resources.files("gnsch").joinpath("configs", f"{name}.cfg")
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled config named {name!r}")
    return str(ref)


def bundled_config_names():
    ref = resources.files("gnsch").joinpath("configs")
    return sorted(p.name[:-4] for p in ref.iterdir() if p.name.endswith(".cfg"))


def write_snapshot(snap, path):
    """One row per cell in lexicographic cell order.

    Columns: x[,y], rho, c, vx[,vy], p, mu.
    """
    grid = snap.grid
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as fh:
        if grid.dim == 1:
            fh.write("x,rho,c,vx,p,mu\n")
            x = grid.x_centers()
            for j in range(grid.nx):
                fh.write(",".join(_fmt(v) for v in
                                  (x[j], snap.rho[j], snap.c[j], snap.vel[0][j],
                                   snap.p[j], snap.mu[j])) + "\n")
        else:
            fh.write("x,y,rho,c,vx,vy,p,mu\n")
            x = grid.x_centers()
            y = grid.y_centers()
            for ix in range(grid.nx):
                for iy in range(grid.ny):
                    fh.write(",".join(_fmt(v) for v in
                                      (x[ix], y[iy], snap.rho[ix, iy], snap.c[ix, iy],
                                       snap.vel[0][ix, iy], snap.vel[1][ix, iy],
                                       snap.p[ix, iy], snap.mu[ix, iy])) + "\n")


def read_csv_columns(path):
    """Read any of the CSV formats back as {column name: float array}."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        raw = np.loadtxt(fh, delimiter=",", ndmin=2)
    if raw.size == 0:
        return {name: np.empty(0) for name in header}
    return {name: raw[:, i] for i, name in enumerate(header)}


def write_diagnostics(series, path):
    """One row per diagnostic record, columns = DiagRecord fields."""
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(DiagRecord.FIELDS) + "\n")
        for rec in series:
            fh.write(",".join(_fmt(getattr(rec, name)) for name in DiagRecord.FIELDS) + "\n")


def write_convergence(result, path):
    """(resolution, error, order) rows; order is the fitted slope."""
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("resolution,error,order\n")
        for res, err, order in result.rows():
            fh.write(f"{_fmt(res)},{_fmt(err)},{_fmt(order)}\n")


def _apply_flags(cfg, args):
    if getattr(args, "output", None):
        cfg = replace(cfg, output=replace(cfg.output, dir=args.output))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, init=replace(cfg.init, seed=args.seed))
    return cfg


def _cmd_run(args):
    cfg = _apply_flags(parse_config(args.config), args)
    result = driver.run(cfg, quiet=args.quiet)
    out = cfg.output.dir
    os.makedirs(out, exist_ok=True)
    for i, snap in enumerate(result.snapshots):
        write_snapshot(snap, os.path.join(out, f"snapshot_{i:04d}.csv"))
    write_diagnostics(result.diagnostics, os.path.join(out, "diagnostics.csv"))
    last = result.diagnostics[-1] if result.diagnostics else None
    if not args.quiet and last is not None:
        print(f"wrote {len(result.snapshots)} snapshots and "
              f"{len(result.diagnostics)} diagnostic rows to {out}")
        print(f"final: t={last.t:.6g} mass={last.total_mass:.12g} "
              f"xi={last.xi:.6f} c in [{last.c_min:.4f}, {last.c_max:.4f}]")
    return 0


def _print_convergence(result, quiet):
    if quiet:
        return
    print(f"{'resolution':>14} {'error':>14} ")
    for res, err, _ in result.rows():
        print(f"{res:14.6e} {err:14.6e}")
    for name in ("rho", "c", "v", "total"):
        print(f"fitted order [{name}]: {result.orders[name]:.4f}")


def _cmd_converge(args, kind):
    cfg = _apply_flags(parse_config(args.config), args)
    result = driver.convergence_space(cfg) if kind == "space" else driver.convergence_time(cfg)
    out = cfg.output.dir
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"convergence_{kind}.csv")
    write_convergence(result, path)
    _print_convergence(result, args.quiet)
    if not args.quiet:
        print(f"wrote {path}")
    return 0


def _cmd_check(args):
    cfg = _apply_flags(parse_config(args.config), args)
    state0 = driver.init_state(cfg)
    mass0 = state0.total_mass()
    state1, rec = driver.step(state0, cfg, force_dt=cfg.time.dt_init)

    drift = abs(rec.total_mass - mass0) / abs(mass0)
    checks = [
        ("mass drift", drift, drift <= 1e-12),
        ("c bounds", (rec.c_min, rec.c_max), 0.0 < rec.c_min and rec.c_max < 1.0),
        ("xi in (0,2)", rec.xi, 0.0 < rec.xi < 2.0),
    ]
    if cfg.physics.growth_rate == 0.0:
        ok = rec.dissipation <= 1e-10 * abs(rec.energy)
        checks.append(("dissipation <= 0", rec.dissipation, ok))
    failed = [name for name, _, ok in checks if not ok]
    if not args.quiet:
        print(f"single step at dt={cfg.time.dt_init:.3e} "
              f"(solver iterations: {rec.solver_iterations})")
        for name, value, ok in checks:
            print(f"  {'ok  ' if ok else 'FAIL'} {name}: {value}")
    if failed:
        print(f"invariant violation: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gnsch",
        description="Finite-volume simulator for compressible two-phase flow "
                    "with a bound-preserving phase-field step.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("config", help="path to a .cfg run configuration")
        p.add_argument("--output", help="override the output directory")
        p.add_argument("--seed", type=int, help="override the RNG seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    add_common(sub.add_parser("run", help="run a simulation and write snapshots/diagnostics"))
    add_common(sub.add_parser("converge-space", help="grid-refinement study"))
    add_common(sub.add_parser("converge-time", help="time-step refinement study"))
    add_common(sub.add_parser("check", help="single step plus invariant report"))
    return parser


def cli_main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "converge-space":
            return _cmd_converge(args, "space")
        if args.command == "converge-time":
            return _cmd_converge(args, "time")
        if args.command == "check":
            return _cmd_check(args)
    except GnschError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    parser.error(f"unknown command {args.command!r}")
    return 2


def main():
    raise SystemExit(cli_main())

"""Command-line driver: ``pbmib solve|sweep|oracle|export-surface|import-surface``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, GeometryError, PBError
from .grid import AXIS_NAMES, DomainRegistration, build_grid, export_eulerian, register_domain
from .mib import FictitiousBuilder, _chain_of
from .model import RunConfig, load_pqr
from .oracle import KirkwoodConfig, born_energy, kirkwood_case, kirkwood_energy
from .pipeline import SweepSpec, format_sweep, run_pipeline, run_sweep, surface_bounds
from .surface import parse_eulerian, surface_from_config

log = logging.getLogger("pbmib")


# ---------------------------------------------------------------- config merging

def _surface_override(args, current: dict) -> dict | None:
    if args.surface is None and args.radius is None and args.surface_file is None:
        return None
    kind = args.surface or current.get("type")
    spec = {"type": kind}
    if kind == "sphere":
        r = args.radius if args.radius is not None else current.get("radius")
        if r is None:
            raise ConfigError("sphere surface needs --radius")
        spec["radius"] = r
        spec["center"] = tuple(args.center) if args.center else current.get("center", (0.0, 0.0, 0.0))
    elif kind in ("mesh", "eulerian_file"):
        path = args.surface_file or current.get("path")
        if path is None:
            raise ConfigError(f"{kind} surface needs --surface-file")
        spec["path"] = path
    return spec


def build_config(args) -> RunConfig:
    """Defaults, then the JSON config file, then command-line flags."""
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    top = {"grid_spacing": args.h, "padding": args.padding, "eps_solute": args.eps_solute,
           "eps_solvent": args.eps_solvent, "kappa_bar": args.kappa_bar}
    cfg = dataclasses.replace(cfg, **{k: v for k, v in top.items() if v is not None})
    solver = {"tol": args.tol, "max_iter": args.max_iter, "precond": args.precond, "method": args.method}
    cfg.solver = dataclasses.replace(cfg.solver, **{k: v for k, v in solver.items() if v is not None})
    if args.explicit_vacuum:
        cfg.explicit_vacuum = True
    surf = _surface_override(args, cfg.surface)
    if surf is not None:
        cfg.surface = surf
    if not cfg.grid_spacing > 0:
        raise ConfigError("grid spacing must be positive")
    if cfg.solver.max_iter is not None and cfg.solver.max_iter < 1:
        raise ConfigError("--max-iter must be >= 1")
    return cfg


def sphere_oracle(model, cfg: RunConfig) -> float | None:
    """Exact reaction-field energy when the surface is a sphere enclosing every charge."""
    s = cfg.surface
    if s.get("type") != "sphere" or cfg.kappa_bar != 0.0:
        return None
    pos = model.centers - np.asarray(s.get("center", (0.0, 0.0, 0.0)), dtype=float)
    try:
        kc = KirkwoodConfig(float(s["radius"]), tuple(map(tuple, pos)), tuple(model.charges),
                            cfg.eps_solute, cfg.eps_solvent)
    except PBError:
        return None
    return kirkwood_energy(kc, coulomb=model.units.coulomb_constant)


def _parse_key(text: str):
    """``x:i,j,k`` -> (axis, i, j, k)."""
    try:
        axis, rest = text.split(":")
        i, j, k = (int(v) for v in rest.split(","))
        return (AXIS_NAMES.index(axis), i, j, k)
    except ValueError:
        raise ConfigError(f"bad intersection key {text!r}; expected e.g. x:4,5,6") from None


# ---------------------------------------------------------------- subcommands

def cmd_solve(args) -> int:
    model = load_pqr(args.pqr)
    cfg = build_config(args)
    res = run_pipeline(model, cfg)
    report = res.report
    if args.dump_field:
        _dump_field(args.dump_field, res)
    if args.dump_intersection:
        key = _parse_key(args.dump_intersection)
        ix = res.registration.intersections.get(key)
        if ix is None:
            raise GeometryError(f"no crossing registered at {args.dump_intersection}")
        b = FictitiousBuilder(res.registration, cfg.eps_solute, cfg.eps_solvent)
        text = b.debug_dump(_chain_of(res.registration, ix), res.decomposition.jumps)
        eqs = [e for e in res.regular.system.fictitious.values() if e.key[0] == key]
        for e in eqs:
            coef = {int(n): float(c) for n, c in e.coefficients.items()}
            text += (f"\n  equation {e.key[1]} node={e.node} side={'solute' if e.side else 'solvent'} "
                     f"constant={float(e.constant)!r} coefficients={coef}")
        print(text, file=sys.stderr)
    if args.format == "csv":
        print(report.to_csv(), end="")
    else:
        print(report.to_json())
    return 0


def _dump_field(path, res) -> None:
    g = res.registration.grid
    phi0 = res.decomposition.phi0.values.reshape(g.dims)
    u = res.regular.values.reshape(g.dims)
    with open(path, "w") as fh:
        fh.write("# i j k solute phi_tilde phi0\n")
        for idx in np.ndindex(g.dims):
            fh.write(f"{idx[0]} {idx[1]} {idx[2]} {int(res.registration.flags[idx])} "
                     f"{float(u[idx])!r} {float(phi0[idx])!r}\n")


def cmd_sweep(args) -> int:
    model = load_pqr(args.pqr)
    cfg = build_config(args)
    spec = SweepSpec(tuple(args.grid_sizes), padding=args.padding, output=args.format, jobs=args.jobs)
    rows = run_sweep(model, cfg, spec, oracle=sphere_oracle(model, cfg))
    print(format_sweep(rows, spec.output))
    return 0 if all(r.error is None for r in rows) else 1


def cmd_oracle(args) -> int:
    out = {}
    if args.born is not None:
        q, r = args.born
        out["born"] = born_energy(q, r, args.eps_solute or 1.0, args.eps_solvent or 80.0)
    if args.kirkwood_case is not None:
        kc = kirkwood_case(args.kirkwood_case, eps_in=args.eps_solute or 1.0,
                           eps_out=args.eps_solvent or 80.0)
        out[f"kirkwood_case_{args.kirkwood_case}"] = kirkwood_energy(kc, tol=args.series_tol)
    if args.pqr:
        model = load_pqr(args.pqr)
        cfg = build_config(args)
        val = sphere_oracle(model, cfg)
        if val is None:
            raise ConfigError("oracle needs a sphere surface enclosing every charge and kappa_bar = 0")
        out["sphere"] = val
    if not out:
        raise ConfigError("nothing to evaluate: give --born, --kirkwood-case or a PQR file")
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_export(args) -> int:
    model = load_pqr(args.pqr)
    cfg = build_config(args)
    surface = surface_from_config(cfg.surface, model)
    grid = build_grid(model, cfg.grid_spacing, cfg.padding, surface_bounds(surface))
    reg = register_domain(grid, surface, model)
    Path(args.output).write_text(export_eulerian(reg))
    print(f"wrote {args.output}: grid {grid.dims}, {reg.solute_count} solute nodes, "
          f"{len(reg.intersections)} crossings", file=sys.stderr)
    return 0


def cmd_import(args) -> int:
    grid, flags, ixs = parse_eulerian(Path(args.path).read_text(), args.path)
    reg = DomainRegistration(grid, flags, ixs)
    reg.validate()
    info = {"dims": list(grid.dims), "h": grid.h, "origin": list(grid.origin),
            "solute_nodes": reg.solute_count, "crossings": len(reg.intersections),
            "irregular_nodes": int(reg.irregular.sum())}
    print(json.dumps(info, indent=2))
    return 0


# ---------------------------------------------------------------- parser

def _common(p, with_pqr=True):
    if with_pqr:
        p.add_argument("pqr", help="atom file: x y z q r per line")
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--h", type=float, help="grid spacing (A)")
    p.add_argument("--padding", type=float, help="box padding around the surface (A)")
    p.add_argument("--eps-solute", type=float)
    p.add_argument("--eps-solvent", type=float)
    p.add_argument("--kappa-bar", type=float)
    p.add_argument("--surface", choices=("sphere", "union_of_spheres", "mesh", "eulerian_file"))
    p.add_argument("--radius", type=float, help="sphere surface radius")
    p.add_argument("--center", type=float, nargs=3, help="sphere surface center")
    p.add_argument("--surface-file", help="OFF mesh or Eulerian file")
    p.add_argument("--tol", type=float, help="relative residual tolerance")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--precond", choices=("jacobi", "ilu", "none"))
    p.add_argument("--method", choices=("bicgstab", "gmres", "direct"))
    p.add_argument("--explicit-vacuum", action="store_true",
                   help="subtract a second solve with eps_solvent = eps_solute")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pbmib", description="Interface-method Poisson solver for solvation energies")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="single run, prints an energy report")
    _common(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--dump-field", metavar="PATH", help="write node values of both field parts")
    p.add_argument("--dump-intersection", metavar="AXIS:I,J,K",
                   help="print the local system at one crossing to stderr")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="grid-size study")
    _common(p)
    p.add_argument("--grid-sizes", type=float, nargs="+", required=True)
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="closed-form sphere energies")
    _common(p, with_pqr=False)
    p.add_argument("pqr", nargs="?", help="atoms inside a sphere surface")
    p.add_argument("--born", type=float, nargs=2, metavar=("Q", "R"))
    p.add_argument("--kirkwood-case", type=int, choices=(1, 2, 3, 4, 5))
    p.add_argument("--series-tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("export-surface", help="write flags and crossings in Eulerian format")
    _common(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("import-surface", help="validate an Eulerian file and summarize it")
    p.add_argument("path")
    p.set_defaults(func=cmd_import)
    return ap


def _origin(exc) -> str:
    """Name of the innermost package module the error was raised from."""
    mod, tb = "pbmib", exc.__traceback__
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("pbmib."):
            mod = name.split(".", 1)[1]
        tb = tb.tb_next
    return mod


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PBError as exc:
        mod = _origin(exc)
        print(f"error [{mod}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

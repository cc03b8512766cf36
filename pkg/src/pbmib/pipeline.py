"""End-to-end pipeline: register, decompose, assemble, solve, extend, sum."""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import ReactionField, extend_reaction_field, needed_nodes, reaction_field_energy
from .errors import ConfigError, PBError
from .grid import build_grid, register_domain
from .mib import FictitiousBuilder, assemble
from .singular import debye_huckel, decompose
from .solver import SolverConfig, solve
from .surface import surface_from_config

log = logging.getLogger(__name__)


def solver_config(settings) -> SolverConfig:
    return SolverConfig(settings.tol, settings.max_iter, settings.method, settings.precond)


def surface_bounds(surface):
    b = getattr(surface, "bounds", None)
    return b() if callable(b) else b


@dataclass
class RegularSolve:
    """The jump-driven field on every node plus its fictitious-value equations."""

    values: np.ndarray
    system: object
    diagnostics: object

    def fictitious_value(self, ix, node, side=True):
        for end in ("lo", "hi"):
            eq = self.system.fictitious.get((ix.key, end))
            if eq is not None and eq.node == tuple(node) and eq.side == side:
                return eq.evaluate(self.values)
        return None


def solve_regular(reg, model, jumps, dielectric, config: SolverConfig) -> RegularSolve:
    g = reg.grid
    bidx = np.flatnonzero(g.boundary_mask().ravel())
    bvals = np.zeros(g.size)
    pts = np.asarray(g.origin) + np.stack(np.unravel_index(bidx, g.dims), axis=1) * np.asarray(g.spacing)
    bvals[bidx] = debye_huckel(model.with_dielectric(eps_solvent=dielectric.eps_solvent,
                                                     kappa_bar=dielectric.kappa_bar), pts)
    fict = FictitiousBuilder(reg, dielectric.eps_solute, dielectric.eps_solvent).all_equations(jumps)
    system = assemble(reg, dielectric, jumps, bvals, fict)
    x, diag = solve(system, config)
    return RegularSolve(x, system, diag)


@dataclass
class PipelineResult:
    report: object
    registration: object
    decomposition: object
    regular: RegularSolve
    field: ReactionField
    vacuum: RegularSolve | None = None
    timings: dict = field(default_factory=dict)


def run_pipeline(model, config, surface=None) -> PipelineResult:
    """Full run; returns every intermediate for inspection."""
    t0 = time.perf_counter()
    model = model.with_dielectric(eps_solute=config.eps_solute, eps_solvent=config.eps_solvent,
                                  kappa_bar=config.kappa_bar)
    if surface is None:
        surface = surface_from_config(config.surface, model)
    grid = getattr(surface, "grid", None)
    if grid is None:
        grid = build_grid(model, config.grid_spacing, config.padding, surface_bounds(surface))
    reg = register_domain(grid, surface, model)
    t1 = time.perf_counter()
    scfg = solver_config(config.solver)
    dec = decompose(reg, model, scfg)
    t2 = time.perf_counter()
    diel = model.dielectric
    regular = solve_regular(reg, model, dec.jumps, diel, scfg)
    t3 = time.perf_counter()
    vacuum = None
    u = regular.values.reshape(grid.dims)
    phi0 = dec.phi0
    if config.explicit_vacuum:
        vdiel = replace(diel, eps_solvent=diel.eps_solute, kappa_bar=0.0)
        vacuum = solve_regular(reg, model, dec.jumps, vdiel, scfg)
        rec = u - vacuum.values.reshape(grid.dims)

        def top(ix, q):
            a = regular.fictitious_value(ix, q)
            b = vacuum.fictitious_value(ix, q)
            return None if a is None or b is None else a - b
    else:
        rec = u + np.nan_to_num(phi0.values)

        def top(ix, q):
            a = regular.fictitious_value(ix, q)
            return None if a is None else a + phi0.extended_value(ix, q)

    fld = ReactionField.interior(grid, rec, reg.flags)
    anchors, needed = needed_nodes(grid, reg.flags, model.centers)
    fld = extend_reaction_field(fld, reg, needed, top=top)
    diag = regular.diagnostics.as_dict()
    diag["phi0_iterations"] = dec.phi0.diagnostics.iterations if dec.phi0.diagnostics else 0
    report = reaction_field_energy(model, fld, grid, anchors=anchors, solver=diag)
    t4 = time.perf_counter()
    timings = {"register": t1 - t0, "decompose": t2 - t1, "solve": t3 - t2, "energy": t4 - t3}
    log.info("h=%g dG=%.6f timings %s", grid.h, report.delta_G, timings)
    return PipelineResult(report, reg, dec, regular, fld, vacuum, timings)


def run_single(model, config, surface=None):
    return run_pipeline(model, config, surface).report


@dataclass
class SweepSpec:
    grid_sizes: tuple
    reference_h: float | None = None
    padding: float | None = None
    output: str = "table"
    jobs: int = 1

    def __post_init__(self):
        self.grid_sizes = tuple(float(h) for h in self.grid_sizes)
        if len(self.grid_sizes) < 2:
            raise ConfigError("a sweep needs at least two grid sizes")
        if any(not h > 0 for h in self.grid_sizes):
            raise ConfigError("grid sizes must be positive")
        if self.reference_h is None:
            self.reference_h = min(self.grid_sizes)
        if not math.isclose(self.reference_h, min(self.grid_sizes)):
            raise ConfigError("reference_h must be the finest grid size")
        if self.output not in ("csv", "json", "table"):
            raise ConfigError(f"unknown output format {self.output!r}")


@dataclass
class SweepRow:
    h: float
    delta_G: float | None
    relative_error: float | None = None
    oracle_error: float | None = None
    error: str | None = None

    def as_dict(self):
        return {"h": self.h, "delta_G": self.delta_G, "relative_error": self.relative_error,
                "oracle_relative_error": self.oracle_error, "error": self.error}


def _one(args):
    model, config, h = args
    try:
        return h, run_single(model, replace(config, grid_spacing=h)).delta_G, None
    except PBError as exc:
        return h, None, f"{type(exc).__name__}: {exc}"


def run_sweep(model, config, sweep: SweepSpec, oracle: float | None = None) -> list:
    """One row per grid size; relative errors vs the finest grid (and ``oracle`` if given).

    The padding is fixed across the sweep so only h varies.
    """
    if sweep.padding is not None:
        config = replace(config, padding=sweep.padding)
    tasks = [(model, config, h) for h in sweep.grid_sizes]
    if sweep.jobs > 1:
        with ProcessPoolExecutor(sweep.jobs) as ex:
            results = list(ex.map(_one, tasks))
    else:
        results = [_one(t) for t in tasks]
    ref = dict((h, g) for h, g, _ in results).get(sweep.reference_h)
    rows = []
    for h, g, err in results:
        row = SweepRow(h, g, error=err)
        if g is not None and ref not in (None, 0.0):
            row.relative_error = abs(g - ref) / abs(ref)
        if g is not None and oracle:
            row.oracle_error = float(abs(g - oracle) / abs(oracle))
        rows.append(row)
    return rows


def format_sweep(rows, fmt="table") -> str:
    import csv
    import io
    import json
    if fmt == "json":
        return json.dumps([r.as_dict() for r in rows], indent=2)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0].as_dict()))
        w.writeheader()
        for r in rows:
            w.writerow(r.as_dict())
        return buf.getvalue()

    def f(v, spec):
        return format("-", ">" + spec.split(".")[0]) if v is None else format(v, spec)
    lines = [f"{'h':>6} {'dG (kcal/mol)':>14} {'rel.err':>10} {'vs exact':>10}  note"]
    for r in rows:
        lines.append(f"{r.h:>6.3g} {f(r.delta_G, '14.4f')} {f(r.relative_error, '10.3%')} "
                     f"{f(r.oracle_error, '10.3%')}  {r.error or ''}")
    return "\n".join(lines)

"""Reaction-field potential at atom centers and the solvation energy sum.

Atom potentials come from a 27-node tensor Lagrange stencil anchored at the
nearest solute node.  Stencil nodes on the solvent side get extended values:
fictitious value plus extrapolated harmonic correction when a crossing is
adjacent, otherwise three-point linear extrapolation along an axis, otherwise
a parallelogram rule.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ExtensionError, GeometryError
from .mib import lagrange

log = logging.getLogger(__name__)

NONE, INTERIOR, TOP, MID, LOW = 0, 1, 2, 3, 4
PROVENANCE = {INTERIOR: "interior", TOP: "extended_top", MID: "extended_mid", LOW: "extended_low"}

_DIRECTIONS = [(a, s) for a in range(3) for s in (-1, 1)]


@dataclass
class ReactionField:
    grid: object
    values: np.ndarray  # NaN where undefined
    provenance: np.ndarray  # int8 codes, see PROVENANCE

    @classmethod
    def interior(cls, grid, values, solute_flags):
        vals = np.where(solute_flags, np.asarray(values, float).reshape(grid.dims), np.nan)
        prov = np.where(solute_flags, INTERIOR, NONE).astype(np.int8)
        return cls(grid, vals, prov)

    def counts(self) -> dict:
        return {PROVENANCE[c]: int((self.provenance == c).sum()) for c in (TOP, MID, LOW)}

    def tag(self, node) -> str | None:
        return PROVENANCE.get(int(self.provenance[node]))


def anchor_node(grid, flags, center):
    """Nearest solute node to ``center``; ties go to the lexicographically smallest index."""
    idx = np.argwhere(flags)  # already in lexicographic order
    if len(idx) == 0:
        raise GeometryError(f"no solute node for atom center {tuple(center)}")
    pts = np.asarray(grid.origin) + idx * np.asarray(grid.spacing)
    d = np.linalg.norm(pts - np.asarray(center, float), axis=1)
    best = int(np.flatnonzero(d <= d.min() * (1 + 1e-12) + 1e-15)[0])
    return tuple(int(v) for v in idx[best])


def stencil_nodes(grid, anchor):
    i, j, k = anchor
    if not all(1 <= a <= n - 2 for a, n in zip(anchor, grid.dims)):
        raise GeometryError(f"interpolation stencil around {anchor} leaves the grid")
    return [(i + a, j + b, k + c) for a in (-1, 0, 1) for b in (-1, 0, 1) for c in (-1, 0, 1)]


def interpolate_at_center(field, grid, center, flags=None, anchor=None) -> float:
    """Tri-quadratic 27-node interpolation (x, then y, then z)."""
    if anchor is None:
        if flags is None:
            raise GeometryError("anchor search needs solute flags")
        anchor = anchor_node(grid, flags, center)
    values = field.values if isinstance(field, ReactionField) else field
    stencil_nodes(grid, anchor)
    i, j, k = anchor
    block = values[i - 1:i + 2, j - 1:j + 2, k - 1:k + 2]
    if not np.all(np.isfinite(block)):
        bad = np.argwhere(~np.isfinite(block))[0] + np.array(anchor) - 1
        raise ExtensionError(f"stencil node {tuple(int(v) for v in bad)} has no value")
    w = []
    for axis in range(3):
        xs = [grid.origin[axis] + (anchor[axis] + d) * grid.spacing[axis] for d in (-1, 0, 1)]
        w.append(lagrange(xs, float(center[axis])))
    return float(np.einsum("i,j,k,ijk->", w[0], w[1], w[2], block))


def _in(grid, p):
    return all(0 <= a < n for a, n in zip(p, grid.dims))


def _shift(p, axis, s):
    q = list(p)
    q[axis] += s
    return tuple(q)


def extend_reaction_field(field: ReactionField, reg, needed, top=None) -> ReactionField:
    """Give every node in ``needed`` a value by the highest applicable priority.

    ``top(ix, node)`` returns the top-priority value at solvent ``node``
    across crossing ``ix`` (solute side), or None.  Interior values are never
    modified; extended values are stored only on this field.
    """
    g = reg.grid
    vals = field.values.copy()
    prov = field.provenance.copy()
    todo = sorted({tuple(int(a) for a in n) for n in needed if not prov[tuple(n)]})

    # top priority
    rest = []
    for q in todo:
        best = None
        if top is not None:
            for axis, s in _DIRECTIONS:
                p = _shift(q, axis, s)
                if not _in(g, p) or prov[p] != INTERIOR:
                    continue
                ix = reg.edge_between(q, p)
                if ix is None:
                    continue
                d = abs(ix.location[axis] - (g.origin[axis] + q[axis] * g.spacing[axis]))
                if best is None or d < best[0]:
                    best = (d, ix)
        if best is not None:
            v = top(best[1], q)
            if v is not None:
                vals[q] = v
                prov[q] = TOP
                continue
        rest.append(q)

    # middle priority from interior nodes only
    pending = []
    for q in rest:
        done = False
        for axis, s in _DIRECTIONS:  # extrapolation distance is h in every direction
            p1, p2, p3 = (_shift(q, axis, s * m) for m in (1, 2, 3))
            if all(_in(g, p) and prov[p] == INTERIOR for p in (p1, p2, p3)):
                vals[q] = 3 * vals[p1] - 3 * vals[p2] + vals[p3]
                prov[q] = MID
                done = True
                break
        if not done:
            pending.append(q)

    # low priority: parallelogram, may lean on values extended above
    while pending:
        progress = []
        for q in pending:
            for (a1, s1), (a2, s2) in ((d1, d2) for d1 in _DIRECTIONS for d2 in _DIRECTIONS if d1[0] < d2[0]):
                i2 = _shift(q, a1, s1)
                i3 = _shift(q, a2, s2)
                ijk = _shift(i2, a2, s2)
                if all(_in(g, p) and prov[p] != NONE for p in (i2, i3, ijk)):
                    vals[q] = vals[i2] + vals[i3] - vals[ijk]
                    prov[q] = LOW
                    progress.append(q)
                    break
        if not progress:
            raise ExtensionError(f"no extension rule applies at node {pending[0]}")
        pending = [q for q in pending if q not in progress]
    return ReactionField(g, vals, prov)


@dataclass
class EnergyReport:
    delta_G: float
    per_atom_potential: list
    charges: list
    h: float
    solver: dict = field(default_factory=dict)
    extension: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "delta_G_kcal_mol": self.delta_G,
            "h": self.h,
            "atoms": [{"index": i, "q": q, "phi_rec": p}
                      for i, (q, p) in enumerate(zip(self.charges, self.per_atom_potential))],
            "solver": self.solver,
            "extension": {"top": self.extension.get("extended_top", 0),
                          "mid": self.extension.get("extended_mid", 0),
                          "low": self.extension.get("extended_low", 0)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    CSV_FIELDS = ("h", "delta_G_kcal_mol", "iterations", "relative_residual", "top", "mid", "low")

    def csv_row(self) -> dict:
        d = self.to_dict()
        return {"h": self.h, "delta_G_kcal_mol": self.delta_G,
                "iterations": self.solver.get("iterations", ""),
                "relative_residual": self.solver.get("relative_residual", ""),
                **d["extension"]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.CSV_FIELDS)
        w.writeheader()
        w.writerow(self.csv_row())
        return buf.getvalue()


def needed_nodes(grid, flags, centers):
    anchors = [anchor_node(grid, flags, c) for c in centers]
    needed = set()
    for a in anchors:
        needed.update(n for n in stencil_nodes(grid, a) if not flags[n])
    return anchors, sorted(needed)


def reaction_field_energy(model, field: ReactionField, grid, flags=None, anchors=None,
                          solver: dict | None = None) -> EnergyReport:
    """Half the sum of charge times reaction-field potential over atoms."""
    if anchors is None:
        anchors = [anchor_node(grid, flags, c) for c in model.centers]
    phis = [interpolate_at_center(field, grid, c, anchor=a) for c, a in zip(model.centers, anchors)]
    q = model.charges
    dG = 0.5 * float(np.dot(q, phis)) if len(q) else 0.0
    return EnergyReport(dG, [float(p) for p in phis], [float(v) for v in q], float(grid.h),
                        dict(solver or {}), field.counts())

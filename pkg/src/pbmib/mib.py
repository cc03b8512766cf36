"""Matched-interface-and-boundary discretization of the regular potential.

Every interface crossing on a mesh line carries two fictitious values: the
extension of each side's field onto the node just across the interface.
They are fixed by continuity of the potential and the flux jump, written in
a local (normal, tangent, tangent) frame.  Two of the four off-line gradient
components are eliminated with the tangential continuity conditions; the two
kept components come from one-sided Lagrange stencils in their own domain.

Crossings separated by a single node share stencil nodes, so their
fictitious values are solved jointly (the sharp-geometry case).
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError, ConditioningError, DegeneracyError, GeometryError

log = logging.getLogger(__name__)

COND_LIMIT = 1e12
NEAR_NODE_GAP = 0.2  # fraction of h
LINE_WEIGHT_MIN = 0.1  # weaker line coupling makes the local system near-singular


# ---------------------------------------------------------------- weights

@dataclass(frozen=True)
class FDWeights:
    nodes: tuple
    point: float
    derivative_order: int
    weights: tuple


def fornberg(nodes, point: float, order: int) -> np.ndarray:
    """Weights for derivatives 0..order at ``point``; shape (order+1, len(nodes))."""
    x = np.asarray(nodes, dtype=float)
    n = len(x)
    if order < 0 or order >= n:
        raise DegeneracyError(f"derivative order {order} needs more than {n} nodes")
    if len(np.unique(x)) != n:
        raise DegeneracyError(f"duplicate interpolation nodes {list(x)}")
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, x[0] - point
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, x[i] - point
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c.T


def fd_weights(nodes, point: float, order: int) -> FDWeights:
    w = fornberg(nodes, point, order)[order]
    return FDWeights(tuple(float(v) for v in nodes), float(point), int(order), tuple(float(v) for v in w))


def lagrange(nodes, point: float, order: int = 0) -> np.ndarray:
    return fornberg(nodes, point, order)[order]


# ---------------------------------------------------------------- frames

@dataclass(frozen=True)
class LocalFrame:
    normal: np.ndarray
    tangent1: np.ndarray
    tangent2: np.ndarray

    @property
    def rotation(self) -> np.ndarray:
        return np.vstack([self.normal, self.tangent1, self.tangent2])


def local_frame(normal) -> LocalFrame:
    """Right-handed frame (n, t1, t2).

    t1 = normalize(n x e_k) with e_k the axis least aligned with n (first such
    axis on ties), t2 = n x t1.
    """
    n = np.asarray(normal, dtype=float)
    norm = np.linalg.norm(n)
    if not norm > 1e-12:
        raise GeometryError("cannot build a frame on a zero normal")
    if abs(norm - 1.0) > 1e-9:
        raise GeometryError(f"normal must be unit length, got |n| = {norm}")
    n = n / norm
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    t1 = np.cross(n, e)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return LocalFrame(n, t1, t2)


# ---------------------------------------------------------------- stencils

@dataclass
class TangentialStencil:
    """Approximation of d/dx_k of one side's field at a crossing point."""

    coefs: dict
    tier: int  # 0: second order, 1-2: first order fallbacks, 3: unavailable
    missing: int


def _axis_derivative_at_node(flags, ijk, k, side, h):
    """Derivative along axis k at a node from same-side nodes; (offsets, weights, tier)."""
    n = flags.shape[k]

    def ok(off):
        p = list(ijk)
        p[k] += off
        return 0 <= p[k] < n and flags[tuple(p)] == side

    if ok(-1) and ok(1):
        return (-1, 1), (-0.5 / h, 0.5 / h), 0
    if ok(1) and ok(2):
        return (0, 1, 2), (-1.5 / h, 2.0 / h, -0.5 / h), 0
    if ok(-1) and ok(-2):
        return (0, -1, -2), (1.5 / h, -2.0 / h, 0.5 / h), 0
    if ok(1):
        return (0, 1), (-1.0 / h, 1.0 / h), 1
    if ok(-1):
        return (0, -1), (1.0 / h, -1.0 / h), 1
    return None


def tangential_stencil(reg, ix, side: bool, k: int) -> TangentialStencil:
    """d/dx_k of the ``side`` field at crossing ``ix`` (k != ix.axis).

    Derivatives at the two nearest same-side nodes on the mesh line are
    linearly extrapolated to the crossing.
    """
    g, flags, axis = reg.grid, reg.flags, ix.axis
    h = g.spacing[k]
    lo_side = bool(flags[ix.node])
    if side == lo_side:
        p0 = list(ix.node)
        step = -1
    else:
        p0 = list(ix.far_node)
        step = 1
    p1 = list(p0)
    p1[axis] += step
    positions = [tuple(p0)]
    if 0 <= p1[axis] < g.dims[axis] and flags[tuple(p1)] == side:
        positions.append(tuple(p1))
    missing = 0 if len(positions) == 2 else 1
    for p in [tuple(p0), tuple(p1)]:
        for off in (-1, 1):
            q = list(p)
            q[k] += off
            if not (0 <= q[k] < g.dims[k]) or flags[tuple(q)] != side:
                missing += 1
    per_pos = []
    for p in positions:
        st = _axis_derivative_at_node(flags, p, k, side, h)
        if st is None:
            break
        per_pos.append((p, st))
    if not per_pos:
        return TangentialStencil({}, 3, missing)
    xg = ix.location[axis]
    xs = [g.origin[axis] + p[axis] * g.spacing[axis] for p, _ in per_pos]
    if len(per_pos) == 2:
        lw = lagrange(xs, xg)
        tier = max(st[2] for _, st in per_pos)
    else:
        lw = np.ones(1)
        tier = 1 if per_pos[0][1][2] == 0 else 2
    coefs = {}
    for wl, (p, (offs, ws, _)) in zip(lw, per_pos):
        for off, w in zip(offs, ws):
            q = list(p)
            q[k] += off
            f = int(g.flat(*q))
            coefs[f] = coefs.get(f, 0.0) + wl * w
    return TangentialStencil(coefs, tier, missing)


# ---------------------------------------------------------------- equations

@dataclass
class FictitiousEquation:
    """Fictitious value at ``node`` for the field of domain ``side`` (True = solute).

    value = sum(coefficients[n] * u[n]) + constant over real grid unknowns.
    """

    key: tuple  # (intersection key, "lo" | "hi")
    node: tuple
    side: bool
    coefficients: dict
    constant: float

    def evaluate(self, u_flat) -> float:
        return sum(c * u_flat[n] for n, c in self.coefficients.items()) + self.constant


@dataclass
class _Row:
    fict: dict = field(default_factory=dict)  # fictitious unknown index -> coef
    real: dict = field(default_factory=dict)  # flat node -> coef
    const: float = 0.0

    def add(self, kind, ref, c):
        d = self.fict if kind == "f" else self.real
        d[ref] = d.get(ref, 0.0) + c


def line_chains(reg):
    """Group crossings into chains of crossings that share stencil nodes."""
    lines = {}
    for key, ix in reg.intersections.items():
        axis = ix.axis
        u, w = [a for a in range(3) if a != axis]
        lines.setdefault((axis, ix.node[u], ix.node[w]), []).append(ix)
    chains = []
    for lk in sorted(lines):
        ixs = sorted(lines[lk], key=lambda e: e.node[e.axis])
        cur = [ixs[0]]
        for ix in ixs[1:]:
            if ix.node[ix.axis] - cur[-1].node[ix.axis] == 1:
                cur.append(ix)
            else:
                chains.append(cur)
                cur = [ix]
        chains.append(cur)
    return chains


_SIDES = (True, False)  # solute first on ties


def _choose_elimination(M, kept_quality, line_axis, high_side=False):
    """Pick two off-line gradient columns to eliminate.

    Columns of M are G_m[0..2], G_s[0..2].  Returns (w, eliminated, score)
    where the left null vector w removes the eliminated columns from the
    three conditions.

    Among equally good stencils, the columns of ``high_side`` (the side with
    the larger dielectric) are eliminated: the kept low-dielectric tangential
    derivatives then enter with weight eps_high - eps_low, and the line
    derivative of the low side keeps a weight of order eps_high.  The other
    choice divides the high side's stencil errors by eps_low.
    """
    off_axes = [a for a in range(3) if a != line_axis]
    candidates = [(side, a) for a in off_axes for side in _SIDES]
    best = None
    for e1, e2 in itertools.combinations(candidates, 2):
        c1 = e1[1] + (0 if e1[0] else 3)
        c2 = e2[1] + (0 if e2[0] else 3)
        w = np.cross(M[:, c1], M[:, c2])
        nw = np.linalg.norm(w)
        if nw < 1e-10 * np.linalg.norm(M[:, c1]) * np.linalg.norm(M[:, c2]) or nw == 0.0:
            continue
        w = w / nw
        combined = np.abs(w @ M)
        # the combined equation must still pin the line derivatives
        line_weight = combined[[line_axis, line_axis + 3]].max() / combined.max()
        if line_weight < 1e-8:
            continue
        kept = [c for c in candidates if c not in (e1, e2)]
        quals = [kept_quality[c] for c in kept]
        # a kept column with a negligible coefficient costs nothing
        quals = [q if abs(w @ M[:, c[1] + (0 if c[0] else 3)]) > 1e-14 else (0, 0)
                 for q, c in zip(quals, kept)]
        off_side = sum(1 for e in (e1, e2) if e[0] != high_side)
        score = (line_weight < LINE_WEIGHT_MIN, max(q[0] for q in quals), sum(q[0] for q in quals),
                 off_side, sum(q[1] for q in quals), -round(line_weight, 6))
        if best is None or score < best[0]:
            best = (score, w, (e1, e2))
    if best is None:
        raise ConditioningError("no admissible derivative elimination at crossing")
    return best[1], best[2], best[0]


class FictitiousBuilder:
    """Builds fictitious-value equations for every crossing of a registration."""

    def __init__(self, reg, eps_solute: float, eps_solvent: float, grazing_fallback: bool = True):
        self.reg = reg
        self.grazing_fallback = grazing_fallback
        self.eps_m = float(eps_solute)
        self.eps_s = float(eps_solvent)
        self.fallbacks = []
        self._tangential = {}

    def _same_side_real(self, base, axis, pos, side):
        if not 0 <= pos < self.reg.grid.dims[axis]:
            return False
        p = list(base)
        p[axis] = pos
        return bool(self.reg.flags[tuple(p)]) == side

    def tangential(self, ix, side, k):
        key = (ix.key, side, k)
        if key not in self._tangential:
            self._tangential[key] = tangential_stencil(self.reg, ix, side, k)
        return self._tangential[key]

    def chain_equations(self, chain, jumps, frames=None):
        """Solve the fictitious values of one chain; returns a list of FictitiousEquation."""
        reg, g, flags = self.reg, self.reg.grid, self.reg.flags
        axis = chain[0].axis
        h = g.spacing[axis]
        n_axis = g.dims[axis]
        index = {}
        for m, ix in enumerate(chain):
            index[(ix.key, "lo")] = 2 * m
            index[(ix.key, "hi")] = 2 * m + 1
        by_low = {ix.node[axis]: ix for ix in chain}
        for a, b in zip(chain, chain[1:]):
            if abs(a.location[axis] - b.location[axis]) < 1e-10 * h:
                if self.grazing_fallback and len(chain) == 2:
                    return self._grazing_equations(a, b)
                raise ConditioningError(
                    f"coincident crossings on {a.key} and {b.key}",
                    dump=self.debug_dump(chain, jumps))

        def node_at(base, pos):
            p = list(base)
            p[axis] = pos
            return tuple(p)

        def ref(base, pos, side, anchor):
            """Value at line position ``pos`` of the field of the segment containing ``anchor``."""
            if not 0 <= pos < n_axis:
                raise AssemblyError(f"stencil leaves the grid near {base}; interface too close to the boundary")
            p = node_at(base, pos)
            if flags[p] == side:
                return "u", int(g.flat(*p))
            if pos > anchor and pos - 1 in by_low:
                return "f", index[(by_low[pos - 1].key, "hi")]
            if pos < anchor and pos in by_low:
                return "f", index[(by_low[pos].key, "lo")]
            raise AssemblyError(f"no fictitious value available for side {side} at {p}")

        rows = []
        for m, ix in enumerate(chain):
            a = ix.node[axis]
            lo_side = bool(flags[ix.node])
            hi_side = not lo_side
            x = lambda pos: g.origin[axis] + pos * h
            xg = ix.location[axis]
            lo_pos = [a - 1, a, a + 1]
            hi_pos = [a, a + 1, a + 2]
            # a real node almost on the interface makes the quadratic through it
            # nearly degenerate; skip it when the next one out is available
            if (a + 1) * h + g.origin[axis] - ix.location[axis] < NEAR_NODE_GAP * h:
                alt = [a, a + 2, a + 3]
                if all(self._same_side_real(ix.node, axis, p, hi_side) for p in alt[1:]):
                    hi_pos = alt
            if ix.location[axis] - (a * h + g.origin[axis]) < NEAR_NODE_GAP * h:
                alt = [a - 2, a - 1, a + 1]
                if all(self._same_side_real(ix.node, axis, p, lo_side) for p in alt[:2]):
                    lo_pos = alt
            wl = fornberg([x(p) for p in lo_pos], xg, 1)
            wh = fornberg([x(p) for p in hi_pos], xg, 1)
            lo_refs = [ref(ix.node, p, lo_side, a) for p in lo_pos]
            hi_refs = [ref(ix.node, p, hi_side, a + 1) for p in hi_pos]
            # value continuity
            r = _Row()
            for (kind, rf), c in zip(lo_refs, wl[0]):
                r.add(kind, rf, c)
            for (kind, rf), c in zip(hi_refs, wh[0]):
                r.add(kind, rf, -c)
            rows.append(r)
            # flux jump with tangential continuity
            frame = frames[m] if frames is not None else local_frame(ix.normal)
            n, t1, t2 = frame.normal, frame.tangent1, frame.tangent2
            M = np.zeros((3, 6))
            M[0, :3], M[0, 3:] = -t1, t1
            M[1, :3], M[1, 3:] = -t2, t2
            M[2, :3], M[2, 3:] = -self.eps_m * n, self.eps_s * n
            quality = {}
            for k in (kk for kk in range(3) if kk != axis):
                for side in _SIDES:
                    st = self.tangential(ix, side, k)
                    quality[(side, k)] = (st.tier, st.missing)
            w, elim, score = _choose_elimination(M, quality, axis, high_side=self.eps_m > self.eps_s)
            if score[1] > 0:
                self.fallbacks.append((ix.key, score))
            scale = np.abs(w @ M).max()
            w = w / scale
            r = _Row(const=-(w[2] * jumps[ix.key]))
            col = lambda side, k: k + (0 if side else 3)
            # line derivatives: m side and s side quadratics
            for side, refs, wd in ((lo_side, lo_refs, wl[1]), (hi_side, hi_refs, wh[1])):
                cm = w @ M[:, col(side, axis)]
                for (kind, rf), c in zip(refs, wd):
                    r.add(kind, rf, cm * c)
            for k in (kk for kk in range(3) if kk != axis):
                for side in _SIDES:
                    if (side, k) in elim:
                        continue
                    cm = w @ M[:, col(side, k)]
                    if abs(cm) <= 1e-14:
                        continue
                    st = self.tangential(ix, side, k)
                    if st.tier == 3:
                        log.debug("no tangential stencil at %s; derivative dropped", ix.key)
                        continue
                    for f, c in st.coefs.items():
                        r.add("u", f, cm * c)
            rows.append(r)

        nf = 2 * len(chain)
        A = np.zeros((nf, nf))
        for i, r in enumerate(rows):
            for j, c in r.fict.items():
                A[i, j] += c
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise ConditioningError(f"fictitious system for chain {[ix.key for ix in chain]} has condition {cond:.3g}",
                                    dump=self.debug_dump(chain, jumps))
        Ainv = np.linalg.inv(A)
        out = []
        for m, ix in enumerate(chain):
            lo_side = bool(flags[ix.node])
            for end, node, side in (("lo", ix.node, not lo_side), ("hi", ix.far_node, lo_side)):
                i = index[(ix.key, end)]
                coefs, const = {}, 0.0
                for rr, r in enumerate(rows):
                    c = -Ainv[i, rr]
                    if c == 0.0:
                        continue
                    const += c * r.const
                    for f, v in r.real.items():
                        coefs[f] = coefs.get(f, 0.0) + c * v
                coefs = {f: v for f, v in coefs.items() if v != 0.0}
                out.append(FictitiousEquation((ix.key, end), node, side, coefs, const))
        return out

    def _grazing_equations(self, a, b):
        """Line tangent to the interface at a single node p (both crossings sit on p).

        First-order fallback: p is on the interface, so the solvent value there
        is u_p; the solute field is extended linearly with the solvent central
        difference, valid because the line direction is tangential at p.
        """
        g = self.reg.grid
        p = b.node
        lo, hi = a.node, b.far_node
        fp, flo, fhi = (int(g.flat(*n)) for n in (p, lo, hi))
        side_p = bool(self.reg.flags[p])
        self.fallbacks.append((a.key, "grazing"))
        self.fallbacks.append((b.key, "grazing"))
        log.info("grazing contact at node %s; first-order fictitious values", p)
        return [
            FictitiousEquation((a.key, "lo"), lo, side_p, {fp: 1.0, fhi: -0.5, flo: 0.5}, 0.0),
            FictitiousEquation((a.key, "hi"), p, not side_p, {fp: 1.0}, 0.0),
            FictitiousEquation((b.key, "lo"), p, not side_p, {fp: 1.0}, 0.0),
            FictitiousEquation((b.key, "hi"), hi, side_p, {fp: 1.0, fhi: 0.5, flo: -0.5}, 0.0),
        ]

    def all_equations(self, jumps) -> dict:
        eqs = {}
        for chain in line_chains(self.reg):
            for e in self.chain_equations(chain, jumps):
                eqs[e.key] = e
        if self.fallbacks:
            log.info("%d crossings use first-order tangential stencils", len(self.fallbacks))
        return eqs

    def debug_dump(self, chain, jumps) -> str:
        g = self.reg.grid
        lines = []
        for ix in chain:
            fr = local_frame(ix.normal)
            lines.append(f"crossing {ix.key} t={ix.t:.6g} at {ix.location}")
            lines.append(f"  frame n={fr.normal} t1={fr.tangent1} t2={fr.tangent2}")
            lines.append(f"  jump={jumps.get(ix.key, float('nan'))!r}")
            a = ix.node[ix.axis]
            for pos in range(a - 2, a + 4):
                p = list(ix.node)
                p[ix.axis] = pos
                if 0 <= pos < g.dims[ix.axis]:
                    lines.append(f"  node {tuple(p)} solute={bool(self.reg.flags[tuple(p)])}")
        return "\n".join(lines)


def fictitious_smooth(reg, intersection, frame, jump_value, eps) -> list:
    """Two fictitious values at an isolated crossing (smooth local geometry)."""
    chain = _chain_of(reg, intersection)
    if len(chain) != 1:
        raise GeometryError(f"crossing {intersection.key} shares its stencil with a neighbor; use fictitious_sharp")
    b = FictitiousBuilder(reg, eps.eps_solute, eps.eps_solvent)
    return b.chain_equations(chain, {intersection.key: jump_value}, frames=[frame])


def fictitious_sharp(reg, intersections, frames, jump_values, eps) -> list:
    """Fictitious values for two crossings around a single node, solved jointly.

    Returns four equations: the outer two nodes get one value each, the
    middle node gets one value per side of the enclosed segment's neighbors.
    """
    ixs = sorted(intersections, key=lambda e: e.node[e.axis])
    if len(ixs) != 2 or ixs[0].axis != ixs[1].axis or ixs[1].node[ixs[1].axis] - ixs[0].node[ixs[0].axis] != 1:
        raise GeometryError("sharp scheme needs two crossings on one line around a single node")
    chain = _chain_of(reg, ixs[0])
    if [c.key for c in chain] != [c.key for c in ixs]:
        raise GeometryError("sharp scheme only covers chains of exactly two crossings")
    b = FictitiousBuilder(reg, eps.eps_solute, eps.eps_solvent, grazing_fallback=False)
    order = [intersections.index(ix) for ix in ixs]
    jumps = {ix.key: jv for ix, jv in zip(intersections, jump_values)}
    return b.chain_equations(ixs, jumps, frames=[frames[i] for i in order])


def _chain_of(reg, ix):
    for chain in line_chains(reg):
        if any(c.key == ix.key for c in chain):
            return chain
    raise GeometryError(f"crossing {ix.key} is not registered")


# ---------------------------------------------------------------- assembly

@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    fictitious: dict = field(default_factory=dict)

    @property
    def triplets(self):
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data

    @property
    def shape(self):
        return self.matrix.shape


def boundary_nodes(grid):
    return np.nonzero(grid.boundary_mask().ravel())[0]


def assemble(reg, eps, jump_data: dict, boundary_values, fictitious: dict | None = None) -> SparseSystem:
    """Interface-corrected 7-point system for -div(eps grad u) = 0.

    ``boundary_values`` is an array over all nodes (only boundary entries are
    read) or a mapping flat index -> value.
    """
    g = reg.grid
    missing = [k for k in reg.intersections if k not in jump_data]
    if missing:
        raise AssemblyError(f"{len(missing)} crossings lack jump data (e.g. {missing[0]})")
    if fictitious is None:
        fictitious = FictitiousBuilder(reg, eps.eps_solute, eps.eps_solvent).all_equations(jump_data)
    N = g.size
    flags = reg.flags
    bmask = g.boundary_mask()
    h2min = min(g.spacing) ** 2
    rows, cols, vals = [], [], []
    rhs = np.zeros(N)
    interior = ~bmask
    flat = np.arange(N).reshape(g.dims)
    p_int = flat[interior]
    diag = np.zeros(N)
    for axis in range(3):
        inv = h2min / g.spacing[axis] ** 2
        diag[p_int] += 2.0 * inv
        for step in (-1, 1):
            nb = np.roll(flat, -step, axis=axis)
            same = np.roll(flags, -step, axis=axis) == flags
            sel = interior & same
            rows.append(flat[sel])
            cols.append(nb[sel])
            vals.append(np.full(int(sel.sum()), -inv))
    rows.append(p_int)
    cols.append(p_int)
    vals.append(diag[p_int])
    # cross-interface neighbors use fictitious values
    xr, xc, xv = [], [], []
    for ix in reg.intersections.values():
        inv = h2min / g.spacing[ix.axis] ** 2
        for end, row_node in (("hi", ix.node), ("lo", ix.far_node)):
            if bmask[row_node]:
                continue
            eq = fictitious[(ix.key, end)]
            r = int(g.flat(*row_node))
            for f, c in eq.coefficients.items():
                xr.append(r)
                xc.append(f)
                xv.append(-inv * c)
            rhs[r] += inv * eq.constant
    rows.append(np.asarray(xr, dtype=int))
    cols.append(np.asarray(xc, dtype=int))
    vals.append(np.asarray(xv, dtype=float))
    bidx = np.nonzero(bmask.ravel())[0]
    rows.append(bidx)
    cols.append(bidx)
    vals.append(np.ones(len(bidx)))
    bv = boundary_values
    if callable(getattr(bv, "get", None)):
        rhs[bidx] = [bv[int(i)] for i in bidx]
    else:
        rhs[bidx] = np.asarray(bv, dtype=float).ravel()[bidx]
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    A.sum_duplicates()
    d = A.diagonal()
    if np.any(d == 0):
        raise AssemblyError(f"{int((d == 0).sum())} rows have a zero diagonal")
    return SparseSystem(A, rhs, fictitious)

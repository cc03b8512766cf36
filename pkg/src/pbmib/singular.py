"""Green's-function split of the potential.

In the solute the potential is Coulomb part + harmonic correction + regular
part; in the solvent it is the regular part alone.  The Coulomb part is
analytic, the harmonic correction cancels it on the interface, and the
regular part only sees the flux jump they leave behind.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ModelError, SingularityError, StencilError
from .mib import SparseSystem, lagrange
from .solver import SolverConfig, solve

log = logging.getLogger(__name__)

MIN_GAP = 0.25  # fraction of h; closer samples are skipped when building stencils
ON_BOUNDARY = 1e-6  # fraction of h; nodes this close to the interface take the boundary value


def coulomb_potential(model, points, eps=None) -> np.ndarray:
    """k_e * sum_i Q_i / (eps |p - r_i|) at each point (kcal/mol/e)."""
    eps = model.dielectric.eps_solute if eps is None else eps
    p = np.asarray(points, float).reshape(-1, 3)
    d = np.linalg.norm(p[:, None, :] - model.centers[None, :, :], axis=2)
    q = model.charges
    if np.any(d[:, q != 0] < 1e-12):
        raise SingularityError("Coulomb potential evaluated at a charged atom center")
    with np.errstate(divide="ignore"):
        terms = np.where(q[None, :] != 0, q[None, :] / np.where(d > 0, d, np.inf), 0.0)
    return model.units.coulomb_constant / eps * terms.sum(axis=1)


def coulomb_gradient(model, points, eps=None) -> np.ndarray:
    eps = model.dielectric.eps_solute if eps is None else eps
    p = np.asarray(points, float).reshape(-1, 3)
    diff = p[:, None, :] - model.centers[None, :, :]
    d = np.linalg.norm(diff, axis=2)
    if np.any(d[:, model.charges != 0] < 1e-12):
        raise SingularityError("Coulomb field evaluated at a charged atom center")
    w = np.where(model.charges[None, :] != 0, model.charges[None, :] / np.maximum(d, 1e-300) ** 3, 0.0)
    return -model.units.coulomb_constant / eps * np.einsum("ij,ijk->ik", w, diff)


def phi_star(model, point) -> float:
    return float(coulomb_potential(model, np.asarray(point, float).reshape(1, 3))[0])


def debye_huckel(model, points) -> np.ndarray:
    """Screened Coulomb far field in the solvent."""
    p = np.asarray(points, float).reshape(-1, 3)
    d = np.linalg.norm(p[:, None, :] - model.centers[None, :, :], axis=2)
    kb = model.dielectric.kappa_bar
    terms = model.charges[None, :] * np.exp(-kb * d) / d
    return model.units.coulomb_constant / model.dielectric.eps_solvent * terms.sum(axis=1)


@dataclass
class Phi0Field:
    """Harmonic correction on solute nodes (NaN elsewhere) plus its boundary data."""

    reg: object
    values: np.ndarray
    dirichlet: object  # callable: (n, 3) points -> values
    diagnostics: object = None
    _cache: dict = field(default_factory=dict, repr=False)

    def boundary_value(self, ix) -> float:
        if ix.key not in self._cache:
            self._cache[ix.key] = float(self.dirichlet(np.asarray(ix.location).reshape(1, 3))[0])
        return self._cache[ix.key]

    def line_samples(self, node, axis, reach=3):
        """(coordinate, value) samples on the mesh line through ``node`` along ``axis``.

        Covers the solute segment containing ``node`` up to ``reach`` nodes
        away, plus the crossings that bound it.
        """
        g, flags, reg = self.reg.grid, self.reg.flags, self.reg
        x = lambda pos: g.origin[axis] + pos * g.spacing[axis]  # noqa: E731
        node = tuple(node)
        samples = [(x(node[axis]), self.values[node])]
        for direction in (-1, 1):
            prev = node
            for m in range(1, reach + 1):
                p = list(node)
                p[axis] += direction * m
                p = tuple(p)
                if not 0 <= p[axis] < g.dims[axis]:
                    break
                if not flags[p]:
                    ix = reg.edge_between(prev, p)
                    samples.append((ix.location[axis], self.boundary_value(ix)))
                    break
                samples.append((x(p[axis]), self.values[p]))
                prev = p
        return samples

    def line_samples_from_crossing(self, ix, reach=3):
        """Samples on the solute side of crossing ``ix``, the crossing included."""
        solute_node = ix.node if self.reg.flags[ix.node] else ix.far_node
        return self.line_samples(solute_node, ix.axis, reach)

    def derivative_at_node(self, node, k) -> float:
        g = self.reg.grid
        x = g.origin[k] + node[k] * g.spacing[k]
        try:
            return _stencil_eval(self.line_samples(node, k, reach=2), x, 1, g.spacing[k])
        except StencilError:
            log.debug("node %s isolated along axis %d; using boundary-data derivative", node, k)
            return self.boundary_derivative(g.node(*node), k)

    def boundary_derivative(self, point, k) -> float:
        """d/dx_k of the Dirichlet data at ``point``.

        Used where a mesh line only grazes the solute: there d/dx_k is
        tangential to the interface, on which the harmonic part equals the data.
        """
        d = 1e-4 * self.reg.grid.spacing[k]
        e = np.zeros(3)
        e[k] = d
        p = np.asarray(point, float)
        vals = self.dirichlet(np.array([p + e, p - e]))
        return float((vals[0] - vals[1]) / (2 * d))

    def gradient_at(self, ix) -> np.ndarray:
        """Gradient of the harmonic correction at crossing ``ix`` (solute-side limit)."""
        g, axis = self.reg.grid, ix.axis
        grad = np.zeros(3)
        xg = ix.location[axis]
        try:
            grad[axis] = _stencil_eval(self.line_samples_from_crossing(ix), xg, 1, g.spacing[axis])
        except StencilError:
            grad[axis] = self.boundary_derivative(ix.location, axis)
        p0 = ix.node if self.reg.flags[ix.node] else ix.far_node
        step = -1 if p0 == ix.node else 1
        p1 = list(p0)
        p1[axis] += step
        p1 = tuple(p1)
        positions = [p0] + ([p1] if self.reg.flags[p1] else [])
        xs = [g.origin[axis] + p[axis] * g.spacing[axis] for p in positions]
        for k in (kk for kk in range(3) if kk != axis):
            ds = [self.derivative_at_node(p, k) for p in positions]
            if len(ds) == 2:
                grad[k] = lagrange(xs, xg) @ ds
            else:
                grad[k] = ds[0]
        return grad

    def extended_value(self, ix, node) -> float:
        """Extrapolate the harmonic correction across crossing ``ix`` to solvent ``node``."""
        g, axis = self.reg.grid, ix.axis
        x = g.origin[axis] + node[axis] * g.spacing[axis]
        return _stencil_eval(self.line_samples_from_crossing(ix), x, 0, g.spacing[axis])


def _stencil_eval(samples, x, order, h, npts=3):
    """Lagrange derivative of ``order`` at ``x`` from up to ``npts`` well-separated samples."""
    ranked = sorted(samples, key=lambda s: (abs(s[0] - x), s[0]))
    chosen = []
    for c, v in ranked:
        if all(abs(c - cc) >= MIN_GAP * h for cc, _ in chosen):
            chosen.append((c, v))
        if len(chosen) == npts:
            break
    if len(chosen) < npts:
        # relax the gap rule before giving up on the stencil width
        for c, v in ranked:
            if len(chosen) == npts:
                break
            if all(abs(c - cc) > 1e-12 * h for cc, _ in chosen):
                chosen.append((c, v))
    if len(chosen) <= order:
        raise StencilError(f"only {len(chosen)} samples for a derivative of order {order}")
    if len(chosen) < npts:
        log.debug("stencil reduced to %d points", len(chosen))
    xs = [c for c, _ in chosen]
    vs = np.array([v for _, v in chosen])
    return float(lagrange(xs, x, order) @ vs)


_FACES = [d for d in np.ndindex(3, 3, 3) if sum(abs(v - 1) for v in d) == 1]
_EDGES = [d for d in np.ndindex(3, 3, 3) if sum(abs(v - 1) for v in d) == 2]


def _compact_rows(A, g, flags, ijk, index, pinned):
    """Swap in the 19-point compact Laplacian where all its nodes are solute.

    For harmonic functions it is fourth-order accurate; rows next to the
    interface keep the Shortley-Weller form.
    """
    dims = np.asarray(g.dims)
    offs = [np.asarray(d) - 1 for d in _FACES + _EDGES]
    ok = ~pinned & np.all((ijk >= 1) & (ijk <= dims - 2), axis=1)
    for o in offs:
        nb = ijk + o
        nb = np.clip(nb, 0, dims - 1)
        ok &= flags[nb[:, 0], nb[:, 1], nb[:, 2]]
    rows = np.flatnonzero(ok)
    if len(rows) == 0:
        return A
    r_list, c_list, v_list = [rows], [rows], [np.full(len(rows), 4.0)]
    for o, w in [(o, -1.0 / 3.0) for o in offs[:6]] + [(o, -1.0 / 6.0) for o in offs[6:]]:
        nb = ijk[rows] + o
        r_list.append(rows)
        c_list.append(index[g.flat(nb[:, 0], nb[:, 1], nb[:, 2])])
        v_list.append(np.full(len(rows), w))
    keep = np.ones(A.shape[0])
    keep[rows] = 0.0
    C = sp.csr_matrix((np.concatenate(v_list), (np.concatenate(r_list), np.concatenate(c_list))), shape=A.shape)
    return (sp.diags(keep) @ A + C).tocsr()


def phi0_system(reg, dirichlet, compact: bool = True):
    """Laplacian on solute nodes with Dirichlet data on the crossings.

    Shortley-Weller rows next to the interface, compact 19-point rows inside.
    """
    g, flags = reg.grid, reg.flags
    sol = np.flatnonzero(flags.ravel())
    if len(sol) == 0:
        raise ModelError("solute region is empty")
    index = -np.ones(g.size, dtype=int)
    index[sol] = np.arange(len(sol))
    n = len(sol)
    h2 = min(g.spacing) ** 2
    # distance to left/right stencil points per solute node and axis
    dl = np.tile(np.asarray(g.spacing), (n, 1))
    dr = dl.copy()
    vl = np.full((n, 3), np.nan)
    vr = np.full((n, 3), np.nan)
    ixs = list(reg.intersections.values())
    if ixs:
        vals = dirichlet(np.array([ix.location for ix in ixs]))
    for ix, val in zip(ixs, vals if ixs else []):
        hax = g.spacing[ix.axis]
        if flags[ix.node]:
            r = index[g.flat(*ix.node)]
            dr[r, ix.axis] = ix.t * hax
            vr[r, ix.axis] = val
        else:
            r = index[g.flat(*ix.far_node)]
            dl[r, ix.axis] = (1.0 - ix.t) * hax
            vl[r, ix.axis] = val
    rows, cols, data = [], [], []
    rhs = np.zeros(n)
    diag = np.zeros(n)
    dims = np.asarray(g.dims)
    ijk = np.stack(np.unravel_index(sol, g.dims), axis=1)
    pinned = np.zeros(n, dtype=bool)
    pin_val = np.zeros(n)
    for axis in range(3):
        hax = g.spacing[axis]
        a, b = dl[:, axis], dr[:, axis]
        for d, v in ((a, vl[:, axis]), (b, vr[:, axis])):
            close = ~np.isnan(v) & (d < ON_BOUNDARY * hax)
            pin_val[close & ~pinned] = v[close & ~pinned]
            pinned |= close
        a = np.maximum(a, ON_BOUNDARY * hax)
        b = np.maximum(b, ON_BOUNDARY * hax)
        wl = 2.0 / (a * (a + b)) * h2
        wr = 2.0 / (b * (a + b)) * h2
        diag += 2.0 / (a * b) * h2
        for w, v, step in ((wl, vl[:, axis], -1), (wr, vr[:, axis], 1)):
            known = ~np.isnan(v)
            rhs[known] += w[known] * v[known]
            nb = ijk[~known].copy()
            nb[:, axis] += step
            if np.any((nb < 0) | (nb >= dims)):
                raise ModelError("solute region touches the grid boundary")
            rows.append(np.flatnonzero(~known))
            cols.append(index[g.flat(nb[:, 0], nb[:, 1], nb[:, 2])])
            data.append(-w[~known])
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    data.append(diag)
    A = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    if compact and np.allclose(g.spacing, g.spacing[0]):
        A = _compact_rows(A, g, flags, ijk, index, pinned)
    if pinned.any():
        keep = sp.diags((~pinned).astype(float))
        A = (keep @ A + sp.diags(pinned.astype(float))).tocsr()
        rhs = np.where(pinned, pin_val, rhs)
    # unit diagonal: near-boundary rows otherwise dominate |b| and the
    # relative residual stops measuring the error
    dinv = 1.0 / A.diagonal()
    A = (sp.diags(dinv) @ A).tocsr()
    rhs = dinv * rhs
    A.eliminate_zeros()
    return SparseSystem(A, rhs), sol


def solve_phi0(reg, model, config: SolverConfig | None = None, dirichlet=None, compact: bool = True) -> Phi0Field:
    """Harmonic function on the solute nodes equal to -Coulomb on the interface."""
    if dirichlet is None:
        dirichlet = lambda pts: -coulomb_potential(model, pts)  # noqa: E731
    system, sol = phi0_system(reg, dirichlet, compact)
    x, diag = solve(system, config or SolverConfig())
    values = np.full(reg.grid.dims, np.nan)
    values.ravel()[sol] = x
    return Phi0Field(reg, values, dirichlet, diag)


@dataclass
class Decomposition:
    model: object
    phi0: Phi0Field
    jumps: dict

    def coulomb(self, points):
        return coulomb_potential(self.model, points)


def jump_rhs(model, phi0: Phi0Field, ix) -> float:
    """Flux jump of the regular part: eps_m * grad(Coulomb + harmonic) . n."""
    p = np.asarray(ix.location).reshape(1, 3)
    n = np.asarray(ix.normal)
    grad = coulomb_gradient(model, p)[0] + phi0.gradient_at(ix)
    return float(model.dielectric.eps_solute * grad @ n)


def decompose(reg, model, config: SolverConfig | None = None) -> Decomposition:
    phi0 = solve_phi0(reg, model, config)
    if not np.any(model.charges):
        jumps = {k: 0.0 for k in reg.intersections}
    else:
        jumps = {k: jump_rhs(model, phi0, ix) for k, ix in reg.intersections.items()}
    return Decomposition(model, phi0, jumps)

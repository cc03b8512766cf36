"""Uniform Cartesian mesh and domain registration (node flags, edge intersections)."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ModelError, RegistrationError

log = logging.getLogger(__name__)

AXIS_NAMES = "xyz"
ON_SURFACE_TOL = 1e-9


@dataclass(frozen=True)
class CartesianGrid:
    origin: tuple[float, float, float]
    spacing: tuple[float, float, float]
    dims: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "spacing", tuple(float(v) for v in self.spacing))
        object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))
        if any(not s > 0 for s in self.spacing):
            raise ConfigError(f"grid spacing must be positive, got {self.spacing}")
        if any(n < 4 for n in self.dims):
            raise ConfigError(f"grid needs at least 4 nodes per axis, got {self.dims}")

    @property
    def h(self) -> float:
        """Spacing of an isotropic grid (first component otherwise)."""
        return self.spacing[0]

    @property
    def size(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    @property
    def upper(self) -> tuple[float, float, float]:
        return tuple(o + (n - 1) * d for o, n, d in zip(self.origin, self.dims, self.spacing))

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing[axis] * np.arange(self.dims[axis])

    def node(self, i: int, j: int, k: int) -> np.ndarray:
        o, d = self.origin, self.spacing
        return np.array([o[0] + i * d[0], o[1] + j * d[1], o[2] + k * d[2]])

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (nx, ny, nz, 3)."""
        x, y, z = (self.axis_coords(a) for a in range(3))
        return np.stack(np.meshgrid(x, y, z, indexing="ij"), axis=-1)

    def flat(self, i, j, k):
        ny, nz = self.dims[1], self.dims[2]
        return (np.asarray(i) * ny + np.asarray(j)) * nz + np.asarray(k)

    def unflat(self, idx):
        return np.unravel_index(idx, self.dims)

    def contains(self, ijk) -> bool:
        return all(0 <= c < n for c, n in zip(ijk, self.dims))

    def is_boundary(self, ijk) -> bool:
        return any(c == 0 or c == n - 1 for c, n in zip(ijk, self.dims))

    def boundary_mask(self) -> np.ndarray:
        m = np.zeros(self.dims, dtype=bool)
        m[0, :, :] = m[-1, :, :] = True
        m[:, 0, :] = m[:, -1, :] = True
        m[:, :, 0] = m[:, :, -1] = True
        return m

    def shifted(self, delta) -> "CartesianGrid":
        return CartesianGrid(tuple(o + d for o, d in zip(self.origin, delta)), self.spacing, self.dims)


def build_grid(model, spacing: float, padding: float, bounds=None) -> CartesianGrid:
    """Centered grid covering the atom spheres (and ``bounds``) plus ``padding``.

    ``bounds`` is an optional ``(lo, hi)`` pair of 3-vectors, e.g. the box of
    an explicit interface that is larger than the atom spheres.
    """
    if not spacing > 0:
        raise ConfigError(f"grid spacing must be positive, got {spacing}")
    rmax = float(model.radii.max())
    if padding < rmax + 2 * spacing - 1e-12:
        raise ConfigError(f"padding {padding} < largest radius + 2*spacing = {rmax + 2 * spacing}")
    c, r = model.centers, model.radii[:, None]
    lo, hi = (c - r).min(axis=0), (c + r).max(axis=0)
    if bounds is not None:
        lo = np.minimum(lo, np.asarray(bounds[0], float))
        hi = np.maximum(hi, np.asarray(bounds[1], float))
    lo, hi = lo - padding, hi + padding
    mid = 0.5 * (lo + hi)
    dims = [int(math.ceil((b - a) / spacing - 1e-9)) + 1 for a, b in zip(lo, hi)]
    origin = [m - 0.5 * (n - 1) * spacing for m, n in zip(mid, dims)]
    grid = CartesianGrid(tuple(origin), (spacing,) * 3, tuple(dims))
    # keep atom centers off the nodes so the Coulomb term is finite everywhere
    idx = np.rint((c - np.asarray(grid.origin)) / spacing)
    if np.any(np.all(np.abs(c - (np.asarray(grid.origin) + idx * spacing)) < 1e-9, axis=1)):
        grid = grid.shifted((spacing * 1e-6,) * 3)
    return grid


@dataclass(frozen=True)
class EdgeIntersection:
    """Interface crossing on the edge from ``node`` to ``node + e_axis``."""

    node: tuple[int, int, int]
    axis: int
    t: float
    location: tuple[float, float, float]
    normal: tuple[float, float, float]

    @property
    def key(self):
        return (self.axis, *self.node)

    @property
    def far_node(self):
        n = list(self.node)
        n[self.axis] += 1
        return tuple(n)


@dataclass
class DomainRegistration:
    grid: CartesianGrid
    flags: np.ndarray  # True = solute
    intersections: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.flags = np.asarray(self.flags, dtype=bool)
        if self.flags.shape != self.grid.dims:
            raise RegistrationError(f"flag array shape {self.flags.shape} != grid dims {self.grid.dims}")
        self.irregular = irregular_mask(self.flags)

    def intersection(self, axis, i, j, k):
        return self.intersections.get((axis, i, j, k))

    def edge_between(self, a, b):
        """Intersection on the edge joining adjacent nodes ``a`` and ``b``."""
        d = [bb - aa for aa, bb in zip(a, b)]
        axis = next(ax for ax in range(3) if d[ax] != 0)
        lo = a if d[axis] > 0 else b
        return self.intersections.get((axis, *lo))

    @property
    def solute_count(self) -> int:
        return int(self.flags.sum())

    def validate(self) -> None:
        """Cross-check flags, intersections and the irregular set."""
        f = self.flags
        expected = set()
        for axis in range(3):
            a = np.take(f, range(f.shape[axis] - 1), axis=axis)
            b = np.take(f, range(1, f.shape[axis]), axis=axis)
            for ijk in zip(*np.nonzero(a != b)):
                expected.add((axis, *map(int, ijk)))
        stored = set(self.intersections)
        if expected != stored:
            missing, extra = expected - stored, stored - expected
            raise RegistrationError(
                f"flag/intersection mismatch: {len(missing)} sign-change edges without a crossing "
                f"(e.g. {sorted(missing)[:3]}), {len(extra)} crossings on same-flag edges (e.g. {sorted(extra)[:3]})")
        irr = np.zeros_like(f)
        for axis, i, j, k in stored:
            irr[i, j, k] = True
            n = [i, j, k]
            n[axis] += 1
            irr[tuple(n)] = True
        if not np.array_equal(irr, self.irregular):
            raise RegistrationError("irregular set disagrees with intersection incidence")
        for ix in self.intersections.values():
            if abs(np.linalg.norm(ix.normal) - 1.0) > 1e-9:
                raise RegistrationError(f"non-unit normal at edge {ix.key}")
            if not -1e-12 <= ix.t <= 1 + 1e-12:
                raise RegistrationError(f"crossing parameter {ix.t} off edge {ix.key}")


def irregular_mask(flags: np.ndarray) -> np.ndarray:
    """Nodes whose 7-point stencil touches the other domain."""
    irr = np.zeros_like(flags, dtype=bool)
    for axis in range(3):
        n = flags.shape[axis]
        a = np.take(flags, range(n - 1), axis=axis)
        b = np.take(flags, range(1, n), axis=axis)
        d = a != b
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(0, n - 1)
        hi[axis] = slice(1, n)
        irr[tuple(lo)] |= d
        irr[tuple(hi)] |= d
    return irr


def register_domain(grid: CartesianGrid, surface, model=None) -> DomainRegistration:
    """Flag every node, locate every crossing, and check consistency."""
    flags, intersections, warnings = surface.register(grid)
    reg = DomainRegistration(grid, flags, intersections, list(warnings))
    if not reg.flags.any():
        raise RegistrationError("no solute nodes: interface is not enclosed by the grid or is sub-grid")
    if (reg.flags & grid.boundary_mask()).any():
        raise RegistrationError("interface touches the grid boundary; increase padding")
    reg.validate()
    if model is not None:
        inside = surface.classify_points(model.centers)
        bad = [i for i, ok in enumerate(inside) if not ok and model.atoms[i].charge != 0.0]
        if bad:
            raise ModelError(f"charged atom(s) {bad} lie outside the solute domain")
    for w in reg.warnings:
        log.warning(w)
    return reg


def export_eulerian(reg: DomainRegistration) -> str:
    g = reg.grid
    if len(set(g.spacing)) != 1:
        raise ConfigError("Eulerian format stores one spacing; grid is anisotropic")
    nx, ny, nz = g.dims
    out = [f"EULER {nx} {ny} {nz} {g.h!r} {g.origin[0]!r} {g.origin[1]!r} {g.origin[2]!r}"]
    f = reg.flags.astype(int)
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                out.append(f"{i} {j} {k} {f[i, j, k]}")
    for key in sorted(reg.intersections):
        ix = reg.intersections[key]
        i, j, k = ix.node
        n = ix.normal
        out.append(f"{i} {j} {k} {AXIS_NAMES[ix.axis]} {ix.t!r} {n[0]!r} {n[1]!r} {n[2]!r}")
    return "\n".join(out) + "\n"

"""Interface representations.

Every surface answers two questions on a grid: which nodes are solute, and
where the interface crosses each mesh edge (with the outward unit normal).
"""
from __future__ import annotations

import enum
import logging
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError, GeometryError, TopologyError
from .grid import AXIS_NAMES, ON_SURFACE_TOL, CartesianGrid, EdgeIntersection

log = logging.getLogger(__name__)


class Domain(str, enum.Enum):
    SOLUTE = "solute"
    SOLVENT = "solvent"


def classify(surface, point) -> Domain:
    p = np.asarray(point, dtype=float).reshape(1, 3)
    if not np.all(np.isfinite(p)):
        raise GeometryError(f"cannot classify non-finite point {point!r}")
    return Domain.SOLUTE if surface.classify_points(p)[0] else Domain.SOLVENT


def edge_intersections(surface, grid: CartesianGrid) -> list[EdgeIntersection]:
    _, ixs, _ = surface.register(grid)
    return [ixs[k] for k in sorted(ixs)]


def _make_intersection(grid, node, axis, t, location, normal):
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    return EdgeIntersection(tuple(int(v) for v in node), int(axis), float(t),
                            tuple(float(v) for v in location), tuple(float(v) for v in n))


def _sign_change_edges(flags):
    for axis in range(3):
        n = flags.shape[axis]
        a = np.take(flags, range(n - 1), axis=axis)
        b = np.take(flags, range(1, n), axis=axis)
        for ijk in zip(*np.nonzero(a != b)):
            yield axis, tuple(int(v) for v in ijk)


class _ExactSurface:
    """Surfaces with a pointwise inside test and an exact per-edge crossing."""

    def register(self, grid: CartesianGrid):
        flags = self.classify_points(grid.nodes().reshape(-1, 3)).reshape(grid.dims)
        ixs, warnings = {}, []
        for axis, node in _sign_change_edges(flags):
            p0 = grid.node(*node)
            far = list(node)
            far[axis] += 1
            p1 = grid.node(*far)
            solute_low = bool(flags[node])
            a, b = (p0, p1) if solute_low else (p1, p0)
            s, normal, count = self.exit_point(a, b)
            if s is None:
                raise GeometryError(f"no crossing found on sign-change edge {AXIS_NAMES[axis]}{node}")
            if count > 1:
                warnings.append(f"sub-grid feature: {count} crossings on edge {AXIS_NAMES[axis]}{node}; kept the one nearest the solute node")
            t = s if solute_low else 1.0 - s
            loc = a + s * (b - a)
            ixs[(axis, *node)] = _make_intersection(grid, node, axis, min(max(t, 0.0), 1.0), loc, normal)
        return flags, ixs, warnings


class SphereSurface(_ExactSurface):
    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if not self.radius > 0:
            raise GeometryError("sphere radius must be positive")

    @property
    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def classify_points(self, points):
        d = np.linalg.norm(np.asarray(points, float).reshape(-1, 3) - self.center, axis=1)
        return d < self.radius + ON_SURFACE_TOL

    def exit_point(self, a, b):
        s = _sphere_exit(a, b, self.center, self.radius)
        if s is None:
            return None, None, 0
        x = a + s * (b - a)
        return s, (x - self.center) / self.radius, 1


def _sphere_exit(a, b, c, r):
    """Largest root in [0, 1] of |a + s(b - a) - c| = r, or None."""
    d = b - a
    f = a - c
    A = d @ d
    B = 2.0 * (f @ d)
    C = f @ f - r * r
    disc = B * B - 4 * A * C
    # a start node classified inside by the on-surface tolerance exits at s = 0
    on_surface = abs(np.sqrt(f @ f) - r) <= ON_SURFACE_TOL
    if disc < 0:
        return 0.0 if on_surface else None
    sq = np.sqrt(disc)
    s = (-B + sq) / (2 * A)
    if -1e-12 <= s <= 1 + 1e-12:
        return min(max(s, 0.0), 1.0)
    return 0.0 if on_surface and s < 0 else None


def _sphere_entry(a, b, c, r):
    d = b - a
    f = a - c
    A = d @ d
    B = 2.0 * (f @ d)
    C = f @ f - r * r
    disc = B * B - 4 * A * C
    if disc < 0:
        return None
    s = (-B - np.sqrt(disc)) / (2 * A)
    return s if 0.0 <= s <= 1.0 else None


class UnionOfSpheres(_ExactSurface):
    """Van der Waals style surface: union of atom spheres."""

    def __init__(self, centers, radii):
        self.centers = np.asarray(centers, dtype=float).reshape(-1, 3)
        self.radii = np.asarray(radii, dtype=float).reshape(-1)
        if len(self.centers) != len(self.radii) or len(self.radii) == 0:
            raise GeometryError("union of spheres needs matching, non-empty centers and radii")
        if np.any(self.radii <= 0):
            raise GeometryError("sphere radii must be positive")

    @classmethod
    def from_model(cls, model, probe_scale: float = 1.0):
        return cls(model.centers, model.radii * probe_scale)

    @property
    def bounds(self):
        r = self.radii[:, None]
        return (self.centers - r).min(axis=0), (self.centers + r).max(axis=0)

    def classify_points(self, points):
        p = np.asarray(points, float).reshape(-1, 3)
        inside = np.zeros(len(p), dtype=bool)
        for c, r in zip(self.centers, self.radii):
            inside |= np.einsum("ij,ij->i", p - c, p - c) < (r + ON_SURFACE_TOL) ** 2
        return inside

    def exit_point(self, a, b):
        """First point leaving the union when walking from ``a`` (inside) to ``b``."""
        exits = self._boundary_points(a, b, _sphere_exit)
        if not exits:
            return None, None, 0
        entries = self._boundary_points(a, b, _sphere_entry)
        s, idx = exits[0]
        x = a + s * (b - a)
        return s, (x - self.centers[idx]) / self.radii[idx], len(exits) + len(entries)

    def _boundary_points(self, a, b, root):
        found = []
        for idx, (c, r) in enumerate(zip(self.centers, self.radii)):
            s = root(a, b, c, r)
            if s is None:
                continue
            x = a + s * (b - a)
            d2 = np.einsum("ij,ij->i", self.centers - x, self.centers - x)
            inner = d2 < (self.radii - 1e-10) ** 2
            inner[idx] = False
            if not inner.any():
                found.append((s, idx))
        found.sort()
        return found


class TriangulatedSurface:
    """Closed triangle mesh embedded by axis-aligned ray casting (parity rule)."""

    JITTER = 1e-7  # in units of grid spacing
    DEGENERATE = 1e-12

    def __init__(self, vertices, triangles, vertex_normals=None):
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(triangles, dtype=int).reshape(-1, 3)
        self._check_closed()
        if self._signed_volume() < 0:
            self.triangles = self.triangles[:, ::-1].copy()
        if vertex_normals is None:
            vertex_normals = self._area_weighted_normals()
        vn = np.asarray(vertex_normals, dtype=float).reshape(-1, 3)
        self.vertex_normals = vn / np.linalg.norm(vn, axis=1, keepdims=True)

    def _check_closed(self):
        edges = {}
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                edges[key] = edges.get(key, 0) + 1
        bad = [e for e, n in edges.items() if n != 2]
        if bad:
            raise TopologyError(f"mesh is not closed: {len(bad)} edges not shared by exactly two triangles (e.g. {bad[0]})")

    def _signed_volume(self):
        v = self.vertices[self.triangles]
        return np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2])).sum() / 6.0

    def _area_weighted_normals(self):
        v = self.vertices[self.triangles]
        fn = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        vn = np.zeros_like(self.vertices)
        for c in range(3):
            np.add.at(vn, self.triangles[:, c], fn)
        return vn

    @property
    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def _line_hits(self, axis, p, q):
        """Crossings of the axis-parallel line through (p, q) in the other two coords.

        Returns (coords along axis, triangle ids, barycentrics, degenerate flag).
        """
        u, w = [a for a in range(3) if a != axis]
        V = self.vertices[self.triangles]
        A, B, C = V[:, 0], V[:, 1], V[:, 2]
        # 2-D barycentrics in the (u, w) projection
        det = (B[:, u] - A[:, u]) * (C[:, w] - A[:, w]) - (C[:, u] - A[:, u]) * (B[:, w] - A[:, w])
        ok = np.abs(det) > 1e-300
        det_safe = np.where(ok, det, 1.0)
        l1 = ((p - A[:, u]) * (C[:, w] - A[:, w]) - (C[:, u] - A[:, u]) * (q - A[:, w])) / det_safe
        l2 = ((B[:, u] - A[:, u]) * (q - A[:, w]) - (p - A[:, u]) * (B[:, w] - A[:, w])) / det_safe
        l0 = 1.0 - l1 - l2
        bary = np.stack([l0, l1, l2], axis=1)
        tol = self.DEGENERATE
        hit = ok & (bary >= -tol).all(axis=1)
        degenerate = bool((hit & (np.abs(bary) <= tol).any(axis=1)).any())
        ids = np.nonzero(hit & (bary > tol).all(axis=1))[0]
        b = bary[ids]
        coord = (b[:, :, None] * V[ids]).sum(axis=1)[:, axis]
        order = np.argsort(coord, kind="stable")
        return coord[order], ids[order], b[order], degenerate

    def _robust_hits(self, axis, p, q, scale):
        coord, ids, bary, degenerate = self._line_hits(axis, p, q)
        step = 0
        while degenerate:
            step += 1
            if step > 8:
                raise GeometryError("ray casting stays degenerate after jitter")
            dp, dq = self.JITTER * scale * step, self.JITTER * scale * step * 0.618
            coord, ids, bary, degenerate = self._line_hits(axis, p + dp, q + dq)
        return coord, ids, bary

    def classify_points(self, points):
        pts = np.asarray(points, float).reshape(-1, 3)
        out = np.empty(len(pts), dtype=bool)
        scale = float(np.ptp(self.vertices, axis=0).max()) or 1.0
        for n, x in enumerate(pts):
            coord, _, _ = self._robust_hits(0, x[1], x[2], scale)
            if np.any(np.abs(coord - x[0]) <= ON_SURFACE_TOL):
                out[n] = True
            else:
                out[n] = np.count_nonzero(coord > x[0]) % 2 == 1
        return out

    def _normal_at(self, tri_id, bary):
        n = bary @ self.vertex_normals[self.triangles[tri_id]]
        return n / np.linalg.norm(n)

    def register(self, grid: CartesianGrid):
        dims = grid.dims
        coords = [grid.axis_coords(a) for a in range(3)]
        per_axis_flags = []
        hits = []
        for axis in range(3):
            u, w = [a for a in range(3) if a != axis]
            f = np.zeros(dims, dtype=bool)
            line_hits = {}
            for iu, pu in enumerate(coords[u]):
                for iw, pw in enumerate(coords[w]):
                    c, ids, bary = self._robust_hits(axis, pu, pw, grid.spacing[axis])
                    if len(c) == 0:
                        continue
                    xs = coords[axis]
                    near = np.abs(xs[:, None] - c[None, :]) <= ON_SURFACE_TOL
                    right = (c[None, :] > xs[:, None]).sum(axis=1)
                    inside = (right % 2 == 1) | near.any(axis=1)
                    idx = [0, 0, 0]
                    idx[u], idx[w] = iu, iw
                    sl = list(idx)
                    sl[axis] = slice(None)
                    f[tuple(sl)] = inside
                    line_hits[(iu, iw)] = (c, ids, bary)
            per_axis_flags.append(f)
            hits.append(line_hits)
        flags = per_axis_flags[0]
        warnings = []
        for axis in (1, 2):
            if not np.array_equal(per_axis_flags[axis], flags):
                n_bad = int((per_axis_flags[axis] != flags).sum())
                raise GeometryError(f"ray parity disagrees between x and {AXIS_NAMES[axis]} rays at {n_bad} nodes")
        ixs = {}
        for axis, node in _sign_change_edges(flags):
            u, w = [a for a in range(3) if a != axis]
            c, ids, bary = hits[axis][(node[u], node[w])]
            x0 = coords[axis][node[axis]]
            x1 = coords[axis][node[axis] + 1]
            sel = np.nonzero((c >= x0 - ON_SURFACE_TOL) & (c <= x1 + ON_SURFACE_TOL))[0]
            if len(sel) == 0:
                raise GeometryError(f"no crossing found on sign-change edge {AXIS_NAMES[axis]}{node}")
            if len(sel) > 1:
                warnings.append(f"sub-grid feature: {len(sel)} crossings on edge {AXIS_NAMES[axis]}{node}; kept the one nearest the solute node")
            solute_low = bool(flags[node])
            pick = sel[0] if solute_low else sel[-1]
            t = min(max((c[pick] - x0) / (x1 - x0), 0.0), 1.0)
            loc = grid.node(*node)
            loc[axis] = x0 + t * (x1 - x0)
            normal = self._normal_at(ids[pick], bary[pick])
            ixs[(axis, *node)] = _make_intersection(grid, node, axis, t, loc, normal)
        return flags, ixs, warnings


def icosphere(radius: float = 1.0, subdivisions: int = 2, center=(0.0, 0.0, 0.0)):
    """Vertices and outward-oriented triangles of a subdivided icosahedron."""
    t = (1.0 + 5 ** 0.5) / 2.0
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
             (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    v = np.array(verts) * radius + np.asarray(center, float)
    return v, np.array(faces, dtype=int)


def read_off(path) -> TriangulatedSurface:
    """Read an OFF-style mesh; vertex lines may carry a normal as three extra columns."""
    tokens_lines = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            tokens_lines.append(line.split())
    if tokens_lines and tokens_lines[0][0].upper() in ("OFF", "NOFF"):
        tokens_lines = tokens_lines[1:]
    try:
        nv, nt = int(tokens_lines[0][0]), int(tokens_lines[0][1])
        vlines = tokens_lines[1:1 + nv]
        tlines = tokens_lines[1 + nv:1 + nv + nt]
        verts = np.array([[float(x) for x in v[:3]] for v in vlines])
        normals = None
        if vlines and all(len(v) >= 6 for v in vlines):
            normals = np.array([[float(x) for x in v[3:6]] for v in vlines])
        tris = np.array([[int(x) for x in (t[1:4] if len(t) >= 4 else t[:3])] for t in tlines])
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: malformed OFF mesh ({exc})") from None
    if len(verts) != nv or len(tris) != nt:
        raise FormatError(f"{path}: expected {nv} vertices and {nt} triangles")
    return TriangulatedSurface(verts, tris, normals)


def write_off(path, vertices, triangles, normals=None) -> None:
    lines = ["OFF", f"{len(vertices)} {len(triangles)} 0"]
    for n, v in enumerate(vertices):
        extra = "" if normals is None else " " + " ".join(repr(float(x)) for x in normals[n])
        lines.append(" ".join(repr(float(x)) for x in v) + extra)
    lines += [f"3 {a} {b} {c}" for a, b, c in triangles]
    Path(path).write_text("\n".join(lines) + "\n")


class EulerianSurface:
    """Interface given directly as node flags plus edge crossings on a fixed grid."""

    def __init__(self, grid: CartesianGrid, flags, intersections):
        self.grid = grid
        self.flags = np.asarray(flags, dtype=bool)
        self.intersections = dict(intersections)

    @property
    def bounds(self):
        return np.asarray(self.grid.origin), np.asarray(self.grid.upper)

    def register(self, grid: CartesianGrid):
        _check_same_grid(self.grid, grid)
        return self.flags.copy(), dict(self.intersections), []

    def classify_points(self, points):
        """Nearest-node lookup; exact for grid nodes."""
        p = np.asarray(points, float).reshape(-1, 3)
        idx = np.rint((p - np.asarray(self.grid.origin)) / np.asarray(self.grid.spacing)).astype(int)
        idx = np.clip(idx, 0, np.asarray(self.grid.dims) - 1)
        return self.flags[idx[:, 0], idx[:, 1], idx[:, 2]]


def _check_same_grid(a: CartesianGrid, b: CartesianGrid):
    if a.dims != b.dims:
        raise DimensionError(f"Eulerian grid dims {a.dims} != run grid dims {b.dims}")
    if any(abs(x - y) > 1e-9 * max(1.0, abs(y)) for x, y in zip(a.spacing, b.spacing)):
        raise DimensionError(f"Eulerian spacing {a.spacing} != run spacing {b.spacing}")
    if any(abs(x - y) > 1e-9 * max(1.0, abs(y)) for x, y in zip(a.origin, b.origin)):
        raise DimensionError(f"Eulerian origin {a.origin} != run origin {b.origin}")


def parse_eulerian(text: str, source: str = "<string>"):
    """Parse the Eulerian text format into (grid, flags, intersections)."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise FormatError(f"{source}: empty Eulerian file")
    head = lines[0].split()
    if len(head) != 8 or head[0] != "EULER":
        raise FormatError(f"{source}: header must be 'EULER nx ny nz h x0 y0 z0'")
    try:
        dims = tuple(int(v) for v in head[1:4])
        h = float(head[4])
        origin = tuple(float(v) for v in head[5:8])
    except ValueError:
        raise FormatError(f"{source}: bad header values") from None
    grid = CartesianGrid(origin, (h, h, h), dims)
    flags = np.zeros(dims, dtype=bool)
    seen = np.zeros(dims, dtype=bool)
    ixs = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        try:
            if len(parts) == 4:
                i, j, k, f = (int(v) for v in parts)
                if not grid.contains((i, j, k)):
                    raise DimensionError(f"{source}:{lineno}: node ({i},{j},{k}) outside {dims}")
                flags[i, j, k] = bool(f)
                seen[i, j, k] = True
            elif len(parts) == 8:
                i, j, k = (int(v) for v in parts[:3])
                ax = parts[3]
                axis = AXIS_NAMES.index(ax) if ax in AXIS_NAMES else int(ax)
                t = float(parts[4])
                n = np.array([float(v) for v in parts[5:8]])
                far = [i, j, k]
                far[axis] += 1
                if not (grid.contains((i, j, k)) and grid.contains(far)):
                    raise DimensionError(f"{source}:{lineno}: edge off the grid")
                norm = np.linalg.norm(n)
                if abs(norm - 1.0) > 1e-6:
                    raise FormatError(f"{source}:{lineno}: normal has length {norm}")
                if abs(norm - 1.0) > 1e-12:
                    n = n / norm
                if not 0.0 <= t <= 1.0:
                    raise FormatError(f"{source}:{lineno}: edge parameter {t} outside [0, 1]")
                loc = grid.node(i, j, k)
                loc[axis] += t * grid.spacing[axis]
                ixs[(axis, i, j, k)] = EdgeIntersection((i, j, k), axis, t, tuple(float(v) for v in loc),
                                                        tuple(float(v) for v in n))
            else:
                raise FormatError(f"{source}:{lineno}: expected 4 or 8 fields")
        except ValueError:
            raise FormatError(f"{source}:{lineno}: malformed line {line!r}") from None
    if not seen.all():
        raise DimensionError(f"{source}: {int((~seen).sum())} of {seen.size} nodes missing")
    return grid, flags, ixs


def import_eulerian(path, grid: CartesianGrid):
    """Load flags and crossings from ``path``; the header must match ``grid``."""
    text = Path(path).read_text()
    fgrid, flags, ixs = parse_eulerian(text, str(path))
    _check_same_grid(fgrid, grid)
    return flags, ixs


def surface_from_config(spec: dict, model=None):
    """Build a surface from a config ``surface`` dict."""
    kind = spec.get("type")
    if kind == "sphere":
        return SphereSurface(spec.get("center", (0.0, 0.0, 0.0)), spec["radius"])
    if kind == "union_of_spheres":
        if "centers" in spec:
            return UnionOfSpheres(spec["centers"], spec["radii"])
        if model is None:
            raise GeometryError("union_of_spheres without centers needs a model")
        return UnionOfSpheres.from_model(model, spec.get("radius_scale", 1.0))
    if kind == "mesh":
        return read_off(spec["path"])
    if kind == "eulerian_file":
        grid, flags, ixs = parse_eulerian(Path(spec["path"]).read_text(), spec["path"])
        return EulerianSurface(grid, flags, ixs)
    raise GeometryError(f"unknown surface type {kind!r}")

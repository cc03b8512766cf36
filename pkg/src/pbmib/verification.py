"""Manufactured interface problems with closed-form solutions.

Inside a sphere of radius R the field is a harmonic polynomial p; outside it
is the Kelvin image (R/r)^(2l+1) p, which is harmonic, decays, and matches p
on the sphere.  The flux jump follows analytically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CartesianGrid, register_domain
from .mib import assemble
from .model import DielectricModel
from .solver import SolverConfig, solve
from .surface import SphereSurface

# degree-2 harmonic: p = x*y + 0.5*(y^2 - z^2) + 0.3*x*z
DEGREE = 2


def harmonic(p):
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return x * y + 0.5 * (y * y - z * z) + 0.3 * x * z


def harmonic_grad(p):
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return np.stack([y + 0.3 * z, x + y, -z + 0.3 * x], axis=-1)


@dataclass
class SphereProblem:
    radius: float = 2.0
    center: tuple = (0.0, 0.0, 0.0)
    eps_in: float = 1.0
    eps_out: float = 80.0
    scale_in: float = 1.0  # interior field = scale_in * p; a nonzero value jump is not allowed

    def _rel(self, p):
        return np.asarray(p, float) - np.asarray(self.center)

    def inside(self, p):
        return harmonic(self._rel(p))

    def outside(self, p):
        q = self._rel(p)
        r = np.linalg.norm(q, axis=-1)
        return (self.radius / r) ** (2 * DEGREE + 1) * harmonic(q)

    def outside_grad(self, p):
        q = self._rel(p)
        r = np.linalg.norm(q, axis=-1)[..., None]
        f = (self.radius / r) ** (2 * DEGREE + 1)
        dfdr = -(2 * DEGREE + 1) * f / r
        return f * harmonic_grad(q) + dfdr * (q / r) * harmonic(q)[..., None]

    def exact(self, points, solute):
        return np.where(solute, self.inside(points), self.outside(points))

    def jump(self, point, normal):
        p = np.asarray(point, float)
        n = np.asarray(normal, float)
        return float(self.eps_out * self.outside_grad(p) @ n - self.eps_in * harmonic_grad(self._rel(p)) @ n)


def sphere_grid(h, radius=2.0, padding=1.5, offset=(0.0137, 0.0291, 0.0411)):
    """Cube grid around the sphere; the small offset avoids symmetric node placement."""
    half = radius + padding
    n = int(np.ceil(2 * half / h)) + 1
    origin = tuple(-0.5 * (n - 1) * h + o for o in offset)
    return CartesianGrid(origin, (h, h, h), (n, n, n))


def solve_manufactured(problem: SphereProblem, h: float, solver: SolverConfig | None = None):
    """Solve the interface problem on a grid of spacing ``h``; returns (max error, registration, u)."""
    grid = sphere_grid(h, problem.radius)
    reg = register_domain(grid, SphereSurface(problem.center, problem.radius))
    jumps = {k: problem.jump(ix.location, ix.normal) for k, ix in reg.intersections.items()}
    pts = grid.nodes().reshape(-1, 3)
    exact = problem.exact(pts, reg.flags.ravel())
    diel = DielectricModel(problem.eps_in, problem.eps_out, 0.0)
    system = assemble(reg, diel, jumps, exact)
    u, _ = solve(system, solver or SolverConfig(rel_tolerance=1e-11))
    return float(np.abs(u - exact).max()), reg, u


def convergence_order(hs, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])

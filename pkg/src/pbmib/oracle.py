"""Closed-form reaction-field energies for dielectric spheres (Born, Kirkwood)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .model import COULOMB_KCAL


def born_energy(Q: float, R: float, eps_in: float, eps_out: float,
                coulomb: float = COULOMB_KCAL) -> float:
    """Solvation energy (kcal/mol) of charge ``Q`` at the center of a sphere of radius ``R``."""
    if not R > 0 or not (eps_in > 0 and eps_out > 0):
        raise ModelError("born_energy needs R > 0 and positive dielectrics")
    return -coulomb * Q * Q / (2.0 * R) * (1.0 / eps_in - 1.0 / eps_out)


@dataclass(frozen=True)
class KirkwoodConfig:
    radius: float
    positions: tuple
    charges: tuple
    eps_in: float = 1.0
    eps_out: float = 80.0
    series_terms: int = 1

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.shape[1] != 3 or len(pos) != len(self.charges):
            raise ModelError("positions must be (n, 3) and match charges")
        if self.series_terms < 1:
            raise ModelError("series_terms must be >= 1")
        if np.any(np.linalg.norm(pos, axis=1) >= self.radius):
            raise ModelError("Kirkwood series diverges: a charge lies on or outside the sphere")


def legendre_values(n_max: int, x: np.ndarray) -> np.ndarray:
    """P_0..P_{n_max} at ``x`` by the three-term recurrence; shape (n_max+1, *x.shape)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = x
    for n in range(2, n_max + 1):
        out[n] = ((2 * n - 1) * x * out[n - 1] - (n - 1) * out[n - 2]) / n
    return out


def kirkwood_partial_sum(cfg: KirkwoodConfig, n_terms: int, coulomb: float) -> float:
    pos = np.asarray(cfg.positions, dtype=float).reshape(-1, 3)
    q = np.asarray(cfg.charges, dtype=float)
    r = np.linalg.norm(pos, axis=1)
    rr = np.outer(r, r)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosg = (pos @ pos.T) / rr
    cosg = np.where(rr > 0, np.clip(cosg, -1.0, 1.0), 1.0)
    P = legendre_values(n_terms - 1, cosg)
    qq = np.outer(q, q)
    ei, eo, R = cfg.eps_in, cfg.eps_out, cfg.radius
    total = 0.0
    for n in range(n_terms):
        coef = (n + 1) * (ei - eo) / (ei * ((n + 1) * eo + n * ei))
        total += coef / R ** (2 * n + 1) * np.sum(qq * rr ** n * P[n])
    return 0.5 * coulomb * total


def kirkwood_terms_needed(cfg: KirkwoodConfig, tol: float, coulomb: float = COULOMB_KCAL) -> int:
    """Smallest N whose geometric tail bound is below ``tol``.

    |coef_n| <= |eps_in - eps_out| / (eps_in * eps_out) and |P_n| <= 1, so the
    n-th term is bounded by C * rho**n with rho = (r_max / R)**2.
    """
    pos = np.asarray(cfg.positions, dtype=float).reshape(-1, 3)
    q = np.abs(np.asarray(cfg.charges, dtype=float))
    rho = (np.linalg.norm(pos, axis=1).max() / cfg.radius) ** 2
    C = 0.5 * coulomb * q.sum() ** 2 * abs(cfg.eps_in - cfg.eps_out) / (cfg.eps_in * cfg.eps_out * cfg.radius)
    if C == 0.0 or rho == 0.0:
        return 1
    n = int(np.ceil(np.log(tol * (1.0 - rho) / C) / np.log(rho)))
    return max(1, n)


def kirkwood_energy(cfg: KirkwoodConfig, tol: float = 1e-7,
                    coulomb: float = COULOMB_KCAL, max_terms: int = 100000) -> float:
    """Reaction-field energy (kcal/mol) of point charges inside a dielectric sphere.

    Uses the Legendre expansion of the reaction potential, truncated where the
    tail bound drops below ``tol``.
    """
    n = max(cfg.series_terms, kirkwood_terms_needed(cfg, tol, coulomb))
    if n > max_terms:
        raise ModelError(f"Kirkwood series needs {n} terms; charges too close to the boundary")
    return kirkwood_partial_sum(cfg, n, coulomb)


# Charge sets for the five multi-charge benchmark spheres (R = 2 A).
KIRKWOOD_CASES = {
    1: ([(1, 0, 0), (-1, 0, 0)], [1, 1]),
    2: ([(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)], [1, 1, -1, -1]),
    3: ([(1.2, 0, 0), (-1.2, 0, 0), (0, 1.2, 0), (0, -1.2, 0)], [1, 1, -1, -1]),
    4: ([(0.4, 0, 0), (0, 0.8, 0), (0, 0, 1.2), (0, 0, -0.4), (-0.8, 0, 0), (0, -1.2, 0)], [1] * 6),
    5: ([(0.2, 0.2, 0.2), (0.5, 0.5, 0.5), (0.8, 0.8, 0.8), (-0.2, 0.2, -0.2), (0.5, -0.5, 0.5),
         (-0.8, -0.8, -0.8)], [1] * 6),
}


def kirkwood_case(case: int, radius: float = 2.0, eps_in: float = 1.0,
                  eps_out: float = 80.0) -> KirkwoodConfig:
    pos, q = KIRKWOOD_CASES[case]
    return KirkwoodConfig(radius, tuple(map(tuple, pos)), tuple(q), eps_in, eps_out)

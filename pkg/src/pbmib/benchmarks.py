"""Standard benchmark solutes: Born ion, Kirkwood spheres, synthetic mini-proteins."""
from __future__ import annotations

import numpy as np

from .model import Atom, SoluteModel
from .oracle import born_energy, kirkwood_case, kirkwood_energy

POINT_CHARGE_RADIUS = 0.5  # atom radius for charges inside an explicit sphere surface


def born_model(radius: float, charge: float = 1.0) -> SoluteModel:
    return SoluteModel((Atom((0.0, 0.0, 0.0), float(charge), float(radius)),))


def born_reference(radius: float, charge: float = 1.0, eps_in=1.0, eps_out=80.0) -> float:
    return born_energy(charge, radius, eps_in, eps_out)


def born_surface(radius: float) -> dict:
    return {"type": "sphere", "radius": float(radius)}


def kirkwood_model(case: int) -> SoluteModel:
    cfg = kirkwood_case(case)
    return SoluteModel(tuple(Atom(tuple(float(v) for v in p), float(q), POINT_CHARGE_RADIUS)
                             for p, q in zip(cfg.positions, cfg.charges)))


def kirkwood_reference(case: int) -> float:
    return kirkwood_energy(kirkwood_case(case))


KIRKWOOD_SURFACE = {"type": "sphere", "radius": 2.0}

# (seed, number of atoms) for the three synthetic clusters
MINI_PROTEINS = {"mini5": (11, 5), "mini9": (23, 9), "mini14": (37, 14)}


def mini_protein(name: str) -> SoluteModel:
    """Deterministic random-walk cluster of overlapping spheres.

    Radii are drawn from 1.1-2.0 A, bond lengths from 1.3-1.7 A, and charges
    are mixed-sign partial charges; the walk rejects steps that bury an atom
    center inside an earlier sphere.
    """
    seed, n = MINI_PROTEINS[name]
    rng = np.random.default_rng(seed)
    centers = [np.zeros(3)]
    while len(centers) < n:
        base = centers[rng.integers(len(centers))]
        d = rng.normal(size=3)
        c = base + d / np.linalg.norm(d) * rng.uniform(1.3, 1.7)
        if min(np.linalg.norm(c - p) for p in centers) > 1.25:
            centers.append(c)
    radii = rng.uniform(1.1, 2.0, n)
    charges = rng.uniform(-0.8, 0.8, n)
    charges[0], charges[-1] = 1.0, -1.0
    return SoluteModel(tuple(Atom(tuple(float(v) for v in np.round(c, 4)), float(round(q, 4)), float(round(r, 3)))
                             for c, q, r in zip(centers, charges, radii)))

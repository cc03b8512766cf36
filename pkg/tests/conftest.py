import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pbmib.grid import CartesianGrid, DomainRegistration, EdgeIntersection

settings.register_profile("ci", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


def planar_registration(walls, dims=(10, 6, 6), h=1.0, origin=(0.0, 0.0, 0.0)):
    """Registration for planes x = w (sorted) splitting the box into slabs.

    The first slab (smallest x) is solute, then the slabs alternate.  Normals
    point from solute into solvent.
    """
    g = CartesianGrid(tuple(origin), (h, h, h), tuple(dims))
    xs = origin[0] + h * np.arange(dims[0])
    slab = np.searchsorted(np.asarray(walls), xs, side="right")
    solute_x = slab % 2 == 0
    flags = np.broadcast_to(solute_x[:, None, None], dims).copy()
    ixs = {}
    for i in range(dims[0] - 1):
        if solute_x[i] == solute_x[i + 1]:
            continue
        w = next(w for w in walls if xs[i] <= w <= xs[i + 1])
        t = (w - xs[i]) / h
        nx = 1.0 if solute_x[i] else -1.0
        for j in range(dims[1]):
            for k in range(dims[2]):
                loc = (float(w), origin[1] + j * h, origin[2] + k * h)
                ixs[(0, i, j, k)] = EdgeIntersection((i, j, k), 0, float(t), loc, (nx, 0.0, 0.0))
    return DomainRegistration(g, flags, ixs)


def field_on(grid, fn):
    return fn(grid.nodes().reshape(-1, 3)).ravel()


@pytest.fixture
def planar():
    return planar_registration

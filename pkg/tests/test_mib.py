import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import field_on, planar_registration
from pbmib.errors import AssemblyError, ConditioningError, DegeneracyError, GeometryError
from pbmib.grid import CartesianGrid, DomainRegistration, EdgeIntersection, register_domain
from pbmib.mib import (FictitiousBuilder, assemble, fd_weights, fictitious_sharp, fictitious_smooth,
                       local_frame)
from pbmib.model import Atom, DielectricModel, RunConfig, SoluteModel
from pbmib.pipeline import run_pipeline
from pbmib.solver import SolverConfig, solve
from pbmib.surface import SphereSurface

# ---------------------------------------------------------------- weights


def test_fd_collocation():
    np.testing.assert_allclose(fd_weights([-0.3, 0, 0.3], 0, 0).weights, (0, 1, 0), atol=1e-15)


def test_fd_central_difference():
    h = 0.3
    np.testing.assert_allclose(fd_weights([-h, 0, h], 0, 1).weights, (-1 / (2 * h), 0, 1 / (2 * h)))


def test_fd_lagrange_value():
    np.testing.assert_allclose(fd_weights([-1, 0, 1], 0.5, 0).weights, (-0.125, 0.75, 0.375))


def test_fd_duplicate_nodes():
    with pytest.raises(DegeneracyError):
        fd_weights([0, 1, 1], 0.5, 1)


def test_fd_order_too_high():
    with pytest.raises(DegeneracyError):
        fd_weights([0, 1], 0.5, 2)


nodes_st = st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=6, unique=True)


@given(nodes_st, st.floats(-3, 3), st.integers(0, 4))
def test_fd_polynomial_exactness(nodes, x0, order):
    nodes = sorted(nodes)
    assume(order < len(nodes))
    assume(min(np.diff(nodes)) > 0.05)
    w = np.asarray(fd_weights(nodes, x0, order).weights)
    assert abs(w.sum() - (1.0 if order == 0 else 0.0)) < 1e-8 * max(1.0, np.abs(w).max())
    for p in range(len(nodes)):
        exact = 0.0 if p < order else np.prod(range(p - order + 1, p + 1)) * x0 ** (p - order)
        got = w @ np.asarray(nodes) ** p
        scale = max(1.0, np.abs(w).max() * max(1.0, np.abs(nodes).max()) ** p)
        assert abs(got - exact) <= 1e-10 * scale


# ---------------------------------------------------------------- frames


def test_frame_axis_case():
    f = local_frame((1, 0, 0))
    np.testing.assert_allclose(f.tangent1, (0, 1, 0) if abs(f.tangent1[1]) else (0, 0, 1), atol=1e-15)
    np.testing.assert_allclose(f.rotation @ f.rotation.T, np.eye(3), atol=1e-12)


def test_frame_z_normal_right_handed():
    f = local_frame((0, 0, 1))
    assert np.linalg.det(f.rotation) == pytest.approx(1.0, abs=1e-12)


def test_frame_zero_normal():
    with pytest.raises(GeometryError):
        local_frame((0, 0, 0))


def test_frame_random_normals_orthonormal():
    rng = np.random.default_rng(7)
    v = rng.normal(size=(10000, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    worst = 0.0
    for n in v:
        R = local_frame(n).rotation
        worst = max(worst, np.abs(R @ R.T - np.eye(3)).max())
        assert np.allclose(R[0], n, atol=1e-15)
    assert worst < 1e-12


# ---------------------------------------------------------------- fictitious values


def _two_dielectric(x, y, gamma, A, B, C):
    """Piecewise-linear field with [u] = 0 across x = gamma."""
    return np.where(x < gamma, A * x, A * gamma + B * (x - gamma)) + C * y


@pytest.mark.parametrize("gamma", [3.37, 3.05, 3.93])
@pytest.mark.parametrize("eps", [(1.0, 80.0), (2.0, 2.0), (80.0, 1.0)])
def test_smooth_planar_exact(gamma, eps):
    em, es = eps
    reg = planar_registration([gamma])
    A, C = 1.3, -0.7
    J = 4.2
    B = (J + em * A) / es
    g = reg.grid
    u = field_on(g, lambda p: _two_dielectric(p[:, 0], p[:, 1], gamma, A, B, C))
    diel = DielectricModel(em, es)
    ix = reg.intersection(0, 3, 2, 3)
    eqs = fictitious_smooth(reg, ix, local_frame(ix.normal), J, diel)
    assert len(eqs) == 2
    for eq in eqs:
        x, y, _ = g.node(*eq.node)
        want = A * x + C * y if eq.side else A * gamma + B * (x - gamma) + C * y
        assert eq.evaluate(u) == pytest.approx(want, abs=1e-12 * max(1, abs(want)))


def test_smooth_no_interface_limit():
    gamma = 3.41
    reg = planar_registration([gamma])
    ix = reg.intersection(0, 3, 2, 2)
    eqs = fictitious_smooth(reg, ix, local_frame(ix.normal), 0.0, DielectricModel(3.0, 3.0))
    g = reg.grid
    rng = np.random.default_rng(0)
    # any smooth field continued through the interface: a quadratic along x
    c = rng.normal(size=3)
    u = field_on(g, lambda p: c[0] + c[1] * p[:, 0] + c[2] * p[:, 0] ** 2)
    for eq in eqs:
        assert eq.constant == 0.0
        x = g.node(*eq.node)[0]
        assert eq.evaluate(u) == pytest.approx(c[0] + c[1] * x + c[2] * x * x, rel=1e-10)


def _slab(walls, em, es, J1, A=0.9, B=None):
    reg = planar_registration(walls)
    g1, g2 = walls
    # fluxes: eps_s B - eps_m A = J1 (normal +x); eps_m C - eps_s B = J2 (normal -x)
    B = (J1 + em * A) / es if B is None else B
    C = 1.7
    J2 = em * C - es * B

    def left(x):
        return A * x

    def mid(x):
        return A * g1 + B * (x - g1)

    def right(x):
        return mid(g2) + C * (x - g2)

    return reg, (left, mid, right), J2


@pytest.mark.parametrize("eps", [(1.0, 80.0), (2.0, 5.0)])
def test_sharp_thin_slab_exact(eps):
    em, es = eps
    walls = [3.8, 4.2]  # solvent slab of width 0.4h around node 4
    J1 = 2.5
    reg, (left, mid, right), J2 = _slab(walls, em, es, J1)
    g = reg.grid
    u = field_on(g, lambda p: np.where(p[:, 0] < walls[0], left(p[:, 0]),
                                       np.where(p[:, 0] < walls[1], mid(p[:, 0]), right(p[:, 0]))))
    a = reg.intersection(0, 3, 2, 2)
    b = reg.intersection(0, 4, 2, 2)
    eqs = fictitious_sharp(reg, [a, b], [local_frame(a.normal), local_frame(b.normal)], [J1, J2],
                           DielectricModel(em, es))
    want = {(a.key, "lo"): mid, (a.key, "hi"): left, (b.key, "lo"): right, (b.key, "hi"): mid}
    for eq in eqs:
        x = g.node(*eq.node)[0]
        assert eq.evaluate(u) == pytest.approx(want[eq.key](x), abs=1e-10)


def test_sharp_coincident_crossings_conditioning_error():
    reg = planar_registration([3.8, 4.2])
    ixs = dict(reg.intersections)
    for (axis, i, j, k), ix in list(ixs.items()):
        t = 1.0 if i == 3 else 0.0
        ixs[(axis, i, j, k)] = EdgeIntersection(ix.node, 0, t, (4.0, ix.location[1], ix.location[2]), ix.normal)
    reg = DomainRegistration(reg.grid, reg.flags, ixs)
    a, b = reg.intersection(0, 3, 2, 2), reg.intersection(0, 4, 2, 2)
    with pytest.raises(ConditioningError):
        fictitious_sharp(reg, [a, b], [local_frame(a.normal), local_frame(b.normal)], [0.0, 0.0],
                         DielectricModel(1.0, 80.0))


def test_nearly_touching_spheres_converge():
    h = 0.5
    gap = 0.3 * h
    x = 1.4 + gap / 2
    m = SoluteModel((Atom((-x, 0.013, 0.021), 1.0, 1.4), Atom((x, 0.013, 0.021), -1.0, 1.4)))
    cfg = RunConfig(grid_spacing=h, padding=4.0)
    res = run_pipeline(m, cfg)
    assert np.isfinite(res.report.delta_G)
    assert res.regular.diagnostics.relative_residual <= 1e-8


# ---------------------------------------------------------------- assembly


def _sphere_reg(h=0.4):
    n = int(round(8 / h)) + 1
    g = CartesianGrid((-4.013, -4.029, -3.987), (h, h, h), (n, n, n))
    return register_domain(g, SphereSurface((0, 0, 0), 2.0))


def test_assemble_uniform_harmonic():
    reg = _sphere_reg()
    g = reg.grid
    exact = field_on(g, lambda p: p[:, 0] ** 2 - p[:, 1] ** 2)
    jumps = {k: 0.0 for k in reg.intersections}
    sysm = assemble(reg, DielectricModel(4.0, 4.0), jumps, exact)
    x, _ = solve(sysm, SolverConfig(1e-12))
    # quadratics are reproduced by both the 7-point rows and the fictitious rows
    assert np.abs(x - exact).max() < 1e-8


def test_assemble_homogeneous_zero():
    reg = _sphere_reg()
    sysm = assemble(reg, DielectricModel(1.0, 80.0), {k: 0.0 for k in reg.intersections}, np.zeros(reg.grid.size))
    x, _ = solve(sysm)
    assert not np.any(x)


def test_assemble_missing_jump():
    reg = _sphere_reg()
    jumps = {k: 0.0 for k in list(reg.intersections)[1:]}
    with pytest.raises(AssemblyError):
        assemble(reg, DielectricModel(), jumps, np.zeros(reg.grid.size))


def test_assemble_diagonal_nonzero_and_boundary_identity():
    reg = _sphere_reg(0.5)
    sysm = assemble(reg, DielectricModel(), {k: 1.0 for k in reg.intersections}, np.ones(reg.grid.size))
    A = sysm.matrix
    assert np.all(A.diagonal() != 0)
    b = np.flatnonzero(reg.grid.boundary_mask().ravel())
    assert np.all(A[b].toarray()[np.arange(len(b)), b] == 1.0)
    assert np.all(sysm.rhs[b] == 1.0)


def test_discrete_maximum_principle_without_interface():
    g = CartesianGrid((0, 0, 0), (1, 1, 1), (9, 8, 7))
    reg = DomainRegistration(g, np.zeros(g.dims, bool), {})
    rng = np.random.default_rng(3)
    bv = rng.uniform(-2, 5, g.size)
    x, _ = solve(assemble(reg, DielectricModel(), {}, bv), SolverConfig(1e-12))
    b = g.boundary_mask().ravel()
    inner = x[~b]
    assert inner.max() <= bv[b].max() + 1e-9 and inner.min() >= bv[b].min() - 1e-9


def test_builder_records_no_fallback_on_smooth_sphere():
    reg = _sphere_reg(0.25)
    b = FictitiousBuilder(reg, 1.0, 80.0)
    eqs = b.all_equations({k: 0.0 for k in reg.intersections})
    assert len(eqs) == 2 * len(reg.intersections)

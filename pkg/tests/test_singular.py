import numpy as np
import pytest

from pbmib.errors import ModelError, SingularityError
from pbmib.grid import CartesianGrid, DomainRegistration, register_domain
from pbmib.model import COULOMB_KCAL, Atom, DielectricModel, SoluteModel
from pbmib.singular import decompose, jump_rhs, phi_star, solve_phi0
from pbmib.solver import SolverConfig
from pbmib.surface import SphereSurface

TIGHT = SolverConfig(1e-12)


def test_phi_star_unit_distance():
    m = SoluteModel((Atom((0, 0, 0), 1, 1),))
    assert phi_star(m, (1, 0, 0)) == pytest.approx(332.0716, abs=1e-10)


def test_phi_star_eps2():
    m = SoluteModel((Atom((0, 0, 0), 1, 1),), DielectricModel(2.0, 80.0))
    assert phi_star(m, (2, 0, 0)) == pytest.approx(83.0179, abs=1e-4)


def test_phi_star_cancels():
    m = SoluteModel((Atom((1, 0, 0), 1, 1), Atom((-1, 0, 0), -1, 1)))
    assert phi_star(m, (0, 0, 0)) == pytest.approx(0.0, abs=1e-12)


def test_phi_star_at_center():
    m = SoluteModel((Atom((0, 0, 0), 1, 1),))
    with pytest.raises(SingularityError):
        phi_star(m, (0, 0, 0))


def sphere_reg(h, R=2.0, shift=(0.0131, -0.0217, 0.0093)):
    n = int(np.ceil(2 * (R + 1.5) / h)) + 1
    lo = -(n - 1) * h / 2
    g = CartesianGrid(tuple(lo + s for s in shift), (h, h, h), (n, n, n))
    return register_domain(g, SphereSurface((0, 0, 0), R))


def solute_nodes(reg):
    return reg.grid.nodes()[reg.flags]


def test_phi0_reproduces_linear_data():
    reg = sphere_reg(0.4)
    m = SoluteModel((Atom((0, 0, 0), 1, 1),))
    f = solve_phi0(reg, m, TIGHT, dirichlet=lambda p: p[:, 0])
    np.testing.assert_allclose(f.values[reg.flags], solute_nodes(reg)[:, 0], atol=1e-8)


def test_phi0_harmonic_quadratic_second_order():
    errs = []
    for h in (0.4, 0.2):
        reg = sphere_reg(h)
        m = SoluteModel((Atom((0, 0, 0), 1, 1),))
        fn = lambda p: p[:, 0] * p[:, 1] + p[:, 2] ** 2 - 0.5 * p[:, 0] ** 2 - 0.5 * p[:, 1] ** 2  # noqa: E731
        f = solve_phi0(reg, m, TIGHT, dirichlet=fn)
        errs.append(np.abs(f.values[reg.flags] - fn(solute_nodes(reg))).max())
    assert errs[1] <= errs[0] / 3 or errs[1] < 1e-8


def test_phi0_constant_data():
    reg = sphere_reg(0.5)
    m = SoluteModel((Atom((0, 0, 0), 1, 1),))
    f = solve_phi0(reg, m, TIGHT, dirichlet=lambda p: np.full(len(p), 3.25))
    np.testing.assert_allclose(f.values[reg.flags], 3.25, rtol=1e-10)
    assert np.all(np.isnan(f.values[~reg.flags]))


def test_phi0_born_constant():
    reg = sphere_reg(0.25)
    m = SoluteModel((Atom((0, 0, 0), 1, 2.0),))
    f = solve_phi0(reg, m)
    want = -COULOMB_KCAL / 2.0
    assert want == pytest.approx(-166.0358, abs=1e-4)
    np.testing.assert_allclose(f.values[reg.flags], want, rtol=1e-3)


def test_phi0_empty_solute():
    g = CartesianGrid((0, 0, 0), (1, 1, 1), (5, 5, 5))
    reg = DomainRegistration(g, np.zeros(g.dims, bool), {})
    with pytest.raises(ModelError):
        solve_phi0(reg, SoluteModel((Atom((2, 2, 2), 1, 1),)))


def test_born_jump_rhs():
    reg = sphere_reg(0.5)
    m = SoluteModel((Atom((0, 0, 0), 1, 2.0),))
    dec = decompose(reg, m, TIGHT)
    vals = np.array(list(dec.jumps.values()))
    np.testing.assert_allclose(vals, -COULOMB_KCAL / 4.0, rtol=1e-6)
    assert -COULOMB_KCAL / 4.0 == pytest.approx(-83.0179, abs=1e-4)


def test_zero_charge_jumps():
    reg = sphere_reg(0.5)
    m = SoluteModel((Atom((0.3, 0, 0), 0.0, 1.0), Atom((-0.3, 0, 0), 0.0, 1.0)))
    dec = decompose(reg, m)
    assert all(v == 0.0 for v in dec.jumps.values())


def _reflect_key(key, dims):
    axis, i, j, k = key
    n = dims[0]
    return (axis, n - 2 - i if axis == 0 else n - 1 - i, j, k)


def test_kirkwood_case1_jumps_mirror_symmetric():
    h = 0.45
    n = 21
    g = CartesianGrid((-(n - 1) * h / 2, -4.4983, -4.5071), (h, h, h), (n, n, n))
    reg = register_domain(g, SphereSurface((0, 0, 0), 2.0))
    m = SoluteModel((Atom((1, 0, 0), 1, 0.5), Atom((-1, 0, 0), 1, 0.5)))
    dec = decompose(reg, m, TIGHT)
    scale = max(abs(v) for v in dec.jumps.values())
    for key, v in dec.jumps.items():
        w = dec.jumps[_reflect_key(key, g.dims)]
        assert abs(v - w) <= 1e-9 * scale
    # the harmonic part is mirror symmetric too
    vals = dec.phi0.values
    np.testing.assert_allclose(np.nan_to_num(vals), np.nan_to_num(vals[::-1]), atol=1e-9 * np.nanmax(np.abs(vals)))


def test_jump_rhs_matches_decompose():
    reg = sphere_reg(0.5)
    m = SoluteModel((Atom((0.4, 0.1, 0), 1, 1.0), Atom((-0.5, 0, 0.2), -0.5, 1.0)))
    dec = decompose(reg, m)
    ix = next(iter(reg.intersections.values()))
    assert jump_rhs(m, dec.phi0, ix) == dec.jumps[ix.key]

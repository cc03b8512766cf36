import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from pbmib.errors import ModelError
from pbmib.oracle import (KirkwoodConfig, born_energy, kirkwood_case, kirkwood_energy,
                          kirkwood_partial_sum, kirkwood_terms_needed, legendre_values)
from pbmib.model import COULOMB_KCAL


def test_born_values():
    assert born_energy(1, 2.0, 1, 80) == pytest.approx(-81.98, abs=0.005)
    assert born_energy(1, 1.1, 1, 80) == pytest.approx(-149.05, abs=0.005)
    assert born_energy(1, 2.0, 5, 5) == 0.0


@pytest.mark.parametrize("args", [(1, 0.0, 1, 80), (1, 1.0, 0, 80), (1, 1.0, 1, -2)])
def test_born_preconditions(args):
    with pytest.raises(ModelError):
        born_energy(*args)


def test_kirkwood_center_charge_is_born():
    cfg = KirkwoodConfig(2.0, ((0, 0, 0),), (1.0,))
    assert kirkwood_energy(cfg) == pytest.approx(born_energy(1, 2.0, 1, 80), abs=1e-12)


@pytest.mark.parametrize("case,exact", [(4, -2989.30), (5, -3124.30)])
def test_kirkwood_cases_4_5(case, exact):
    assert kirkwood_energy(kirkwood_case(case)) == pytest.approx(exact, abs=0.02)


def test_charge_on_boundary_rejected():
    with pytest.raises(ModelError):
        KirkwoodConfig(2.0, ((2.0, 0, 0),), (1.0,))


def test_series_truncation_tail():
    cfg = kirkwood_case(3)
    n = kirkwood_terms_needed(cfg, 1e-7)
    s1 = kirkwood_partial_sum(cfg, n, COULOMB_KCAL)
    s2 = kirkwood_partial_sum(cfg, 2 * n, COULOMB_KCAL)
    assert abs(s1 - s2) < 1e-6


def test_legendre_recurrence():
    x = np.linspace(-1, 1, 11)
    P = legendre_values(4, x)
    np.testing.assert_allclose(P[2], 0.5 * (3 * x ** 2 - 1), atol=1e-14)
    np.testing.assert_allclose(P[4], (35 * x ** 4 - 30 * x ** 2 + 3) / 8, atol=1e-14)


def test_image_charge_limit():
    # eps_out -> infinity, eps_in = 1: grounded-sphere image charge energy
    R, a = 2.0, 1.1
    cfg = KirkwoodConfig(R, ((a, 0, 0),), (1.0,), 1.0, 1e12)
    want = -0.5 * COULOMB_KCAL * R / (R * R - a * a)
    assert kirkwood_energy(cfg, tol=1e-10) == pytest.approx(want, rel=1e-8)


@given(st.integers(0, 2 ** 31 - 1))
def test_rotation_and_reflection_invariance(seed):
    cfg = kirkwood_case(5)
    rot = Rotation.random(random_state=seed).as_matrix()
    if seed % 2:
        rot = rot @ np.diag([1.0, 1.0, -1.0])
    pos = np.asarray(cfg.positions) @ rot.T
    moved = KirkwoodConfig(cfg.radius, tuple(map(tuple, pos)), cfg.charges)
    assert kirkwood_energy(moved) == pytest.approx(kirkwood_energy(cfg), abs=1e-9)


@given(st.permutations(range(6)))
def test_exchange_symmetry(perm):
    cfg = kirkwood_case(4)
    pos = [cfg.positions[i] for i in perm]
    q = [cfg.charges[i] for i in perm]
    assert kirkwood_energy(KirkwoodConfig(cfg.radius, tuple(pos), tuple(q))) == \
        pytest.approx(kirkwood_energy(cfg), abs=1e-9)

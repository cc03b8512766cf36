import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pbmib.benchmarks import KIRKWOOD_SURFACE, born_model, born_surface, kirkwood_model
from pbmib.energy import (INTERIOR, LOW, MID, TOP, ReactionField, anchor_node, extend_reaction_field,
                          interpolate_at_center, needed_nodes, reaction_field_energy)
from pbmib.errors import ExtensionError, GeometryError
from pbmib.grid import CartesianGrid, register_domain
from pbmib.model import Atom, RunConfig, SoluteModel
from pbmib.pipeline import run_pipeline, run_single
from pbmib.surface import SphereSurface

G = CartesianGrid((-2.0, -1.5, -1.0), (0.5, 0.4, 0.3), (9, 9, 9))


def _field(fn, grid=G):
    p = grid.nodes()
    return fn(p[..., 0], p[..., 1], p[..., 2])


coord = st.floats(-0.4, 0.4)


@given(coord, coord, coord, st.floats(-10, 10))
def test_interpolate_constant(dx, dy, dz, c):
    center = (dx, dy + 0.1, dz + 0.1)
    v = interpolate_at_center(_field(lambda x, y, z: c + 0 * x), G, center, anchor=(4, 4, 4))
    assert v == pytest.approx(c, abs=1e-12 * max(1, abs(c)))


@given(coord, coord, coord)
def test_interpolate_linear(dx, dy, dz):
    center = np.array([dx, dy + 0.1, dz + 0.2])
    f = _field(lambda x, y, z: x + 2 * y + 3 * z)
    v = interpolate_at_center(f, G, center, anchor=(4, 4, 4))
    assert v == pytest.approx(center @ (1, 2, 3), abs=1e-12)


@given(coord, coord, coord, st.lists(st.floats(-3, 3), min_size=27, max_size=27))
def test_interpolate_triquadratic_exact(dx, dy, dz, coefs):
    c = np.asarray(coefs).reshape(3, 3, 3)

    def f(x, y, z):
        return sum(c[a, b, e] * x ** a * y ** b * z ** e for a in range(3) for b in range(3) for e in range(3))

    center = (dx, dy + 0.1, dz + 0.2)
    v = interpolate_at_center(_field(f), G, center, anchor=(4, 4, 4))
    want = f(*center)
    assert v == pytest.approx(want, abs=1e-10 * max(1.0, np.abs(c).sum()))


def test_interpolate_x2y():
    f = _field(lambda x, y, z: x * x * y)
    center = (0.13, 0.27, 0.31)
    v = interpolate_at_center(f, G, center, anchor=(4, 4, 4))
    assert v == pytest.approx(0.13 ** 2 * 0.27, abs=1e-12)


def test_interpolate_missing_value():
    f = _field(lambda x, y, z: x)
    f[5, 5, 5] = np.nan
    with pytest.raises(ExtensionError):
        interpolate_at_center(f, G, (0, 0.1, 0.2), anchor=(4, 4, 4))


def test_anchor_nearest_and_lexicographic_ties():
    g = CartesianGrid((0, 0, 0), (1, 1, 1), (6, 6, 6))
    flags = np.zeros(g.dims, bool)
    flags[2:4, 2:4, 2:4] = True
    assert anchor_node(g, flags, (2.1, 2.9, 3.2)) == (2, 3, 3)
    # equidistant from (2,2,2) and (3,2,2): the smaller index wins
    assert anchor_node(g, flags, (2.5, 2.0, 2.0)) == (2, 2, 2)


def test_anchor_needs_solute():
    g = CartesianGrid((0, 0, 0), (1, 1, 1), (6, 6, 6))
    with pytest.raises(GeometryError):
        anchor_node(g, np.zeros(g.dims, bool), (1, 1, 1))


# ---------------------------------------------------------------- extension


def _sphere_setup(h=0.7, R=1.6):
    n = int(np.ceil(2 * (R + 2.5) / h)) + 1
    lo = -(n - 1) * h / 2
    g = CartesianGrid((lo + 0.021, lo - 0.033, lo + 0.017), (h, h, h), (n, n, n))
    reg = register_domain(g, SphereSurface((0, 0, 0), R))
    return reg


def _linear(reg, a):
    p = reg.grid.nodes()
    return a[0] + p[..., 0] * a[1] + p[..., 1] * a[2] + p[..., 2] * a[3]


centers_st = st.lists(st.tuples(*(st.floats(-1.0, 1.0),) * 3), min_size=1, max_size=4)


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), centers_st)
def test_extension_middle_and_low_exact_for_linear(a, centers):
    reg = _sphere_setup()
    u = _linear(reg, a)
    fld = ReactionField.interior(reg.grid, u, reg.flags)
    _, needed = needed_nodes(reg.grid, reg.flags, np.asarray(centers))
    ext = extend_reaction_field(fld, reg, needed)
    for q in needed:
        assert ext.provenance[q] in (MID, LOW)
        assert ext.values[q] == pytest.approx(u[q], abs=1e-9 * (1 + np.abs(a).sum()))


def test_extension_low_priority_parallelogram():
    # a solvent node with no three-in-a-row interior line but a parallelogram
    g = CartesianGrid((0, 0, 0), (1, 1, 1), (6, 6, 6))
    from pbmib.grid import DomainRegistration
    flags = np.zeros(g.dims, bool)
    flags[2, 2, 2] = flags[3, 2, 2] = flags[2, 3, 2] = True
    reg = DomainRegistration(g, flags, {})
    u = _linear(reg, (0.5, 1.0, -2.0, 0.25))
    fld = ReactionField.interior(g, u, flags)
    ext = extend_reaction_field(fld, reg, [(3, 3, 2)])
    assert ext.provenance[3, 3, 2] == LOW
    assert ext.values[3, 3, 2] == pytest.approx(u[3, 3, 2], abs=1e-12)


def test_extension_top_priority_used():
    reg = _sphere_setup()
    u = _linear(reg, (1, 2, 3, 4))
    fld = ReactionField.interior(reg.grid, u, reg.flags)
    _, needed = needed_nodes(reg.grid, reg.flags, np.array([[0.9, 0.2, 0.1]]))
    ext = extend_reaction_field(fld, reg, needed, top=lambda ix, q: float(u[q]))
    tags = {ext.tag(q) for q in needed}
    assert tags == {"extended_top"}
    for q in needed:
        assert ext.values[q] == u[q]


def test_extension_error_when_nothing_applies():
    g = CartesianGrid((0, 0, 0), (1, 1, 1), (6, 6, 6))
    from pbmib.grid import DomainRegistration
    flags = np.zeros(g.dims, bool)
    flags[2, 2, 2] = True
    reg = DomainRegistration(g, flags, {})
    fld = ReactionField.interior(g, np.ones(g.dims), flags)
    with pytest.raises(ExtensionError, match=r"\(4, 2, 2\)"):
        extend_reaction_field(fld, reg, [(4, 2, 2)])


def test_extension_leaves_interior_untouched():
    reg = _sphere_setup()
    u = _linear(reg, (1, 2, 3, 4))
    fld = ReactionField.interior(reg.grid, u, reg.flags)
    _, needed = needed_nodes(reg.grid, reg.flags, np.array([[1.1, 0.0, 0.0]]))
    ext = extend_reaction_field(fld, reg, needed)
    assert np.array_equal(ext.values[reg.flags], fld.values[reg.flags])
    assert np.all(fld.provenance[~reg.flags] == 0)


# ---------------------------------------------------------------- energies


def test_born_h05():
    r = run_single(born_model(2.0), RunConfig(grid_spacing=0.5, padding=4.0, surface=born_surface(2.0)))
    assert r.delta_G == pytest.approx(-81.98, abs=0.05)


@pytest.mark.slow
def test_born_small_radius_fine_grid():
    r = run_single(born_model(1.1), RunConfig(grid_spacing=0.1, padding=4.0, surface=born_surface(1.1)))
    assert r.delta_G == pytest.approx(-149.05, abs=0.05)


def test_zero_charge_energy_exact():
    m = SoluteModel((Atom((0, 0, 0), 0.0, 2.0),))
    r = run_single(m, RunConfig(grid_spacing=0.5, padding=4.0, surface=born_surface(2.0)))
    assert r.delta_G == 0.0


def test_kirkwood_case4_h05():
    r = run_single(kirkwood_model(4), RunConfig(grid_spacing=0.5, padding=4.0, surface=KIRKWOOD_SURFACE))
    assert r.delta_G == pytest.approx(-2986.62, rel=5e-3)


def test_report_serialization():
    r = run_single(born_model(2.0), RunConfig(grid_spacing=0.9, padding=4.0, surface=born_surface(2.0)))
    d = json.loads(r.to_json())
    assert set(d) == {"delta_G_kcal_mol", "h", "atoms", "solver", "extension"}
    assert set(d["extension"]) == {"top", "mid", "low"}
    assert d["atoms"][0]["index"] == 0 and d["atoms"][0]["q"] == 1.0
    assert d["delta_G_kcal_mol"] == pytest.approx(0.5 * d["atoms"][0]["q"] * d["atoms"][0]["phi_rec"], abs=0)
    rows = r.to_csv().splitlines()
    assert rows[0].startswith("h,delta_G_kcal_mol") and len(rows) == 2


def test_provenance_audit():
    res = run_pipeline(kirkwood_model(5), RunConfig(grid_spacing=0.9, padding=4.0, surface=KIRKWOOD_SURFACE))
    flags = res.registration.flags
    prov = res.field.provenance
    assert np.all(prov[flags] == INTERIOR)
    assert np.all(np.isin(prov[~flags], (0, TOP, MID, LOW)))
    # interior values are exactly the solved field plus the harmonic part
    want = res.regular.values.reshape(flags.shape) + np.nan_to_num(res.decomposition.phi0.values)
    np.testing.assert_array_equal(res.field.values[flags], want[flags])
    # the solve never saw the extended values: rerunning gives the same solution
    again = run_pipeline(kirkwood_model(5), RunConfig(grid_spacing=0.9, padding=4.0, surface=KIRKWOOD_SURFACE))
    np.testing.assert_array_equal(again.regular.values, res.regular.values)
    counts = res.field.counts()
    assert counts == res.report.extension
    assert sum(counts.values()) == int((prov[~flags] != 0).sum())


def test_energy_sum_definition():
    res = run_pipeline(kirkwood_model(2), RunConfig(grid_spacing=0.7, padding=4.0, surface=KIRKWOOD_SURFACE))
    rep = res.report
    assert rep.delta_G == 0.5 * float(np.dot(rep.charges, rep.per_atom_potential))
    again = reaction_field_energy(kirkwood_model(2), res.field, res.registration.grid,
                                  flags=res.registration.flags)
    assert again.delta_G == rep.delta_G

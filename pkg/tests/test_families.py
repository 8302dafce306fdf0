import numpy as np
import pytest

from capbraid import families as fam
from capbraid import linking as lk
from capbraid.checks import circle
from capbraid.dynamics import FlowConfig, search_periodic_orbits

from conftest import orbit_at
from test_dynamics import MAXIMA, MINIMA


def ids_at(orbits, points):
    return sorted(orbit_at(orbits, p).id for p in points)


def test_torus_linking_matrix_is_zero(torus, sinsin_orbits):
    lm = fam.linking_matrix(torus, sinsin_orbits)
    n = len(sinsin_orbits)
    assert lm.matrix.shape == (n, n)
    assert not np.any(lm.matrix)
    assert not np.any(np.diag(lm.defined))
    assert lm.defined.sum() == n * (n - 1)


def test_sphere_pole_linking(sphere, height_orbits):
    lm = fam.linking_matrix(sphere, height_orbits, [(o.id, k) for o in height_orbits for k in (0, 1)])
    for a, b in ((0, 0), (1, 0), (0, 1), (1, 1)):
        i = lm.ids.index((height_orbits[0].id, a))
        j = lm.ids.index((height_orbits[1].id, b))
        assert lm.matrix[i, j] == a + b
    assert np.array_equal(lm.matrix, lm.matrix.T)


def test_linking_csv_layout(torus, sinsin_orbits):
    rows = fam.linking_matrix(torus, sinsin_orbits).to_csv().strip().splitlines()
    assert len(rows) == len(sinsin_orbits) + 1
    assert rows[1].split(",")[1] == ""  # undefined diagonal


def test_certificate_for_constant_points(torus):
    loops = [np.array([p]) for p in [(0.1, 0.1), (0.4, 0.7), (0.8, 0.3), (0.6, 0.6)]]
    cert = fam.unlinkedness_certificate(torus, loops)
    assert cert["certified"]
    assert cert["report"]["crossings"] == 0


def test_linked_pair_is_refused_with_witness(torus):
    loops = [np.array([[0.5, 0.5]]), circle((0.5, 0.5), 0.1)]
    cert = fam.unlinkedness_certificate(torus, loops)
    assert not cert["certified"]
    assert cert["witness"] == [0, 1, 1]


def test_certificate_for_disjoint_circles(torus, sphere):
    loops = [circle((0.25, 0.25), 0.1), circle((0.7, 0.6), 0.15)]
    cert = fam.unlinkedness_certificate(torus, loops)
    assert cert["certified"]
    assert lk.detect_crossings(cert["cobordism"]) == []


def test_torus_families(sinsin_orbits, sinsin_families):
    (mp1,) = sinsin_families[fam.MP1]
    (mn1,) = sinsin_families[fam.MN1]
    (murm,) = sinsin_families[fam.MURM]
    assert sorted(m.orbit for m in mp1.members) == ids_at(sinsin_orbits, MAXIMA)
    assert sorted(m.orbit for m in mn1.members) == ids_at(sinsin_orbits, MINIMA)
    assert sorted(m.orbit for m in murm.members) == sorted(o.id for o in sinsin_orbits)
    assert mp1.certified and mn1.certified and murm.certified
    assert mp1.report["crossings"] == 0


def test_torus_families_are_maximal(torus, H_sinsin, sinsin_orbits, sinsin_families):
    for fs in sinsin_families.values():
        for f in fs:
            assert fam.is_maximal(torus, H_sinsin, sinsin_orbits, f)


def test_sphere_index_one_family(height_orbits, height_families):
    (mp1,) = height_families[fam.MP1]
    north = next(o for o in height_orbits if o.basepoint()[2] > 0)
    assert [(m.orbit, m.capping, m.mu) for m in mp1.members] == [(north.id, 0, 1)]
    assert mp1.members[0].action == pytest.approx(np.pi)
    (murm,) = height_families[fam.MURM]
    assert sorted((m.orbit, m.capping) for m in murm.members) == sorted((o.id, 0) for o in height_orbits)


def test_recapped_members_shift_action_and_index(sphere, H_height, height_orbits):
    members = fam.capped_members(sphere, H_height, height_orbits, window=2)
    assert len(members) == 2 * 5
    for m in members:
        base = next(b for b in members if b.orbit == m.orbit and b.capping == 0)
        assert m.mu == base.mu - 4 * m.capping
        assert m.action == pytest.approx(base.action - 4 * np.pi * m.capping)


def test_unknown_kind_rejected(torus, H_sinsin, sinsin_orbits):
    with pytest.raises(ValueError):
        fam.enumerate_families(torus, H_sinsin, sinsin_orbits, "mp2")


def test_iterated_check_period_two(torus, H_sinsin, sinsin_orbits, sinsin_families):
    (murm,) = sinsin_families[fam.MURM]
    pm = search_periodic_orbits(torus, H_sinsin, FlowConfig(), period=2).orbits
    rep = fam.iterate_linking_check(torus, murm, sinsin_orbits, 2, pm)
    assert rep["pass"]
    assert {r["status"] for r in rep["results"]} == {"member"}


def test_iterated_check_detects_linked_probe(torus, sinsin_orbits, sinsin_families):
    (murm,) = sinsin_families[fam.MURM]
    top = orbit_at(sinsin_orbits, MAXIMA[0])
    probe = lk.CappedLoop(circle(top.basepoint(), 0.05, 512), 0)
    rep = fam.iterate_linking_check(torus, murm, sinsin_orbits, 1, [probe])
    (res,) = rep["results"]
    assert res["status"] == "linked"
    idx = [o.id for o in sinsin_orbits].index(top.id)
    assert res["linking"][idx] == 1
    assert sum(abs(v) for v in res["linking"]) == 1


def test_iterated_check_excludes_member_copies(torus, sinsin_orbits, sinsin_families):
    (murm,) = sinsin_families[fam.MURM]
    copy = lk.CappedLoop(sinsin_orbits[3].loop.copy(), 0)
    rep = fam.iterate_linking_check(torus, murm, sinsin_orbits, 1, [copy])
    assert rep["results"][0]["status"] == "member"

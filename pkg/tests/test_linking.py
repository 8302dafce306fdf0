import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from capbraid import geometry as geo
from capbraid import linking as lk
from capbraid.checks import pairwise_linking_sum, circle, random_cobordism_pair, sphere_circle


def constant_cobordism(model, points, ns=8, nt=16):
    pts = np.asarray(points, dtype=float)
    strands = np.broadcast_to(pts[:, None, None, :], (len(pts), ns, nt, pts.shape[1])).copy()
    return lk.DiscreteCobordism(model, strands, np.linspace(0, 1, ns))


def test_constant_strands_never_cross(torus):
    cob = constant_cobordism(torus, [(0.1, 0.1), (0.5, 0.2), (0.7, 0.9)])
    assert lk.detect_crossings(cob) == []
    assert lk.homological_linking(cob) == 0
    assert lk.verify_positive_cobordism(cob)["positive"]


@pytest.mark.parametrize("l", [-3, -2, -1, 1, 2, 3])
def test_model_cobordism_crossings(l):
    cob = lk.model_cobordism(l, nt=120)
    ev = lk.detect_crossings(cob)
    assert lk.homological_linking(cob, ev) == l
    assert len(ev) == abs(l)
    assert all(e.sign == np.sign(l) for e in ev)
    assert [e.s for e in ev] == pytest.approx([0.5] * abs(l), abs=1e-9)
    assert sorted(e.t for e in ev) == pytest.approx([k / abs(l) for k in range(abs(l))], abs=1e-9)
    rep = lk.verify_positive_cobordism(cob, ev)
    assert rep["positive"] == (l > 0)
    if l < 0:
        assert len(rep["witnesses"]) == abs(l)


def test_unlifted_zero_model_is_not_transverse():
    with pytest.raises(lk.NonTransverseError):
        lk.detect_crossings(lk.model_cobordism(0))


@pytest.mark.parametrize("l", [-2, 1, 3])
def test_small_bump_keeps_signed_count(l):
    r0 = 0.2

    def h0(s, t):
        return np.stack([np.full_like(s, 0.5), np.full_like(s, 0.5)], axis=-1)

    def h1(s, t):
        z = (1 - s) * (-r0 / 2) + s * (r0 / 2) * np.exp(2j * np.pi * l * t)
        bump = 0.03 * np.exp(-((s - 0.5) ** 2 + (t - 0.05) ** 2) / 0.01) * np.sin(np.pi * s)
        return np.stack([0.5 + z.real + bump, 0.5 + z.imag + 0.5 * bump], axis=-1)

    cob = lk.from_functions(lk.SurfaceModel.torus(1.0), [h0, h1], 64, 128)
    assert lk.homological_linking(cob) == l


def test_pairwise_linking_of_circle_around_point(torus):
    for l in (-2, -1, 1, 2):
        loop = circle((0.3, 0.6), 0.1, 256, winding=l)
        x = np.array([[0.3, 0.6]])
        assert lk.pairwise_linking(torus, x, loop) == l
        assert lk.pairwise_linking(torus, loop, x) == l


def test_distinct_constants_are_unlinked(torus):
    assert lk.pairwise_linking(torus, np.array([[0.1, 0.2]]), np.array([[0.8, 0.9]])) == 0


def test_sphere_constants_with_cappings(sphere):
    N, S = np.array([[0.0, 0.0, 1.0]]), np.array([[0.0, 0.0, -1.0]])
    assert lk.pairwise_linking(sphere, (N, 0), (S, 0)) == 0
    assert lk.pairwise_linking(sphere, (N, 1), (S, 0)) == 1
    assert lk.pairwise_linking(sphere, (S, -1), (N, 2)) == 1


def test_meeting_loops_are_not_a_braid(torus):
    with pytest.raises(lk.NotABraidError):
        # the circle passes through the constant at t = 0
        lk.pairwise_linking(torus, circle((0.5, 0.5), 0.1), np.array([[0.6, 0.5]]))


def test_constant_loop_area_is_zero(torus):
    assert lk.area_via_linking(torus, np.array([[0.4, 0.4]]), resolution=128) == 0.0


def test_area_via_linking_small_grid(torus, sphere):
    r = 0.25
    assert lk.area_via_linking(torus, circle((0.5, 0.5), r, 512), 256) == pytest.approx(np.pi * r * r, rel=1e-2)
    th = 1.0
    val = lk.area_via_linking(sphere, sphere_circle(th, 512), 256)
    assert val == pytest.approx(2 * np.pi * (1 - np.cos(th)), rel=1e-2)


def test_disjoint_profile_is_constant(torus):
    u = np.broadcast_to(circle((0.3, 0.3), 0.05, 64), (9, 64, 2))
    v = np.broadcast_to(np.array([0.7, 0.7]), (9, 64, 2))
    prof = lk.linking_profile(torus, u, v)
    assert np.all(prof.values == 0)


@pytest.mark.parametrize("l", [1, 2, -1])
def test_model_profile_steps_at_half(l):
    # rows on either side of s = 1/2 read 0 and l
    cob = lk.model_cobordism(l, ns=32, nt=120)
    prof = lk.cylinder_profile(cob.model, cob, 0, 1)
    assert set(prof.values[prof.s < 0.5]) == {0}
    assert set(prof.values[prof.s > 0.5]) == {l}


def test_sweep_cobordism_linking(sphere):
    pts = geo.fibonacci_sphere(7)[[1, 3, 5]]
    for degrees in ([1, 0, 0], [2, -1, 0], [1, 1, 1]):
        cob = lk.sweep_cobordism(sphere, pts, degrees)
        assert lk.homological_linking(cob) == 2 * sum(degrees)
        assert not np.any(lk.cobordism_classes(cob))


def test_concatenation_needs_matching_ends(torus):
    a = constant_cobordism(torus, [(0.1, 0.1), (0.5, 0.5)])
    b = constant_cobordism(torus, [(0.2, 0.1), (0.5, 0.5)])
    with pytest.raises(lk.LinkingError):
        lk.concatenate(a, b)


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(seed=st.integers(0, 2**32 - 1), sphere_case=st.booleans())
def test_linking_axioms_hold(seed, sphere_case):
    model = lk.SurfaceModel.sphere(1.0) if sphere_case else lk.SurfaceModel.torus(1.0)
    rng = np.random.default_rng(seed)
    c1, c2, _ = random_cobordism_pair(model, rng)
    try:
        L1, L2 = lk.homological_linking(c1), lk.homological_linking(c2)
    except (lk.NonTransverseError, lk.CrossingAtSampleError):
        assume(False)  # non-generic sample; the axioms speak about transverse cobordisms
    assert lk.homological_linking(c1.reverse()) == -L1
    assert lk.homological_linking(c1.permute(rng.permutation(c1.k))) == L1
    assert lk.homological_linking(lk.concatenate(c1, c2)) == L1 + L2
    assert L1 == pairwise_linking_sum(model, c1)


@settings(max_examples=30, deadline=None)
@given(ka=st.integers(-3, 3), kb=st.integers(-3, 3), th=st.floats(0.2, 2.9))
def test_sphere_capping_shift(ka, kb, th):
    sphere = lk.SurfaceModel.sphere(1.0)
    loop = sphere_circle(th, 128)
    pt = np.array([[0.0, 1.0, 0.0]]) if abs(th - np.pi / 2) > 0.1 else np.array([[0.0, 0.0, 1.0]])
    base = lk.pairwise_linking(sphere, (loop, 0), (pt, 0))
    assert lk.pairwise_linking(sphere, (loop, ka), (pt, kb)) == base + ka + kb
    assert lk.pairwise_linking(sphere, (pt, kb), (loop, ka)) == base + ka + kb

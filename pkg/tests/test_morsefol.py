import numpy as np
import pytest

from capbraid import families as fam
from capbraid import linking as lk
from capbraid import morsefol as mf
from capbraid.checks import circle
from capbraid.hamparse import make_hamiltonian, scaled

SIX_POINTS = "0.05*(cos(2*pi*x) + cos(2*pi*y) + 0.8*cos(2*pi*(x - y)))"
SADDLE_CONNECTION = "0.05*cos(2*pi*x)*(2 + cos(2*pi*y))"


def shooting_counts(model, f, cx, n_seeds=64, radius=1e-3, h=1e-3, max_steps=6000):
    """Flow-line counts by shooting from a circle of seeds around each saddle.

    Ascending (descending) seeds split into arcs, one per unstable (stable)
    branch; the number of arcs ending at a given extremum is the number of
    flow lines.  Gradients come from central differences of f.
    """
    F = f.chart("T").H
    L = model.size

    def grad(P):
        d = 1e-6
        gx = (F(0.0, P[:, 0] + d, P[:, 1]) - F(0.0, P[:, 0] - d, P[:, 1])) / (2 * d)
        gy = (F(0.0, P[:, 0], P[:, 1] + d) - F(0.0, P[:, 0], P[:, 1] - d)) / (2 * d)
        g = np.stack([np.broadcast_to(gx, P.shape[:1]), np.broadcast_to(gy, P.shape[:1])], axis=-1)
        return g / np.maximum(np.linalg.norm(g, axis=-1, keepdims=True), 1e-300)

    def land(P, targets):
        D = P[:, None, :] - np.array([t.point for t in targets])[None]
        D -= L * np.round(D / L)
        dist = np.linalg.norm(D, axis=-1)
        return np.where(dist.min(axis=1) < 5 * h, dist.argmin(axis=1), -1)

    counts = {2: np.zeros((len(cx.generators(1)), len(cx.generators(2))), dtype=int),
              1: np.zeros((len(cx.generators(0)), len(cx.generators(1))), dtype=int)}
    th = 2 * np.pi * (np.arange(n_seeds) + 0.5) / n_seeds
    for j, s in enumerate(cx.generators(1)):
        for sign, targets, mat, col in ((1, cx.generators(2), counts[2], None), (-1, cx.generators(0), counts[1], j)):
            P = s.point + radius * np.stack([np.cos(th), np.sin(th)], axis=-1)
            label = np.full(n_seeds, -1)
            for _ in range(max_steps):
                live = label < 0
                if not live.any():
                    break
                Q = P[live]
                k1 = grad(Q)
                k2 = grad(Q + 0.5 * h * sign * k1)
                k3 = grad(Q + 0.5 * h * sign * k2)
                k4 = grad(Q + h * sign * k3)
                P[live] = Q + sign * h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
                label[live] = land(P[live], targets)
            assert (label >= 0).all(), "a seed never reached an extremum"
            arcs = [label[i] for i in range(n_seeds) if label[i] != label[i - 1]] or [label[0], label[0]]
            for a in arcs:
                if sign > 0:
                    mat[j, a] += 1
                else:
                    mat[a, col] += 1
    return counts


@pytest.fixture(scope="module")
def sinsin_complex(torus, H_sinsin):
    return mf.build_morse_complex(torus, H_sinsin)


@pytest.fixture(scope="module")
def sinsin_graph(sinsin_complex):
    return mf.peixoto_graph(sinsin_complex)


def test_sinsin_complex(torus, H_sinsin, sinsin_complex):
    cx = sinsin_complex
    assert [len(cx.generators(k)) for k in range(3)] == [2, 4, 2]
    assert cx.betti == (1, 2, 1)
    assert cx.d_squared_zero
    oracle = shooting_counts(torus, H_sinsin, cx)
    for k in (1, 2):
        assert np.array_equal(cx.counts[k], oracle[k])
        assert np.array_equal(cx.boundary[k], oracle[k] % 2)


def test_sphere_complex(sphere, H_height):
    cx = mf.build_morse_complex(sphere, H_height)
    assert [len(cx.generators(k)) for k in range(3)] == [1, 0, 1]
    assert cx.betti == (1, 0, 1)
    assert not mf.peixoto_graph(cx).edges


@pytest.mark.parametrize("expr", [SIX_POINTS, "0.05*(sin(2*pi*x) + sin(2*pi*y))"])
def test_other_torus_functions_against_shooting(torus, expr):
    f = make_hamiltonian(torus, expr)
    cx = mf.build_morse_complex(torus, f)
    assert cx.betti == (1, 2, 1)
    assert cx.d_squared_zero
    oracle = shooting_counts(torus, f, cx)
    for k in (1, 2):
        assert np.array_equal(cx.counts[k], oracle[k])


def test_six_point_function_has_nonzero_boundary(torus):
    cx = mf.build_morse_complex(torus, make_hamiltonian(torus, SIX_POINTS))
    assert len(cx.critical) == 6
    assert cx.boundary[1].any()
    # edge multiset matches the line counts
    graph = mf.peixoto_graph(cx)
    for k in (1, 2):
        upper, lower = cx.generators(k), cx.generators(k - 1)
        for a, lo in enumerate(lower):
            for b, up in enumerate(upper):
                assert graph.edge_pairs().count((up.id, lo.id)) == cx.counts[k][a, b]


def test_saddle_connection_is_rejected(torus):
    with pytest.raises(mf.NotMorseSmaleError):
        mf.build_morse_complex(torus, make_hamiltonian(torus, SADDLE_CONNECTION))


def test_constant_function_is_degenerate(torus):
    with pytest.raises(mf.MorseError):
        mf.build_morse_complex(torus, make_hamiltonian(torus, "0.1"))
    with pytest.raises(mf.MorseError):
        mf.trace_foliation(torus, make_hamiltonian(torus, "0.1"))


def test_time_dependent_function_is_unsupported(torus):
    with pytest.raises(mf.UnsupportedCaseError):
        mf.build_morse_complex(torus, make_hamiltonian(torus, "sin(2*pi*x)*cos(2*pi*t)"))


def test_restricted_complex(torus, H_sinsin, sinsin_orbits, sinsin_families, sinsin_complex,
                            sphere, H_height, height_orbits, height_families):
    (murm,) = sinsin_families[fam.MURM]
    rc = mf.restricted_complex(torus, murm, sinsin_orbits, H_sinsin)
    assert rc.betti == sinsin_complex.betti
    assert all(np.array_equal(rc.counts[k], sinsin_complex.counts[k]) for k in (1, 2))
    (smurm,) = height_families[fam.MURM]
    assert len(mf.restricted_complex(sphere, smurm, height_orbits, H_height).critical) == 2
    saddle = next(m for m in murm.members if m.mu == 0)
    partial = fam.BraidFamily(murm.kind, [m for m in murm.members if m is not saddle], True)
    with pytest.raises(mf.UnsupportedCaseError):
        mf.restricted_complex(torus, partial, sinsin_orbits, H_sinsin)


def test_sphere_leaves_are_meridians(sphere, H_height):
    atlas = mf.trace_foliation(sphere, H_height, leaf_grid=6, coverage_n=20)
    for leaf in atlas.leaves:
        lon = np.arctan2(leaf[:, 1], leaf[:, 0])
        keep = np.hypot(leaf[:, 0], leaf[:, 1]) > 1e-3
        spread = np.ptp(np.unwrap(lon[keep]))
        assert spread < 1e-6
    assert atlas.coverage == 1.0


def test_torus_separatrices_lie_on_diagonals(torus, H_sinsin):
    atlas = mf.trace_foliation(torus, H_sinsin, leaf_grid=4, coverage_n=20)
    assert len(atlas.separatrices) == 16
    for sep in atlas.separatrices:
        P = sep.path
        d = np.stack([(P[:, 0] - P[:, 1]) % 0.5, (P[:, 0] + P[:, 1]) % 0.5], axis=-1)
        d = np.minimum(d, 0.5 - d)
        assert d.min(axis=-1).max() < 1e-6


@pytest.mark.parametrize("which", ["sinsin", "height"])
def test_transversality_sign(torus, H_sinsin, sphere, H_height, which):
    model, H = (torus, H_sinsin) if which == "sinsin" else (sphere, H_height)
    atlas = mf.trace_foliation(model, H, leaf_grid=8, coverage_n=40)
    rep = mf.check_transversality(atlas, H)
    assert rep["violations"] == 0 and rep["samples"] > 0
    flipped = mf.check_transversality(atlas, scaled(H, -1.0))
    assert flipped["violations"] == 0
    assert flipped["sign"] == -rep["sign"]


def test_peixoto_edges_point_down(sinsin_graph):
    g = sinsin_graph
    assert len(g.vertices) == 8 and len(g.edges) == 16
    for u, l in g.edge_pairs():
        assert g.mu(u) - g.mu(l) == 1


def test_cochain_relation_constant_probe(sinsin_graph):
    probe = lk.CappedLoop(mf.far_probe_point(sinsin_graph)[None], 0)
    rel = mf.cochain_relation(sinsin_graph, probe)
    assert rel["holds"]
    assert all(e["I"] == 0 for e in rel["edges"])
    assert len(set(rel["ell"].values())) == 1


@pytest.mark.parametrize("index,edge_sign", [(2, -1), (0, 1)])
def test_cochain_relation_circle_probes(sinsin_graph, index, edge_sign):
    g = sinsin_graph
    v = next(c for c in g.vertices if c.index == index)
    rel = mf.cochain_relation(g, lk.CappedLoop(circle(v.point, 0.05), 0))
    assert rel["holds"]
    assert rel["ell"][str(v.id)] == 1
    assert sum(abs(x) for x in rel["ell"].values()) == 1
    for e in rel["edges"]:
        touches = v.id in e["edge"]
        assert e["I"] == (edge_sign if touches else 0)


def test_edge_windows_and_profiles(sinsin_graph):
    win = mf.edge_window_checks(sinsin_graph)
    assert win["holds"]
    profiles = mf.edge_profiles(sinsin_graph)
    assert profiles and all(p["nondecreasing"] for p in profiles)
    # max-to-saddle cylinders never wind around a minimum
    mins = {c.id for c in sinsin_graph.vertices if c.index == 0}
    for p in profiles:
        if sinsin_graph.mu(p["edge"][0]) == 1 and p["third"] in mins:
            assert set(p["values"]) == {0}

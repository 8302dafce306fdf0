import numpy as np
import pytest
from scipy.linalg import expm

from capbraid.dynamics import FlowConfig, action, integrate_flow, monodromy, search_periodic_orbits
from capbraid.geometry import SurfacePoint
from capbraid.hamparse import make_hamiltonian

from conftest import orbit_at

EPS = 0.05
MAXIMA = [(0.25, 0.25), (0.75, 0.75)]
MINIMA = [(0.25, 0.75), (0.75, 0.25)]
SADDLES = [(0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.5, 0.5)]


def test_zero_hamiltonian_gives_constant_path(torus):
    path = integrate_flow(torus, make_hamiltonian(torus, "0"), SurfacePoint("T", (0.3, 0.4)), 0.0, 1.0)
    assert np.allclose(path.points, [0.3, 0.4])


def test_linear_hamiltonian_translates(torus):
    # X = (-H_y, H_x): H = -y moves x forward at unit speed
    path = integrate_flow(torus, make_hamiltonian(torus, "-y"), SurfacePoint("T", (0.2, 0.4)), 0.0, 1.0)
    # lifted coordinates: displacement exactly one period, which is 0 mod L
    disp = path.points[-1] - path.points[0]
    assert disp == pytest.approx([1.0, 0.0], abs=1e-12)
    mid = path.chart_coords[len(path.times) // 4]
    assert (mid[0] - 0.2) % 1.0 == pytest.approx(0.25, abs=1e-9)


def test_pole_is_fixed(sphere, H_height):
    path = integrate_flow(sphere, H_height, SurfacePoint("N", (0.0, 0.0)), 0.0, 1.0)
    assert np.allclose(path.points, [0.0, 0.0, 1.0], atol=1e-14)


def test_torus_orbit_census(sinsin_orbits):
    # all eight critical points of the product of sines, nothing else
    assert len(sinsin_orbits) == 8
    for p in MAXIMA + MINIMA + SADDLES:
        orbit_at(sinsin_orbits, p)
    assert all(o.is_constant and o.nondegenerate for o in sinsin_orbits)


def test_sphere_orbit_census(height_orbits):
    assert len(height_orbits) == 2
    assert sorted(round(float(o.basepoint()[2])) for o in height_orbits) == [-1, 1]


def test_zero_hamiltonian_is_all_degenerate(torus):
    res = search_periodic_orbits(torus, make_hamiltonian(torus, "0"), FlowConfig(seed_grid=6))
    assert res.orbits == []
    assert len(res.degenerate) > 0


def test_search_is_independent_of_thread_count(torus, H_sinsin, sinsin_orbits):
    other = search_periodic_orbits(torus, H_sinsin, FlowConfig(threads=3)).orbits
    assert [o.summary() for o in other] == [o.summary() for o in sinsin_orbits]


def test_saddle_monodromy_matches_linearization(torus, H_sinsin, sinsin_orbits):
    o = orbit_at(sinsin_orbits, (0.0, 0.0))
    M = monodromy(torus, H_sinsin, o)
    # H ~ eps (2 pi)^2 x y near the origin; X = (-H_y, H_x) = J grad H
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    hess = EPS * (2 * np.pi) ** 2 * np.array([[0.0, 1.0], [1.0, 0.0]])
    ref = expm(J @ hess)
    assert np.sort(np.linalg.eigvals(M).real) == pytest.approx(np.sort(np.linalg.eigvals(ref).real), rel=1e-4)
    assert np.linalg.det(M) == pytest.approx(1.0, abs=1e-6)
    lam = np.exp(4 * np.pi**2 * EPS)
    assert max(np.linalg.eigvals(M).real) == pytest.approx(lam, rel=1e-4)


def test_pole_monodromy_is_rotation(sphere, H_height, height_orbits):
    for o in height_orbits:
        M = monodromy(sphere, H_height, o)
        assert abs(np.trace(M)) < 2
        assert np.linalg.det(M) == pytest.approx(1.0, abs=1e-6)
        assert M @ M.T == pytest.approx(np.eye(2), abs=1e-6)


def test_actions_of_constant_orbits(torus, H_sinsin, sinsin_orbits, sphere, H_height, height_orbits):
    for p in MAXIMA:
        assert action(torus, H_sinsin, orbit_at(sinsin_orbits, p)) == pytest.approx(EPS, abs=1e-12)
    for p in MINIMA:
        assert action(torus, H_sinsin, orbit_at(sinsin_orbits, p)) == pytest.approx(-EPS, abs=1e-12)
    north = next(o for o in height_orbits if o.basepoint()[2] > 0)
    top = 0.5 * 2 * np.pi
    assert action(sphere, H_height, north) == pytest.approx(top, rel=1e-12)
    assert action(sphere, H_height, north, 1) == pytest.approx(top - 4 * np.pi, rel=1e-12)


def test_period_two_search_finds_only_iterates(torus, H_sinsin, sinsin_orbits):
    pm = search_periodic_orbits(torus, H_sinsin, FlowConfig(), period=2).orbits

    def key(o):
        return tuple(np.round(o.basepoint(), 6) % 1.0)

    assert sorted(map(key, pm)) == sorted(map(key, sinsin_orbits))

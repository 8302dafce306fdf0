import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capbraid.index import DegenerateOrbitError, conley_zehnder, cz_from_path, index_data, winding_bounds

from conftest import orbit_at
from test_dynamics import MAXIMA, MINIMA, SADDLES


def rotation_path(turns_clockwise: float, n: int = 400) -> np.ndarray:
    th = -2 * np.pi * turns_clockwise * np.linspace(0, 1, n)
    c, s = np.cos(th), np.sin(th)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def test_torus_morse_normalization(torus, H_sinsin, sinsin_orbits):
    for pts, mu in ((MAXIMA, 1), (SADDLES, 0), (MINIMA, -1)):
        for p in pts:
            assert conley_zehnder(torus, H_sinsin, orbit_at(sinsin_orbits, p)) == mu


def test_sphere_poles_and_recapping(sphere, H_height, height_orbits):
    for o in height_orbits:
        mu0 = 1 if o.basepoint()[2] > 0 else -1
        for k in range(-3, 4):
            assert conley_zehnder(sphere, H_height, o, k) == mu0 - 4 * k


@pytest.mark.parametrize("alpha,mu", [(0.01, 1), (0.5, 1), (0.99, 1), (1.3, 3), (-0.2, -1), (-1.4, -3)])
def test_elliptic_rotation_paths(alpha, mu):
    assert cz_from_path(rotation_path(alpha)) == mu


def test_hyperbolic_path_has_even_index():
    t = np.linspace(0, 1, 200)
    path = np.zeros((200, 2, 2))
    path[:, 0, 0] = np.exp(t)
    path[:, 1, 1] = np.exp(-t)
    assert cz_from_path(path) == 0


def test_identity_endpoint_is_degenerate():
    with pytest.raises(DegenerateOrbitError):
        cz_from_path(rotation_path(1.0))


@pytest.mark.parametrize("mu,ab", [(1, (-1, 0)), (0, (0, 0)), (-1, (0, 1)), (2, (-1, -1)), (3, (-2, -1))])
def test_winding_bounds_examples(mu, ab):
    assert winding_bounds(mu) == ab


@given(st.integers(-10**6, 10**6))
def test_index_relations(mu):
    d = index_data(mu)
    assert -d.mu == d.a + d.b == 2 * d.a + d.p
    assert d.p == mu % 2
    assert d.a <= d.b

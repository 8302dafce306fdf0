import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capbraid import geometry as geo
from capbraid.geometry import CappingClass, GeometryError, SurfacePoint


def test_torus_transition_is_identity(torus):
    p = SurfacePoint("T", (0.3, 0.7))
    assert geo.chart_transition(torus, p, "T") == p


def test_sphere_north_origin_is_outside_overlap(sphere):
    with pytest.raises(GeometryError):
        geo.chart_transition(sphere, SurfacePoint("N", (0.0, 0.0)), "S")


def test_sphere_unit_point_maps_to_unit_point(sphere):
    q = geo.chart_transition(sphere, SurfacePoint("N", (1.0, 0.0)), "S")
    assert q.chart == "S"
    assert np.allclose(q.coords, (1.0, 0.0), atol=1e-15)


def test_sphere_transition_round_trip(sphere):
    p = SurfacePoint("N", (0.3, -1.7))
    back = geo.chart_transition(sphere, geo.chart_transition(sphere, p, "S"), "N")
    assert np.allclose(back.coords, p.coords, atol=1e-14)


def test_transition_and_embedding_agree(sphere):
    z = np.array([0.4, 0.9])
    w = geo.sphere_transition(z, 1.0)
    assert np.allclose(geo.chart_to_embed(sphere, "N", z), geo.chart_to_embed(sphere, "S", w), atol=1e-14)


def test_transition_preserves_area_form(sphere):
    # orientation preserving: pulled-back density equals the density
    z = np.array([0.7, -0.2])
    J = geo.sphere_transition_jacobian(z, 1.0)
    w = geo.sphere_transition(z, 1.0)
    rho_z = geo.chart_density(sphere, z)
    rho_w = geo.chart_density(sphere, w)
    assert np.linalg.det(J) > 0
    assert rho_w * np.linalg.det(J) == pytest.approx(rho_z, rel=1e-12)


def test_pairing_standard_and_antisymmetric(torus, sphere):
    p = SurfacePoint("T", (0.1, 0.2))
    assert geo.symplectic_pairing(torus, p, (1, 0), (0, 1)) == 1.0
    assert geo.symplectic_pairing(torus, p, (0.3, 0.4), (0.3, 0.4)) == 0.0
    q = SurfacePoint("N", (0.5, 0.5))
    assert geo.symplectic_pairing(sphere, q, (1, 2), (1, 2)) == 0.0


def test_sphere_density_integrates_to_area(sphere):
    # polar quadrature of the chart density over the whole plane
    u = (np.arange(4000) + 0.5) / 4000  # r = tan(pi u / 2)
    r = np.tan(np.pi * u / 2)
    dr = np.pi / 2 / np.cos(np.pi * u / 2) ** 2 / 4000
    rho = geo.chart_density(sphere, np.stack([r, np.zeros_like(r)], axis=-1))
    total = 2 * np.pi * np.sum(rho * r * dr)
    assert total == pytest.approx(4 * np.pi, rel=1e-4)
    assert geo.chart_density(sphere, np.zeros(2)) == pytest.approx(4.0)


def test_constant_loop_has_zero_area(torus, sphere):
    assert geo.capping_area(torus, np.array([[0.2, 0.3]])) == 0.0
    assert geo.capping_area(sphere, np.array([[0.0, 0.6, 0.8]])) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("theta", [0.3, 1.0, np.pi / 2, 2.4])
def test_sphere_cap_area(sphere, theta):
    t = 2 * np.pi * np.arange(512) / 512
    loop = np.stack([np.sin(theta) * np.cos(t), np.sin(theta) * np.sin(t), np.full_like(t, np.cos(theta))], axis=-1)
    assert geo.capping_area(sphere, loop) == pytest.approx(2 * np.pi * (1 - np.cos(theta)), rel=1e-4)
    assert geo.capping_area(sphere, loop, 1) == pytest.approx(2 * np.pi * (1 - np.cos(theta)) + 4 * np.pi, rel=1e-4)


@pytest.mark.parametrize("r", [0.05, 0.2])
def test_torus_circle_area_sign_follows_orientation(torus, r):
    t = 2 * np.pi * np.arange(1024) / 1024
    loop = np.stack([0.9 + r * np.cos(t), 0.1 + r * np.sin(t)], axis=-1) % 1.0
    assert geo.capping_area(torus, loop) == pytest.approx(np.pi * r * r, rel=1e-4)
    assert geo.capping_area(torus, loop[::-1]) == pytest.approx(-np.pi * r * r, rel=1e-4)


def test_first_chern_numbers(torus, sphere):
    assert geo.c1_of_class(torus, 0) == 0
    assert geo.c1_of_class(sphere, CappingClass(1)) == 2
    assert geo.c1_of_class(sphere, -3) == -6
    with pytest.raises(GeometryError):
        geo.c1_of_class(torus, 1)


def test_areas(torus, sphere):
    assert torus.area == 1.0
    assert sphere.area == pytest.approx(4 * np.pi)
    assert geo.SurfaceModel.torus(20.0).area == 400.0


@given(st.floats(1e-3, 1e3), st.floats(0, 2 * np.pi), st.floats(0.2, 5.0))
def test_sphere_charts_round_trip(rad, ang, R):
    z = np.array([rad * np.cos(ang), rad * np.sin(ang)])
    w = geo.sphere_transition(z, R)
    assert np.allclose(geo.sphere_transition(w, R), z, rtol=1e-10, atol=1e-12 * rad)
    P = geo.chart_to_embed(geo.SurfaceModel.sphere(R), "N", z)
    assert np.allclose(geo.embed_to_chart(geo.SurfaceModel.sphere(R), P, "N"), z, rtol=1e-7, atol=1e-9)

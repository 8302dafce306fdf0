"""Conley-Zehnder indices of capped orbits on surfaces and winding bounds.

The index is normalized so that a C^2-small autonomous Morse function gives
``Morse index - 1``: maxima 1, saddles 0, minima -1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .dynamics import OrbitRecord
from .geometry import SurfaceModel


class DegenerateOrbitError(ValueError):
    pass


@dataclass(frozen=True)
class IndexData:
    mu: int
    a: int
    b: int
    p: int

    def __post_init__(self):
        if -self.mu != self.a + self.b or -self.mu != 2 * self.a + self.p or self.p != self.mu % 2:
            raise ValueError(f"inconsistent index data {self}")

    def to_dict(self) -> dict:
        return {"mu": self.mu, "a": self.a, "b": self.b, "p": self.p}


def clockwise_turns(path: np.ndarray, v=(1.0, 0.0)) -> float:
    """Clockwise rotation, in turns, of ``Psi(t) v`` along a sampled path (n, 2, 2)."""
    w = path @ np.asarray(v, dtype=float)
    ang = np.unwrap(np.arctan2(w[:, 1], w[:, 0]))
    return float(-(ang[-1] - ang[0]) / (2 * np.pi))


def cz_from_path(path: np.ndarray, degeneracy_tol: float = 1e-9) -> int:
    """Index of a non-degenerate symplectic path in dimension 2 starting at the identity.

    Positive hyperbolic endpoints give twice the (integer) rotation count;
    elliptic and negative hyperbolic endpoints give ``2 floor(r) + 1`` where
    ``r`` is the clockwise rotation in turns.
    """
    M = path[-1]
    if np.min(np.abs(np.linalg.eigvals(M) - 1.0)) <= degeneracy_tol:
        raise DegenerateOrbitError("endpoint has eigenvalue 1")
    r = clockwise_turns(path)
    if np.trace(M) > 2:
        return 2 * int(np.round(r))
    return 2 * int(np.floor(r)) + 1


def frame_capping_offset(model: SurfaceModel, orbit: OrbitRecord) -> int:
    """Class of the frame chart's contraction disk relative to the base capping."""
    if not model.is_sphere or orbit.frame_chart == "N":
        return 0
    w = geo.embed_to_chart(model, orbit.loop, "S")
    if np.max(np.hypot(w[:, 0], w[:, 1])) < 1e-12:
        return 0
    return geo.chart_winding(w)


def conley_zehnder(model: SurfaceModel, H, orbit: OrbitRecord, capping: int | geo.CappingClass = 0) -> int:
    """Index of the orbit with capping ``k [S^2]`` (H is accepted for API symmetry)."""
    k = capping.k if isinstance(capping, geo.CappingClass) else int(capping)
    geo.CappingClass(k).check(model)
    if not orbit.nondegenerate:
        raise DegenerateOrbitError(f"orbit {orbit.id} is degenerate")
    if orbit.frame_path is None:
        raise ValueError("orbit record carries no linearized path")
    mu_chart = cz_from_path(orbit.frame_path)
    mu_base = mu_chart + 4 * frame_capping_offset(model, orbit)
    return mu_base - 2 * geo.c1_of_class(model, k)


def winding_bounds(mu: int) -> tuple[int, int]:
    """(a, b) with mu in {2k-1, 2k} giving a = -k and mu in {2k, 2k+1} giving b = -k."""
    mu = int(mu)
    return -((mu + 1) // 2), -(mu // 2)


def index_data(mu: int) -> IndexData:
    a, b = winding_bounds(mu)
    return IndexData(int(mu), a, b, int(mu) % 2)

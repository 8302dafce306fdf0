"""Surface models: flat torus and round sphere, charts, area form, cappings.

Points on a surface are carried around in two ways:

* chart coordinates, used by the integrator (``SurfacePoint``);
* *embedded* coordinates used by everything that handles loops and strands.
  On the torus these are lifted plane coordinates (so a loop keeps its lift),
  on the sphere they are ambient coordinates in R^3.

Sphere charts are stereographic.  The north chart ``N`` projects from the
south pole, so the north pole sits at the origin, ``z = R (X + iY) / (R + Z)``.
The south chart ``S`` is ``w = R^2 / z``; it projects from the north pole and
is orientation preserving with respect to the outward normal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TORUS = "torus"
SPHERE = "sphere"

# sphere chart switching threshold, in units of R
CHART_SWITCH = 2.0


class GeometryError(ValueError):
    """Raised for invalid points, charts or loops."""


@dataclass(frozen=True)
class SurfaceModel:
    kind: str
    size: float

    def __post_init__(self):
        if self.kind not in (TORUS, SPHERE):
            raise GeometryError(f"unknown surface kind {self.kind!r}")
        if not (self.size > 0 and np.isfinite(self.size)):
            raise GeometryError("surface size must be a positive real")

    @classmethod
    def torus(cls, L: float = 1.0) -> "SurfaceModel":
        return cls(TORUS, float(L))

    @classmethod
    def sphere(cls, R: float = 1.0) -> "SurfaceModel":
        return cls(SPHERE, float(R))

    @property
    def is_sphere(self) -> bool:
        return self.kind == SPHERE

    @property
    def area(self) -> float:
        if self.is_sphere:
            return 4.0 * np.pi * self.size**2
        return self.size**2

    @property
    def minimal_chern(self) -> int:
        return 2 if self.is_sphere else 0

    @property
    def charts(self) -> tuple[str, ...]:
        return ("N", "S") if self.is_sphere else ("T",)

    @property
    def embed_dim(self) -> int:
        return 3 if self.is_sphere else 2

    def to_dict(self) -> dict:
        key = "R" if self.is_sphere else "L"
        return {"kind": self.kind, key: self.size}


@dataclass(frozen=True)
class SurfacePoint:
    chart: str
    coords: tuple[float, float]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)


@dataclass(frozen=True)
class CappingClass:
    """Capping class ``k [S^2]``; always 0 on the torus."""

    k: int = 0

    def check(self, model: SurfaceModel) -> "CappingClass":
        if not model.is_sphere and self.k != 0:
            raise GeometryError("torus cappings carry the trivial class only")
        return self


def c1_of_class(model: SurfaceModel, capping: CappingClass | int) -> int:
    k = capping.k if isinstance(capping, CappingClass) else int(capping)
    if not model.is_sphere:
        CappingClass(k).check(model)
        return 0
    return 2 * k


# ----------------------------------------------------------------- charts

def _check_chart(model: SurfaceModel, chart: str) -> None:
    if chart not in model.charts:
        raise GeometryError(f"chart {chart!r} not in atlas {model.charts}")


def sphere_transition(z: np.ndarray, R: float) -> np.ndarray:
    """``z -> R^2 / z`` on (..., 2) arrays; the map is its own inverse."""
    z = np.asarray(z, dtype=float)
    r2 = z[..., 0] ** 2 + z[..., 1] ** 2
    out = np.empty_like(z)
    out[..., 0] = R * R * z[..., 0] / r2
    out[..., 1] = -R * R * z[..., 1] / r2
    return out


def sphere_transition_jacobian(z: np.ndarray, R: float) -> np.ndarray:
    """Jacobian of ``z -> R^2/z`` as (..., 2, 2) real matrices."""
    z = np.asarray(z, dtype=float)
    x, y = z[..., 0], z[..., 1]
    r4 = (x * x + y * y) ** 2
    # derivative -R^2/z^2 = a + ib acts as [[a, -b], [b, a]]
    a = -R * R * (x * x - y * y) / r4
    b = R * R * 2 * x * y / r4
    J = np.empty(z.shape[:-1] + (2, 2))
    J[..., 0, 0] = a
    J[..., 0, 1] = -b
    J[..., 1, 0] = b
    J[..., 1, 1] = a
    return J


def chart_transition(model: SurfaceModel, p: SurfacePoint, target: str) -> SurfacePoint:
    _check_chart(model, p.chart)
    _check_chart(model, target)
    z = p.array
    if not np.all(np.isfinite(z)):
        raise GeometryError("non-finite chart coordinates")
    if not model.is_sphere:
        L = model.size
        return SurfacePoint(target, (float(z[0] % L), float(z[1] % L)))
    if target == p.chart:
        return p
    if np.hypot(z[0], z[1]) < 1e-300:
        raise GeometryError(f"point {tuple(z)} is a pole of chart {target!r}, outside the overlap")
    w = sphere_transition(z, model.size)
    if not np.all(np.isfinite(w)):
        raise GeometryError("point outside chart overlap")
    return SurfacePoint(target, (float(w[0]), float(w[1])))


def chart_density(model: SurfaceModel, z: np.ndarray) -> np.ndarray:
    """Density rho of the area form in chart coordinates, ``omega = rho dx^dy``."""
    z = np.asarray(z, dtype=float)
    if not model.is_sphere:
        return np.ones(z.shape[:-1])
    R = model.size
    r2 = z[..., 0] ** 2 + z[..., 1] ** 2
    return 4.0 * R**4 / (R * R + r2) ** 2


def symplectic_pairing(model: SurfaceModel, p: SurfacePoint, v, w) -> float:
    _check_chart(model, p.chart)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return float(chart_density(model, p.array) * (v[0] * w[1] - v[1] * w[0]))


def chart_to_embed(model: SurfaceModel, chart: str, z: np.ndarray) -> np.ndarray:
    """Chart coordinates (..., 2) to embedded coordinates."""
    z = np.asarray(z, dtype=float)
    if not model.is_sphere:
        return z.copy()
    R = model.size
    x, y = z[..., 0], z[..., 1]
    r2 = x * x + y * y
    d = R * R + r2
    out = np.empty(z.shape[:-1] + (3,))
    out[..., 0] = 2 * R * R * x / d
    if chart == "N":
        out[..., 1] = 2 * R * R * y / d
        out[..., 2] = R * (R * R - r2) / d
    else:
        out[..., 1] = -2 * R * R * y / d
        out[..., 2] = -R * (R * R - r2) / d
    return out


def embed_to_chart(model: SurfaceModel, P: np.ndarray, chart: str) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if not model.is_sphere:
        return P[..., :2].copy()
    R = model.size
    P = project_sphere(P, R)
    out = np.empty(P.shape[:-1] + (2,))
    if chart == "N":
        d = R + P[..., 2]
        out[..., 0] = R * P[..., 0] / d
        out[..., 1] = R * P[..., 1] / d
    else:
        d = R - P[..., 2]
        out[..., 0] = R * P[..., 0] / d
        out[..., 1] = -R * P[..., 1] / d
    return out


def project_sphere(P: np.ndarray, R: float) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    return R * P / np.linalg.norm(P, axis=-1, keepdims=True)


def preferred_chart(model: SurfaceModel, P: np.ndarray) -> np.ndarray:
    """Chart label per embedded point: north chart on the upper hemisphere."""
    P = np.asarray(P, dtype=float)
    if not model.is_sphere:
        return np.full(P.shape[:-1], "T")
    return np.where(P[..., 2] >= 0, "N", "S")


def point_from_embed(model: SurfaceModel, P) -> SurfacePoint:
    P = np.asarray(P, dtype=float)
    if not model.is_sphere:
        L = model.size
        return SurfacePoint("T", (float(P[0] % L), float(P[1] % L)))
    chart = "N" if P[2] >= 0 else "S"
    z = embed_to_chart(model, P, chart)
    return SurfacePoint(chart, (float(z[0]), float(z[1])))


def surface_distance(model: SurfaceModel, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Chord distance on the sphere, lattice-reduced distance on the torus."""
    d = np.asarray(P, dtype=float) - np.asarray(Q, dtype=float)
    if not model.is_sphere:
        L = model.size
        d = d - L * np.round(d / L)
    return np.linalg.norm(d, axis=-1)


def normal_frame(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Oriented orthonormal tangent frame (e1, e2) at unit vectors c (..., 3)."""
    c = np.asarray(c, dtype=float)
    ax = np.zeros_like(c)
    use_y = np.abs(c[..., 0]) > 0.9
    ax[..., 0] = np.where(use_y, 0.0, 1.0)
    ax[..., 1] = np.where(use_y, 1.0, 0.0)
    e1 = ax - np.sum(ax * c, axis=-1, keepdims=True) * c
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(c, e1)
    return e1, e2


def centred_chart(P: np.ndarray, c: np.ndarray, e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    """Stereographic coordinates of unit vectors P from the antipode of c.

    Conformal and orientation preserving; c maps to the origin.
    """
    P = np.asarray(P, dtype=float)
    den = 1.0 + np.sum(P * c, axis=-1)
    return np.stack([np.sum(P * e1, axis=-1) / den, np.sum(P * e2, axis=-1) / den], axis=-1)


# ----------------------------------------------------------------- loops

def as_loop(model: SurfaceModel, loop) -> np.ndarray:
    """Validate a closed polyline (n, d) of embedded samples (last != first)."""
    loop = np.asarray(loop, dtype=float)
    if loop.ndim == 1:
        loop = loop[None, :]
    if loop.ndim != 2 or loop.shape[1] != model.embed_dim:
        raise GeometryError(f"loop must have shape (n, {model.embed_dim})")
    if not np.all(np.isfinite(loop)):
        raise GeometryError("loop contains non-finite samples")
    if model.is_sphere:
        loop = project_sphere(loop, model.size)
    return loop


def unwrap_torus_loop(loop: np.ndarray, L: float) -> np.ndarray:
    """Make consecutive torus samples continuous in the lift."""
    steps = np.diff(loop, axis=0)
    steps -= L * np.round(steps / L)
    return np.concatenate([loop[:1], loop[:1] + np.cumsum(steps, axis=0)])


def lift_displacement(loop: np.ndarray, L: float) -> np.ndarray:
    """Lattice displacement of a lifted closed loop (the last step closes it)."""
    closing = loop[0] - loop[-1]
    return np.round((closing - L * np.round(closing / L) - closing) / L).astype(int)


def periodic_resample(loop: np.ndarray, n: int) -> np.ndarray:
    """Resample a closed loop to n uniform samples by periodic cubic splines."""
    from scipy.interpolate import CubicSpline

    loop = np.asarray(loop, dtype=float)
    m = loop.shape[0]
    if m == n:
        return loop.copy()
    if m == 1:
        return np.repeat(loop, n, axis=0)
    t = np.arange(m + 1) / m
    closed = np.concatenate([loop, loop[:1]])
    out = CubicSpline(t, closed, bc_type="periodic", axis=0)(np.arange(n) / n)
    return out


def _shoelace(loop: np.ndarray) -> float:
    nxt = np.roll(loop, -1, axis=0)
    return 0.5 * float(np.sum(loop[:, 0] * nxt[:, 1] - nxt[:, 0] * loop[:, 1]))


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)


def _chart_primitive_integral(z: np.ndarray, R: float) -> float:
    """Integral of ``2R^2 (x dy - y dx) / (R^2 + r^2)`` along a closed chart polygon.

    Each straight segment is integrated with 4-point Gauss quadrature, which
    is symmetric under reversing the segment.
    """
    a = z
    b = np.roll(z, -1, axis=0)
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    total = 0.0
    for xg, wg in zip(_GAUSS_X, _GAUSS_W):
        lam = 0.5 * (1.0 + xg)
        p = (1 - lam) * a + lam * b
        r2 = p[:, 0] ** 2 + p[:, 1] ** 2
        total += 0.5 * wg * np.sum(2 * R * R * cross / (R * R + r2))
    return float(total)


def chart_winding(z: np.ndarray, centre=(0.0, 0.0)) -> int:
    """Winding number of a closed polygon around a point (principal increments)."""
    d = np.asarray(z, dtype=float) - np.asarray(centre, dtype=float)
    ang = np.arctan2(d[:, 1], d[:, 0])
    inc = np.diff(np.concatenate([ang, ang[:1]]))
    inc = (inc + np.pi) % (2 * np.pi) - np.pi
    return int(np.round(inc.sum() / (2 * np.pi)))


def base_capping_area(model: SurfaceModel, loop) -> float:
    """Area of the class-0 capping.

    Torus: signed shoelace area of the lift.  Sphere: the disk through the
    north pole, i.e. the radial contraction to the origin of the north chart.
    """
    loop = as_loop(model, loop)
    if not model.is_sphere:
        lifted = unwrap_torus_loop(loop, model.size)
        if np.any(lift_displacement(lifted, model.size) != 0):
            raise GeometryError("loop is not contractible on the torus")
        return _shoelace(lifted)
    R = model.size
    if np.min(loop[:, 2]) > -R * (1 - 1e-6):
        return _chart_primitive_integral(embed_to_chart(model, loop, "N"), R)
    if np.max(loop[:, 2]) >= R * (1 - 1e-6):
        raise GeometryError("loop passes through both poles; choose a rotated frame")
    w = embed_to_chart(model, loop, "S")
    # in the south chart the primitive has the opposite sign convention
    return _chart_primitive_integral(w, R) - 4 * np.pi * R * R * chart_winding(w)


def capping_area(model: SurfaceModel, loop, capping: CappingClass | int = 0) -> float:
    k = capping.k if isinstance(capping, CappingClass) else int(capping)
    CappingClass(k).check(model)
    return base_capping_area(model, loop) + k * model.area


def rotation_to_south(q: np.ndarray) -> np.ndarray:
    """Proper rotation taking the unit vector q to (0, 0, -1)."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q)
    s = np.array([0.0, 0.0, -1.0])
    v = np.cross(q, s)
    c = float(q @ s)
    if np.linalg.norm(v) < 1e-12:
        if c > 0:
            return np.eye(3)
        return np.diag([1.0, -1.0, -1.0])
    K = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + K + K @ K / (1 + c)


def fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    phi = np.pi * (1 + 5**0.5) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)

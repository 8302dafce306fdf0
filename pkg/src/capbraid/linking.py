"""Crossings of strand graphs, homological linking and pairwise linking numbers.

A discrete cobordism holds ``k`` strands sampled on an ``S x T`` grid of
``(s, t) in [0, 1] x S^1`` in embedded coordinates (torus lifts or points of
the sphere in R^3).  Between samples a strand is the bilinear interpolant
(projected back to the sphere), and crossings of that interpolant are
counted with the sign of ``det(d_s d, d_t d)`` for ``d = h_j - h_i`` in an
oriented chart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .geometry import SurfaceModel


class LinkingError(ValueError):
    pass


class NotABraidError(LinkingError):
    pass


class NonTransverseError(LinkingError):
    pass


class CrossingAtSampleError(LinkingError):
    pass


TRANSVERSALITY_TOL = 1e-8
RESOLUTION_TOL = 1e-9


# ------------------------------------------------------------ capped loops

@dataclass
class CappedLoop:
    loop: np.ndarray
    capping: int = 0


def as_capped(obj, capping: int | None = None) -> CappedLoop:
    if isinstance(obj, CappedLoop):
        out = obj
    elif hasattr(obj, "loop") and hasattr(obj, "capping"):
        out = CappedLoop(np.asarray(obj.loop, dtype=float), int(obj.capping))
    elif isinstance(obj, tuple) and len(obj) == 2:
        out = CappedLoop(np.asarray(obj[0], dtype=float), int(obj[1]))
    else:
        out = CappedLoop(np.asarray(obj, dtype=float), 0)
    if capping is not None:
        out = CappedLoop(out.loop, int(capping))
    return out


# ---------------------------------------------------------------- windings

def principal_increments(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Angle from vectors a to b in (-pi, pi]; exact antipodes are split
    antisymmetrically by comparing the vectors lexicographically."""
    cross = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    dot = a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
    inc = np.arctan2(cross, dot)
    tie = (cross == 0) & (dot < 0)
    if np.any(tie):
        greater = (a[..., 0] > b[..., 0]) | ((a[..., 0] == b[..., 0]) & (a[..., 1] > b[..., 1]))
        inc = np.where(tie, np.where(greater, np.pi, -np.pi), inc)
    return inc


def polygon_winding(d: np.ndarray) -> np.ndarray:
    """Winding numbers about the origin of closed polygons d (..., n, 2)."""
    if np.any(np.all(d == 0, axis=-1)):
        raise CrossingAtSampleError("polygon vertex at the origin")
    inc = principal_increments(d, np.roll(d, -1, axis=-2))
    return np.rint(inc.sum(axis=-1) / (2 * np.pi)).astype(int)


def winding_numbers(poly: np.ndarray, points: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """Winding numbers of one closed polygon around many points (ray crossings)."""
    poly = np.asarray(poly, dtype=float)
    points = np.asarray(points, dtype=float)
    a = poly
    b = np.roll(poly, -1, axis=0)
    out = np.zeros(points.shape[0], dtype=int)
    for lo in range(0, points.shape[0], chunk):
        p = points[lo:lo + chunk]
        px, py = p[:, None, 0], p[:, None, 1]
        ax, ay, bx, by = a[None, :, 0], a[None, :, 1], b[None, :, 0], b[None, :, 1]
        side = (bx - ax) * (py - ay) - (px - ax) * (by - ay)
        up = (ay <= py) & (by > py) & (side > 0)
        down = (ay > py) & (by <= py) & (side < 0)
        out[lo:lo + chunk] = up.sum(axis=1) - down.sum(axis=1)
    return out


# ------------------------------------------------------- pairwise linking

def _common_samples(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if x.shape[0] == y.shape[0]:
        return x, y
    n = max(x.shape[0], y.shape[0])
    return geo.periodic_resample(x, n), geo.periodic_resample(y, n)


def _lattice_winding(D: np.ndarray, L: float) -> int:
    """Sum over lattice points nL of the winding of the closed polygon D around nL."""
    lo = np.floor(D.min(axis=0) / L).astype(int)
    hi = np.ceil(D.max(axis=0) / L).astype(int)
    total = 0
    for nx in range(lo[0], hi[0] + 1):
        for ny in range(lo[1], hi[1] + 1):
            total += int(polygon_winding(D - L * np.array([nx, ny]))[()])
    return total


def choose_projection_point(model: SurfaceModel, loops: list[np.ndarray]) -> np.ndarray:
    """A point of the sphere far from every given loop sample (deterministic)."""
    R = model.size
    cands = R * np.concatenate([np.array([[0, 0, -1.0], [0, 0, 1.0]]), geo.fibonacci_sphere(256)])
    pts = np.concatenate([np.atleast_2d(lp) for lp in loops])
    best, best_d = None, -1.0
    for c in cands:
        d = float(np.min(np.linalg.norm(pts - c, axis=-1)))
        if d > best_d + 1e-12:
            best, best_d = c, d
    return best


def projection_chart(model: SurfaceModel, q: np.ndarray):
    """Stereographic chart projecting from q (q goes to infinity)."""
    Rm = geo.rotation_to_south(q)
    R = model.size

    def chart(P):
        return geo.embed_to_chart(model, np.asarray(P) @ Rm.T, "N")

    def inverse(z):
        return geo.chart_to_embed(model, "N", z) @ Rm

    chart.inverse = inverse
    chart.R = R
    return chart


def chart_capping_class(model: SurfaceModel, loop: np.ndarray, chart) -> int:
    """Class of the chart-contraction disk of a loop relative to its base capping."""
    z = chart(loop)
    a_chart = geo._chart_primitive_integral(z, model.size)
    return int(np.rint((a_chart - geo.base_capping_area(model, loop)) / model.area))


def pairwise_linking(model: SurfaceModel, x, y, tol: float = RESOLUTION_TOL) -> int:
    """Linking number of two capped loops whose graphs are disjoint."""
    xc, yc = as_capped(x), as_capped(y)
    X = geo.as_loop(model, xc.loop)
    Y = geo.as_loop(model, yc.loop)
    X, Y = _common_samples(X, Y)
    if not model.is_sphere:
        if xc.capping or yc.capping:
            raise geo.GeometryError("torus cappings carry the trivial class only")
        L = model.size
        X = geo.unwrap_torus_loop(X, L)
        Y = geo.unwrap_torus_loop(Y, L)
        for lp in (X, Y):
            if np.any(geo.lift_displacement(lp, L) != 0):
                raise geo.GeometryError("loop is not contractible on the torus")
        D = Y - X
        if np.min(geo.surface_distance(model, X, Y)) <= tol:
            raise NotABraidError("loop graphs intersect: not a braid")
        return _lattice_winding(D, L)
    if np.min(np.linalg.norm(X - Y, axis=-1)) <= tol:
        raise NotABraidError("loop graphs intersect: not a braid")
    q = choose_projection_point(model, [X, Y])
    chart = projection_chart(model, q)
    zx, zy = chart(X), chart(Y)
    base = int(polygon_winding(zy - zx)[()])
    kx = chart_capping_class(model, X, chart)
    ky = chart_capping_class(model, Y, chart)
    return base + (xc.capping - kx) + (yc.capping - ky)


def difference_winding(model: SurfaceModel, x, y) -> int:
    """Winding of y - x in a single chart; agrees with linking for nearby loops."""
    X = geo.as_loop(model, as_capped(x).loop)
    Y = geo.as_loop(model, as_capped(y).loop)
    X, Y = _common_samples(X, Y)
    if not model.is_sphere:
        X = geo.unwrap_torus_loop(X, model.size)
        Y = geo.unwrap_torus_loop(Y, model.size)
        return int(polygon_winding(Y - X)[()])
    c = geo.project_sphere(np.mean(np.concatenate([X, Y]), axis=0), 1.0)
    e1, e2 = geo.normal_frame(c)
    zx = geo.centred_chart(X / model.size, c, e1, e2)
    zy = geo.centred_chart(Y / model.size, c, e1, e2)
    return int(polygon_winding(zy - zx)[()])


# ----------------------------------------------------------- cobordisms

@dataclass
class DiscreteCobordism:
    model: SurfaceModel
    strands: np.ndarray  # (k, S, T, d)
    s: np.ndarray  # (S,) increasing from 0 to 1
    caps0: np.ndarray = None
    caps1: np.ndarray = None

    def __post_init__(self):
        self.strands = np.asarray(self.strands, dtype=float)
        if self.strands.ndim != 4 or self.strands.shape[-1] != self.model.embed_dim:
            raise LinkingError(f"strands must have shape (k, S, T, {self.model.embed_dim})")
        k, S, T, _ = self.strands.shape
        self.s = np.asarray(self.s, dtype=float)
        if self.s.shape != (S,) or S < 2 or not np.all(np.diff(self.s) > 0):
            raise LinkingError("s grid must be increasing with one entry per strand row")
        if abs(self.s[0]) > 1e-12 or abs(self.s[-1] - 1) > 1e-12:
            raise LinkingError("s grid must run from 0 to 1")
        self.caps0 = np.zeros(k, dtype=int) if self.caps0 is None else np.asarray(self.caps0, dtype=int)
        self.caps1 = np.zeros(k, dtype=int) if self.caps1 is None else np.asarray(self.caps1, dtype=int)
        if self.caps0.shape != (k,) or self.caps1.shape != (k,):
            raise LinkingError("one capping class per strand at each end")
        if not self.model.is_sphere and (np.any(self.caps0) or np.any(self.caps1)):
            raise geo.GeometryError("torus cappings carry the trivial class only")
        if self.model.is_sphere:
            self.strands = geo.project_sphere(self.strands, self.model.size)
        else:
            self.strands = _unwrap_strands(self.strands, self.model.size)

    @property
    def k(self) -> int:
        return self.strands.shape[0]

    @property
    def T(self) -> int:
        return self.strands.shape[2]

    def start(self) -> list[CappedLoop]:
        return [CappedLoop(self.strands[i, 0], int(self.caps0[i])) for i in range(self.k)]

    def end(self) -> list[CappedLoop]:
        return [CappedLoop(self.strands[i, -1], int(self.caps1[i])) for i in range(self.k)]

    def reverse(self) -> "DiscreteCobordism":
        return DiscreteCobordism(self.model, self.strands[:, ::-1].copy(), 1.0 - self.s[::-1],
                                 self.caps1.copy(), self.caps0.copy())

    def permute(self, perm) -> "DiscreteCobordism":
        perm = np.asarray(perm, dtype=int)
        if sorted(perm.tolist()) != list(range(self.k)):
            raise LinkingError("not a permutation of the strands")
        return DiscreteCobordism(self.model, self.strands[perm].copy(), self.s.copy(),
                                 self.caps0[perm].copy(), self.caps1[perm].copy())

    def endpoint_separation(self) -> float:
        if self.k < 2:
            return np.inf
        sep = np.inf
        for row in (0, -1):
            for i in range(self.k):
                for j in range(i + 1, self.k):
                    d = geo.surface_distance(self.model, self.strands[i, row], self.strands[j, row])
                    sep = min(sep, float(d.min()))
        return sep


def _unwrap_strands(st: np.ndarray, L: float) -> np.ndarray:
    """Make torus strands continuous in s along t=0 and in t along each row."""
    st = st.copy()
    col = st[:, :, 0, :]
    steps = np.diff(col, axis=1)
    steps -= L * np.round(steps / L)
    col = np.concatenate([col[:, :1], col[:, :1] + np.cumsum(steps, axis=1)], axis=1)
    shift = col - st[:, :, 0, :]
    st += shift[:, :, None, :]
    steps = np.diff(st, axis=2)
    steps -= L * np.round(steps / L)
    st = np.concatenate([st[:, :, :1], st[:, :, :1] + np.cumsum(steps, axis=2)], axis=2)
    closing = st[:, :, 0] - st[:, :, -1]
    reduced = closing - L * np.round(closing / L)
    if np.any(np.abs(reduced - closing) > 0.5 * L):
        raise geo.GeometryError("strand loops are not contractible on the torus")
    return st


def concatenate(c1: DiscreteCobordism, c2: DiscreteCobordism, tol: float = 1e-9) -> DiscreteCobordism:
    """c1 followed by c2; the end of c1 must be the start of c2."""
    if c1.model != c2.model or c1.k != c2.k or c1.T != c2.T:
        raise LinkingError("cobordisms are not composable")
    if np.any(c1.caps1 != c2.caps0):
        raise LinkingError("capping classes do not match at the junction")
    a, b = c1.strands, c2.strands.copy()
    if not c1.model.is_sphere:
        L = c1.model.size
        off = a[:, -1, 0] - b[:, 0, 0]
        b += (L * np.round(off / L))[:, None, None, :]
    gap = float(np.max(np.linalg.norm(a[:, -1] - b[:, 0], axis=-1)))
    if gap > tol * max(1.0, c1.model.size):
        raise LinkingError(f"end of the first cobordism misses the start of the second by {gap:.3g}")
    strands = np.concatenate([a, b[:, 1:]], axis=1)
    s = np.concatenate([0.5 * c1.s, 0.5 + 0.5 * c2.s[1:]])
    return DiscreteCobordism(c1.model, strands, s, c1.caps0.copy(), c2.caps1.copy())


def from_functions(model: SurfaceModel, funcs, ns: int = 64, nt: int = 128, caps0=None, caps1=None,
                   s=None) -> DiscreteCobordism:
    """Sample strand functions ``f(s, t) -> (..., d)`` on a grid."""
    s = np.linspace(0.0, 1.0, ns) if s is None else np.asarray(s, dtype=float)
    t = np.arange(nt) / nt
    S, Tg = np.meshgrid(s, t, indexing="ij")
    strands = np.stack([np.asarray(f(S, Tg), dtype=float) for f in funcs])
    return DiscreteCobordism(model, strands, s, caps0, caps1)


# ------------------------------------------------------------- crossings

@dataclass(frozen=True)
class CrossingEvent:
    i: int
    j: int
    s: float
    t: float
    sign: int
    det: float
    cond: float
    resolved: bool = True

    def to_dict(self) -> dict:
        return {"pair": [self.i, self.j], "s": self.s, "t": self.t, "sign": self.sign,
                "det": self.det, "cond": self.cond, "resolved": self.resolved}


def _bilinear(c, sg, tg):
    """c: (..., 4, m) corners ordered (00, 10, 11, 01); returns value at (sg, tg)."""
    return ((1 - sg) * (1 - tg))[..., None] * c[..., 0, :] + (sg * (1 - tg))[..., None] * c[..., 1, :] \
        + (sg * tg)[..., None] * c[..., 2, :] + ((1 - sg) * tg)[..., None] * c[..., 3, :]


class _TorusCell:
    """Difference map of one torus cell: bilinear in the lift, minus a lattice vector."""

    def __init__(self, corners: np.ndarray):
        self.c = corners  # (4, 2)

    def __call__(self, sg, tg):
        return _bilinear(self.c, np.asarray(sg, dtype=float), np.asarray(tg, dtype=float))


class _SphereCell:
    """Difference of two projected-bilinear strands in a chart centred on the cell."""

    def __init__(self, ci: np.ndarray, cj: np.ndarray):
        self.ci, self.cj = ci, cj  # (4, 3) unit vectors
        c = geo.project_sphere(ci.sum(axis=0) + cj.sum(axis=0), 1.0)
        self.c = c
        self.e1, self.e2 = geo.normal_frame(c)

    def chart(self, P):
        return geo.centred_chart(geo.project_sphere(P, 1.0), self.c, self.e1, self.e2)

    def __call__(self, sg, tg):
        sg, tg = np.asarray(sg, dtype=float), np.asarray(tg, dtype=float)
        return self.chart(_bilinear(self.cj, sg, tg)) - self.chart(_bilinear(self.ci, sg, tg))


def _boundary_params(m: int):
    u = np.arange(m) / m
    sg = np.concatenate([u, np.ones(m), 1 - u, np.zeros(m)])
    tg = np.concatenate([np.zeros(m), u, np.ones(m), 1 - u])
    return sg, tg


def _curved_winding(fn, m0: int = 8, m_max: int = 512) -> int:
    """Winding of the cell boundary image with adaptive refinement."""
    m = m0
    while True:
        sg, tg = _boundary_params(2 * m)
        d = fn(sg, tg)
        a, mid, b = d[0::2], d[1::2], np.roll(d[0::2], -1, axis=0)
        if np.any(np.all(a == 0, axis=-1)):
            raise CrossingAtSampleError("crossing on a sample point")
        ab = b - a
        lam = np.clip(-np.sum(a * ab, axis=-1) / np.maximum(np.sum(ab * ab, axis=-1), 1e-300), 0, 1)
        dist = np.linalg.norm(a + lam[:, None] * ab, axis=-1)
        dev = np.linalg.norm(mid - 0.5 * (a + b), axis=-1)
        if np.all(dev < 0.25 * dist):
            inc = principal_increments(a, b)
            return int(np.rint(inc.sum() / (2 * np.pi)))
        if m >= m_max:
            raise CrossingAtSampleError("strand crossing too close to a grid edge; perturb the grid")
        m *= 4


def _polish(fn, ds: float, dt: float, jac_fn=None):
    """Newton for fn(sg, tg) = 0 inside a cell.  Returns (sg, tg, J_st) or None."""
    p = np.array([0.5, 0.5])
    h = 1e-6
    for _ in range(40):
        F = fn(p[0], p[1])
        if jac_fn is not None:
            J = jac_fn(p[0], p[1])
        else:
            J = np.stack([(fn(p[0] + h, p[1]) - fn(p[0] - h, p[1])) / (2 * h),
                          (fn(p[0], p[1] + h) - fn(p[0], p[1] - h)) / (2 * h)], axis=-1)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        p = p + step
        if np.linalg.norm(step) < 1e-13:
            break
        if np.any(np.abs(p - 0.5) > 2.0):
            return None
    if np.any(p < -1e-6) or np.any(p > 1 + 1e-6) or np.linalg.norm(fn(p[0], p[1])) > 1e-10:
        return None
    if jac_fn is not None:
        J = jac_fn(p[0], p[1])
    else:
        J = np.stack([(fn(p[0] + h, p[1]) - fn(p[0] - h, p[1])) / (2 * h),
                      (fn(p[0], p[1] + h) - fn(p[0], p[1] - h)) / (2 * h)], axis=-1)
    return p[0], p[1], J / np.array([ds, dt])[None, :]


def _torus_jac(c):
    def jac(sg, tg):
        ds = (1 - tg) * (c[1] - c[0]) + tg * (c[2] - c[3])
        dt = (1 - sg) * (c[3] - c[0]) + sg * (c[2] - c[1])
        return np.stack([ds, dt], axis=-1)
    return jac


def _cell_events(fn, w: int, i: int, j: int, s0: float, ds: float, t0: float, dt: float, jac_fn=None,
                 tol: float = TRANSVERSALITY_TOL) -> list[CrossingEvent]:
    sol = _polish(fn, ds, dt, jac_fn) if abs(w) == 1 else None
    if sol is None:
        s_c, t_c = s0 + 0.5 * ds, (t0 + 0.5 * dt) % 1.0
        return [CrossingEvent(i, j, float(s_c), float(t_c), int(np.sign(w)), float("nan"), float("nan"), False)
                for _ in range(abs(w))]
    sg, tg, J = sol
    det = float(np.linalg.det(J))
    s_star, t_star = s0 + sg * ds, (t0 + tg * dt) % 1.0
    if abs(det) < tol:
        raise NonTransverseError(f"non-transverse crossing of strands {i},{j} at s={s_star:.6g}, t={t_star:.6g}")
    if int(np.sign(det)) != int(np.sign(w)):
        return [CrossingEvent(i, j, float(s_star), float(t_star), int(np.sign(w)), det, float("nan"), False)]
    return [CrossingEvent(i, j, float(s_star), float(t_star), int(np.sign(det)), det, float(np.linalg.cond(J)))]


def _pair_events_torus(cob, i, j, tol) -> list[CrossingEvent]:
    L = cob.model.size
    D = cob.strands[j] - cob.strands[i]  # (S, T, 2)
    D = np.concatenate([D, D[:, :1]], axis=1)  # periodic in t
    c = np.stack([D[:-1, :-1], D[1:, :-1], D[1:, 1:], D[:-1, 1:]], axis=2)  # (S-1, T, 4, 2)
    lo = c.min(axis=2)
    hi = c.max(axis=2)
    nlo = np.ceil(lo / L - 1e-12).astype(int)
    nhi = np.floor(hi / L + 1e-12).astype(int)
    events = []
    span = max(int(np.max(nhi - nlo)) if nlo.size else 0, 0)
    for ox in range(span + 1):
        for oy in range(span + 1):
            nx, ny = nlo[..., 0] + ox, nlo[..., 1] + oy
            cand = (nx <= nhi[..., 0]) & (ny <= nhi[..., 1])
            if not np.any(cand):
                continue
            a_idx, b_idx = np.nonzero(cand)
            shift = L * np.stack([nx[cand], ny[cand]], axis=-1)
            corners = c[a_idx, b_idx] - shift[:, None, :]
            w = polygon_winding(corners)
            _check_edge_zeros(corners, cob.s, a_idx, b_idx, cob.T, i, j, tol)
            for m in np.nonzero(w)[0]:
                a, b = a_idx[m], b_idx[m]
                cc = corners[m]
                ds = cob.s[a + 1] - cob.s[a]
                dt = 1.0 / cob.T
                events += _cell_events(_TorusCell(cc), int(w[m]), i, j, cob.s[a], ds, b * dt, dt,
                                       _torus_jac(cc), tol)
    return events


def _check_edge_zeros(corners, s, a_idx, b_idx, T, i, j, tol):
    """Zeros lying exactly on a cell edge are resolved by tie-breaking; make
    sure they are still transverse."""
    nxt = np.roll(corners, -1, axis=1)
    cross = corners[..., 0] * nxt[..., 1] - corners[..., 1] * nxt[..., 0]
    dot = np.sum(corners * nxt, axis=-1)
    hits = np.nonzero((cross == 0) & (dot < 0))
    for m, e in zip(*hits):
        a, b = corners[m, e], nxt[m, e]
        lam = float(np.linalg.norm(a) / (np.linalg.norm(a) + np.linalg.norm(b)))
        if e == 0:
            sg, tg = lam, 0.0
        elif e == 1:
            sg, tg = 1.0, lam
        elif e == 2:
            sg, tg = 1 - lam, 1.0
        else:
            sg, tg = 0.0, 1 - lam
        ds = s[a_idx[m] + 1] - s[a_idx[m]]
        J = _torus_jac(corners[m])(sg, tg) / np.array([ds, 1.0 / T])[None, :]
        if abs(np.linalg.det(J)) < tol:
            s_star = s[a_idx[m]] + sg * ds
            t_star = ((b_idx[m] + tg) / T) % 1.0
            raise NonTransverseError(
                f"non-transverse crossing of strands {i},{j} at s={s_star:.6g}, t={t_star:.6g}")


def _pair_events_sphere(cob, i, j, tol) -> list[CrossingEvent]:
    R = cob.model.size
    Pi = np.concatenate([cob.strands[i], cob.strands[i][:, :1]], axis=1) / R
    Pj = np.concatenate([cob.strands[j], cob.strands[j][:, :1]], axis=1) / R
    ci = np.stack([Pi[:-1, :-1], Pi[1:, :-1], Pi[1:, 1:], Pi[:-1, 1:]], axis=2)
    cj = np.stack([Pj[:-1, :-1], Pj[1:, :-1], Pj[1:, 1:], Pj[:-1, 1:]], axis=2)
    dist = np.linalg.norm(ci - cj, axis=-1)
    if np.any(dist == 0):
        raise CrossingAtSampleError(f"strands {i},{j} coincide at a sample point")
    ext_i = np.max(np.linalg.norm(ci - ci[:, :, :1], axis=-1), axis=-1)
    ext_j = np.max(np.linalg.norm(cj - cj[:, :, :1], axis=-1), axis=-1)
    cand = dist.min(axis=-1) <= 2.0 * (ext_i + ext_j) + 1e-12
    events = []
    for a, b in zip(*np.nonzero(cand)):
        fn = _SphereCell(ci[a, b], cj[a, b])
        w = _curved_winding(fn)
        if w:
            ds = cob.s[a + 1] - cob.s[a]
            dt = 1.0 / cob.T
            events += _cell_events(fn, w, i, j, cob.s[a], ds, b * dt, dt, None, tol)
    return events


def detect_crossings(cob: DiscreteCobordism, tol: float = TRANSVERSALITY_TOL,
                     resolution: float = RESOLUTION_TOL) -> list[CrossingEvent]:
    sep = cob.endpoint_separation()
    if sep <= 10 * resolution:
        raise LinkingError(f"strands collide at a cobordism end (separation {sep:.3g})")
    events: list[CrossingEvent] = []
    for i in range(cob.k):
        for j in range(i + 1, cob.k):
            if cob.model.is_sphere:
                events += _pair_events_sphere(cob, i, j, tol)
            else:
                events += _pair_events_torus(cob, i, j, tol)
    events.sort(key=lambda e: (e.i, e.j, round(e.s, 12), round(e.t, 12)))
    return events


def homological_linking(cob: DiscreteCobordism, events: list[CrossingEvent] | None = None) -> int:
    if events is None:
        events = detect_crossings(cob)
    return int(sum(e.sign for e in events))


def verify_positive_cobordism(cob: DiscreteCobordism, events=None, negative: bool = False) -> dict:
    """Positive (or negative) iff every crossing has the required sign."""
    if events is None:
        events = detect_crossings(cob)
    want = -1 if negative else 1
    bad = [e for e in events if e.sign != want or not e.resolved]
    key = "negative" if negative else "positive"
    return {key: not bad, "crossings": len(events), "witnesses": [e.to_dict() for e in bad]}


def cobordism_classes(cob: DiscreteCobordism) -> np.ndarray:
    """Per-strand class A_i = [w_i] # [h_i] # (-[v_i]) from areas."""
    model = cob.model
    if not model.is_sphere:
        return np.zeros(cob.k, dtype=int)
    out = np.zeros(cob.k, dtype=int)
    R = model.size
    for i in range(cob.k):
        P = np.concatenate([cob.strands[i], cob.strands[i][:, :1]], axis=1) / R
        p00, p10, p11, p01 = P[:-1, :-1], P[1:, :-1], P[1:, 1:], P[:-1, 1:]
        area = R * R * (_solid_angle(p00, p10, p11) + _solid_angle(p00, p11, p01)).sum()
        total = (geo.base_capping_area(model, cob.strands[i, 0]) + cob.caps0[i] * model.area + area
                 - geo.base_capping_area(model, cob.strands[i, -1]) - cob.caps1[i] * model.area)
        out[i] = int(np.rint(total / model.area))
    return out


def _solid_angle(a, b, c):
    num = np.sum(a * np.cross(b, c), axis=-1)
    den = 1 + np.sum(a * b, axis=-1) + np.sum(b * c, axis=-1) + np.sum(c * a, axis=-1)
    return 2 * np.arctan2(num, den)


def robust_crossings(build, grids=((64, 128), (67, 131), (73, 137))):
    """Try a few sampling grids; ``build(ns, nt)`` returns a cobordism."""
    last = None
    for ns, nt in grids:
        cob = build(ns, nt)
        try:
            return cob, detect_crossings(cob)
        except CrossingAtSampleError as err:
            last = err
    raise last


# ----------------------------------------------------- model cobordisms

def model_cobordism(l: int, r0: float = 0.2, centre=(0.5, 0.5), ns: int = 64, nt: int = 128,
                    lift: float = 0.0) -> DiscreteCobordism:
    """Strand 0 fixed at ``centre``; strand 1 runs from ``centre - r0/2`` to the
    circle ``centre + (r0/2) e^{2 pi i l t}`` along ``(1-s)(-r0/2) + s (r0/2) e^{2 pi i l t}``.

    ``lift`` adds ``i lift sin(pi s)`` to strand 1, which pushes the l = 0 path off the
    fixed strand.
    """
    model = SurfaceModel.torus(1.0)
    cx, cy = centre

    def h0(s, t):
        return np.stack([np.full_like(s, cx), np.full_like(s, cy)], axis=-1)

    def h1(s, t):
        z = (1 - s) * (-r0 / 2) + s * (r0 / 2) * np.exp(2j * np.pi * l * t) + 1j * lift * np.sin(np.pi * s)
        return np.stack([cx + z.real, cy + z.imag], axis=-1)

    return from_functions(model, [h0, h1], ns, nt)


def shrink_cobordism(model: SurfaceModel, loops: list, ns: int = 48, nt: int | None = None,
                     q=None) -> DiscreteCobordism:
    """Each loop shrunk in a chart to its basepoint: h(s,t) = x(0) + s (x(t) - x(0)).

    On the sphere the chart projects from a point avoiding all loops; the end
    classes are those of the chart-contraction disks.
    """
    caps = [as_capped(lp) for lp in loops]
    arrs = [geo.as_loop(model, c.loop) for c in caps]
    n = nt or max(a.shape[0] for a in arrs)
    arrs = [geo.periodic_resample(a, n) if a.shape[0] != n else a for a in arrs]
    s = np.linspace(0.0, 1.0, ns)
    if not model.is_sphere:
        arrs = [geo.unwrap_torus_loop(a, model.size) for a in arrs]
        strands = np.stack([a[0][None, None, :] + s[:, None, None] * (a - a[0])[None] for a in arrs])
        return DiscreteCobordism(model, strands, s)
    if q is None:
        q = choose_projection_point(model, arrs)
    chart = projection_chart(model, q)
    strands = []
    ends = []
    for a in arrs:
        z = chart(a)
        zs = z[0][None, None, :] + s[:, None, None] * (z - z[0])[None]
        strands.append(chart.inverse(zs))
        ends.append(chart_capping_class(model, a, chart))
    return DiscreteCobordism(model, np.stack(strands), s, np.zeros(len(arrs), dtype=int), np.array(ends))


def sweep_strand(c: np.ndarray, degree: int, s: np.ndarray, t: np.ndarray, others: np.ndarray) -> np.ndarray:
    """Unit-sphere strand starting and ending at c that covers the sphere ``degree`` times.

    For s <= 1/2 it is ``tan(pi s) e^{2 pi i degree t}`` in the chart centred at c;
    afterwards it returns from the antipode along a half great circle chosen to
    stay away from ``others``.
    """
    e1, e2 = geo.normal_frame(c)
    S, Tg = np.meshgrid(s, t, indexing="ij")
    out = np.empty(S.shape + (3,))
    first = S <= 0.5
    ang = 2 * np.pi * S
    psi = 2 * np.pi * degree * Tg
    dirs = np.cos(psi)[..., None] * e1 + np.sin(psi)[..., None] * e2
    out[first] = (np.cos(ang)[..., None] * c + np.sin(ang)[..., None] * dirs)[first]
    # return path: alpha from pi (antipode) down to 0 (c) along direction u
    best, best_d = e1, -1.0
    alphas = np.linspace(0, np.pi, 181)
    for th in np.linspace(0, 2 * np.pi, 48, endpoint=False):
        u = np.cos(th) * e1 + np.sin(th) * e2
        path = np.cos(alphas)[:, None] * c + np.sin(alphas)[:, None] * u
        d = np.min(np.linalg.norm(path[:, None, :] - others[None], axis=-1)) if len(others) else np.inf
        if d > best_d:
            best, best_d = u, d
    alpha = np.pi * (2 - 2 * S)
    out[~first] = (np.cos(alpha)[..., None] * c + np.sin(alpha)[..., None] * best)[~first]
    return out


def sweep_cobordism(model: SurfaceModel, points: np.ndarray, degrees, caps0=None, ns: int = 64,
                    nt: int = 128) -> DiscreteCobordism:
    """Constant braid at ``points`` whose strands sweep the sphere in turn.

    The result is a 0-cobordism from the constant braid to itself with end
    classes shifted by ``degrees``.
    """
    if not model.is_sphere:
        raise geo.GeometryError("sphere sweeps need the sphere model")
    R = model.size
    P = geo.project_sphere(np.asarray(points, dtype=float), 1.0)
    degrees = np.asarray(degrees, dtype=int)
    k = P.shape[0]
    caps = np.zeros(k, dtype=int) if caps0 is None else np.asarray(caps0, dtype=int).copy()
    s = np.linspace(0.0, 1.0, ns)
    t = np.arange(nt) / nt
    const = np.broadcast_to(P[:, None, None, :], (k, ns, nt, 3))
    pieces = []
    for i in range(k):
        if degrees[i] == 0:
            continue
        strands = const.copy()
        strands[i] = sweep_strand(P[i], int(degrees[i]), s, t, np.delete(P, i, axis=0))
        new = caps.copy()
        new[i] += degrees[i]
        pieces.append(DiscreteCobordism(model, R * strands, s, caps.copy(), new))
        caps = new
    if not pieces:
        return DiscreteCobordism(model, R * const.copy(), s, caps.copy(), caps.copy())
    out = pieces[0]
    for p in pieces[1:]:
        out = concatenate(out, p)
    return out


# ---------------------------------------------------- area and profiles

def area_via_linking(model: SurfaceModel, gamma, resolution: int = 512, buffer: float = 1e-9,
                     max_excluded: float = 0.01) -> float:
    """Integral over the surface of l(gamma, x) for trivially capped constant loops x."""
    g = as_capped(gamma)
    loop = geo.as_loop(model, g.loop)
    N = int(resolution)
    if not model.is_sphere:
        L = model.size
        lifted = geo.unwrap_torus_loop(loop, L)
        if np.any(geo.lift_displacement(lifted, L) != 0):
            raise geo.GeometryError("loop is not contractible on the torus")
        h = L / N
        lo = np.floor(lifted.min(axis=0) / h).astype(int) - 1
        hi = np.ceil(lifted.max(axis=0) / h).astype(int) + 1
        ix = np.arange(lo[0], hi[0] + 1)
        iy = np.arange(lo[1], hi[1] + 1)
        X, Y = np.meshgrid((ix + 0.5) * h, (iy + 0.5) * h, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        w = winding_numbers(lifted, pts)
        near = _near_curve(lifted, pts, buffer)
        if np.count_nonzero(near) > max_excluded * N * N:
            raise LinkingError("too many grid points inside the exclusion buffer")
        w[near] = 0
        # each lattice translate of a grid point contributes to the same constant loop
        return float(w.sum() * h * h)
    # equal-area spherical Fibonacci nodes; a latitude-longitude grid would
    # align with circles of latitude and bias the boundary band
    pts = model.size * geo.fibonacci_sphere(N * N)
    q = choose_projection_point(model, [loop])
    chart = projection_chart(model, q)
    z = chart(loop)
    with np.errstate(divide="ignore", invalid="ignore"):
        zp = chart(pts)
    finite = np.all(np.isfinite(zp), axis=-1)
    w = np.zeros(pts.shape[0], dtype=int)
    w[finite] = winding_numbers(z, zp[finite])
    near = _near_curve(loop, pts, buffer)
    if np.count_nonzero(near) > max_excluded * N * N:
        raise LinkingError("too many grid points inside the exclusion buffer")
    w[near] = 0
    shift = g.capping - chart_capping_class(model, loop, chart)
    return float((w.sum() + shift * (N * N - np.count_nonzero(near))) * model.area / (N * N))


def _near_curve(loop: np.ndarray, pts: np.ndarray, buffer: float, chunk: int = 4096) -> np.ndarray:
    if buffer <= 0:
        return np.zeros(pts.shape[0], dtype=bool)
    a = loop
    b = np.roll(loop, -1, axis=0)
    ab = b - a
    ab2 = np.maximum(np.sum(ab * ab, axis=-1), 1e-300)
    lo_box = np.minimum(a, b).min(axis=0) - buffer
    hi_box = np.maximum(a, b).max(axis=0) + buffer
    out = np.zeros(pts.shape[0], dtype=bool)
    inbox = np.all((pts >= lo_box) & (pts <= hi_box), axis=-1)
    idx = np.nonzero(inbox)[0]
    for k in range(0, idx.size, chunk):
        sel = idx[k:k + chunk]
        p = pts[sel]
        lam = np.clip(np.einsum("pmd,md->pm", p[:, None, :] - a[None], ab) / ab2, 0, 1)
        proj = a[None] + lam[..., None] * ab[None]
        d = np.min(np.linalg.norm(p[:, None, :] - proj, axis=-1), axis=1)
        out[sel] = d <= buffer
    return out


@dataclass
class LinkingProfile:
    s: np.ndarray
    values: np.ndarray

    @property
    def nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))


def linking_profile(model: SurfaceModel, u: np.ndarray, v: np.ndarray, s=None, cap_u: int = 0,
                    cap_v: int = 0) -> LinkingProfile:
    """Pairwise linking of two sampled cylinders (S, T, d), row by row in s."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[0] != v.shape[0]:
        raise LinkingError("cylinders must share the s grid")
    s = np.linspace(0.0, 1.0, u.shape[0]) if s is None else np.asarray(s, dtype=float)
    vals = []
    for r in range(u.shape[0]):
        try:
            vals.append(pairwise_linking(model, CappedLoop(u[r], cap_u), CappedLoop(v[r], cap_v)))
        except NotABraidError as err:
            raise CrossingAtSampleError(f"cylinders meet at sample s={s[r]:.6g}; perturb the grid") from err
    return LinkingProfile(s, np.array(vals, dtype=int))


def cylinder_profile(model: SurfaceModel, cob: DiscreteCobordism, i: int = 0, j: int = 1) -> LinkingProfile:
    return linking_profile(model, cob.strands[i], cob.strands[j], cob.s)

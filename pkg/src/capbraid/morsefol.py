"""Morse complexes, gradient foliations and Peixoto graphs for autonomous functions.

Gradients use the chart metric on the torus and the round metric on the
sphere (``g = rho |dz|^2`` in either stereographic chart).  Flow lines are
traced in embedded coordinates with a normalized-speed RK4 integrator whose
step shrinks near singular points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import linking as lk
from .geometry import SurfaceModel
from .hamparse import HamiltonianSpec
from .index import winding_bounds


class MorseError(ValueError):
    pass


class NotMorseSmaleError(MorseError):
    pass


class UnsupportedCaseError(ValueError):
    pass


@dataclass(frozen=True)
class MorseSettings:
    seed_grid: int = 32
    newton_tol: float = 1e-12
    degeneracy_tol: float = 1e-6
    buffer: float = 1e-3  # singular buffer radius (chart units)
    seed_offset: float = 1e-4  # separatrix seeds along Hessian eigen-directions
    step: float = 1e-2  # maximal arclength step, relative to the surface size
    max_steps: int = 20000


@dataclass
class CriticalPoint:
    id: int
    chart: str
    coords: tuple
    point: np.ndarray = field(repr=False)
    index: int  # Morse index
    value: float
    hessian: np.ndarray = field(repr=False)

    @property
    def mu(self) -> int:
        return self.index - 1

    def to_dict(self) -> dict:
        return {"id": self.id, "chart": self.chart, "coords": [float(c) for c in self.coords],
                "index": self.index, "mu": self.mu, "value": float(self.value)}


@dataclass
class FlowLine:
    upper: int  # critical point id at the start of the descending line
    lower: int
    saddle_side: str  # "ascending" or "descending": how it leaves the saddle
    path: np.ndarray = field(repr=False)  # embedded polyline, from upper to lower

    def to_dict(self, with_path: bool = False) -> dict:
        out = {"upper": self.upper, "lower": self.lower, "points": int(self.path.shape[0])}
        if with_path:
            out["path"] = self.path.tolist()
        return out


@dataclass
class MorseComplexData:
    model: SurfaceModel
    critical: list
    lines: list
    boundary: dict  # degree k -> GF(2) matrix from index k to index k-1 generators
    counts: dict  # degree k -> integer line counts
    betti: tuple
    d_squared_zero: bool

    def generators(self, k: int) -> list[CriticalPoint]:
        return [c for c in self.critical if c.index == k]

    def to_dict(self) -> dict:
        return {
            "generators": {str(k): [c.id for c in self.generators(k)] for k in range(3)},
            "critical": [c.to_dict() for c in self.critical],
            "boundary": {str(k): v.tolist() for k, v in self.boundary.items()},
            "counts": {str(k): v.tolist() for k, v in self.counts.items()},
            "betti": list(self.betti),
            "d_squared_zero": self.d_squared_zero,
            "lines": [ln.to_dict() for ln in self.lines],
        }


# ------------------------------------------------------- chart calculus

def embed_jacobian(model: SurfaceModel, chart: str, z: np.ndarray) -> np.ndarray:
    """d(embedding)/d(chart coords), shape (..., d, 2)."""
    z = np.asarray(z, dtype=float)
    if not model.is_sphere:
        return np.broadcast_to(np.eye(2), z.shape[:-1] + (2, 2)).copy()
    R = model.size
    x, y = z[..., 0], z[..., 1]
    d = R * R + x * x + y * y
    d2 = d * d
    J = np.empty(z.shape[:-1] + (3, 2))
    sgn = 1.0 if chart == "N" else -1.0
    J[..., 0, 0] = 2 * R * R * (d - 2 * x * x) / d2
    J[..., 0, 1] = -4 * R * R * x * y / d2
    J[..., 1, 0] = -sgn * 4 * R * R * x * y / d2
    J[..., 1, 1] = sgn * 2 * R * R * (d - 2 * y * y) / d2
    J[..., 2, 0] = -sgn * 4 * R**3 * x / d2
    J[..., 2, 1] = -sgn * 4 * R**3 * y / d2
    return J


def _to_charts(model: SurfaceModel, P: np.ndarray):
    if not model.is_sphere:
        return np.zeros(P.shape[0], dtype=int), P
    up = P[:, 2] >= 0
    charts = np.where(up, 0, 1)
    z = np.empty((P.shape[0], 2))
    z[up] = geo.embed_to_chart(model, P[up], "N")
    z[~up] = geo.embed_to_chart(model, P[~up], "S")
    return charts, z


def _chart_derivs(model: SurfaceModel, f: HamiltonianSpec, charts, z, t=0.0):
    fx = np.empty(z.shape[0])
    fy = np.empty(z.shape[0])
    for idx, name in enumerate(model.charts):
        mask = charts == idx
        if np.any(mask):
            d = f.chart(name).derivatives(t, z[mask, 0], z[mask, 1])
            fx[mask] = np.broadcast_to(d[0], (int(mask.sum()),))
            fy[mask] = np.broadcast_to(d[1], (int(mask.sum()),))
    return fx, fy


def _push(model: SurfaceModel, charts, z, v):
    if not model.is_sphere:
        return v
    out = np.empty((z.shape[0], 3))
    for idx, name in enumerate(model.charts):
        mask = charts == idx
        if np.any(mask):
            out[mask] = np.einsum("nij,nj->ni", embed_jacobian(model, name, z[mask]), v[mask])
    return out


def gradient_ambient(model: SurfaceModel, f: HamiltonianSpec, P: np.ndarray, t=0.0) -> np.ndarray:
    """Metric gradient of f at embedded points, as embedded vectors."""
    charts, z = _to_charts(model, P)
    fx, fy = _chart_derivs(model, f, charts, z, t)
    rho = geo.chart_density(model, z)
    return _push(model, charts, z, np.stack([fx, fy], axis=-1) / rho[:, None])


def hamiltonian_ambient(model: SurfaceModel, H: HamiltonianSpec, P: np.ndarray, t=0.0) -> np.ndarray:
    """Hamiltonian vector field (omega(X, .) = -dH) at embedded points."""
    charts, z = _to_charts(model, P)
    hx, hy = _chart_derivs(model, H, charts, z, t)
    rho = geo.chart_density(model, z)
    return _push(model, charts, z, np.stack([-hy, hx], axis=-1) / rho[:, None])


def area_form(model: SurfaceModel, P: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """omega_P(v, w) for embedded tangent vectors."""
    if not model.is_sphere:
        return v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]
    n = P / np.linalg.norm(P, axis=-1, keepdims=True)
    return np.sum(n * np.cross(v, w), axis=-1)


# ---------------------------------------------------- critical points

def _evaluate(model, f, chart: str, z):
    return float(f.chart(chart).H(0.0, z[0], z[1]))


def critical_points(model: SurfaceModel, f: HamiltonianSpec, settings: MorseSettings = MorseSettings()) -> list[CriticalPoint]:
    if not f.autonomous:
        raise UnsupportedCaseError("Morse complexes and foliations need an autonomous function")
    from .dynamics import seed_points

    z, charts = seed_points(model, settings.seed_grid)
    scale = model.size
    for _ in range(60):
        step = np.zeros_like(z)
        for idx, name in enumerate(model.charts):
            mask = charts == idx
            if not np.any(mask):
                continue
            cnt = int(mask.sum())
            hx, hy, hxx, hxy, hyy = (np.broadcast_to(a, (cnt,)) for a in
                                     f.chart(name).derivatives(0.0, z[mask, 0], z[mask, 1]))
            g = np.stack([hx, hy], axis=-1).astype(float)
            Hm = np.empty((cnt, 2, 2))
            Hm[:, 0, 0], Hm[:, 0, 1], Hm[:, 1, 0], Hm[:, 1, 1] = hxx, hxy, hxy, hyy
            det = Hm[:, 0, 0] * Hm[:, 1, 1] - Hm[:, 0, 1] ** 2
            ok = np.abs(det) > 1e-300
            st = np.zeros_like(g)
            st[ok] = np.linalg.solve(Hm[ok], g[ok][..., None])[..., 0]
            n = np.linalg.norm(st, axis=-1)
            cap = 0.1 * scale
            st *= np.minimum(1.0, cap / np.maximum(n, 1e-300))[:, None]
            step[mask] = st
        z = z - step
        if model.is_sphere:
            far = np.hypot(z[:, 0], z[:, 1]) > geo.CHART_SWITCH * model.size
            if np.any(far):
                z[far] = geo.sphere_transition(z[far], model.size)
                charts[far] = 1 - charts[far]
        if np.max(np.linalg.norm(step, axis=-1)) < settings.newton_tol * scale:
            break
    pts = []
    for idx, name in enumerate(model.charts):
        mask = charts == idx
        if not np.any(mask):
            continue
        hx, hy, hxx, hxy, hyy = (np.broadcast_to(a, (int(mask.sum()),)) for a in
                                 f.chart(name).derivatives(0.0, z[mask, 0], z[mask, 1]))
        rho = geo.chart_density(model, z[mask])
        for k, zz in enumerate(z[mask]):
            if np.hypot(hx[k], hy[k]) > 1e-9 * max(1.0, 1.0 / scale):
                continue
            Hm = np.array([[hxx[k], hxy[k]], [hxy[k], hyy[k]]]) / rho[k]
            ev = np.linalg.eigvalsh(Hm)
            pts.append((name, zz.copy(), Hm, ev))
    if not pts:
        raise MorseError("no critical points found")
    found = []
    for name, zz, Hm, ev in pts:
        if np.min(np.abs(ev)) < settings.degeneracy_tol:
            raise MorseError(f"degenerate critical point near {name}({zz[0]:.6g}, {zz[1]:.6g}); f is not Morse")
        P = geo.chart_to_embed(model, name, zz)
        if not model.is_sphere:
            P = P % model.size
        if any(float(geo.surface_distance(model, P, q[1])) < 1e-7 * scale for q in found):
            continue
        found.append((name, P, Hm, ev, zz))
    found.sort(key=lambda q: (-int(np.sum(q[3] < 0)), tuple(np.round(q[1], 9))))
    out = []
    for i, (name, P, Hm, ev, zz) in enumerate(found):
        chart = name
        zc = zz
        if model.is_sphere:
            chart = "N" if P[2] >= 0 else "S"
            zc = geo.embed_to_chart(model, P, chart)
            Hm = _hessian(model, f, chart, zc)
        else:
            zc = P
        out.append(CriticalPoint(i, chart, tuple(float(v) for v in zc), P, int(np.sum(ev < 0)),
                                 _evaluate(model, f, chart, zc), Hm))
    return out


def _hessian(model, f, chart, z):
    d = f.chart(chart).derivatives(0.0, np.array([z[0]]), np.array([z[1]]))
    hxx, hxy, hyy = (float(np.broadcast_to(a, (1,))[0]) for a in d[2:])
    rho = float(geo.chart_density(model, np.asarray(z)))
    return np.array([[hxx, hxy], [hxy, hyy]]) / rho


# ------------------------------------------------------------ tracing

def _nearest(model, P, crit_pts):
    if not model.is_sphere:
        d = P[:, None, :] - crit_pts[None]
        d -= model.size * np.round(d / model.size)
    else:
        d = P[:, None, :] - crit_pts[None]
    dist = np.linalg.norm(d, axis=-1)
    j = np.argmin(dist, axis=1)
    return j, dist[np.arange(P.shape[0]), j]


def trace_lines(model: SurfaceModel, f: HamiltonianSpec, P0: np.ndarray, sign: float, crit: list[CriticalPoint],
                settings: MorseSettings = MorseSettings(), record: bool = False, ignore=None):
    """Follow ``sign * grad f`` from each start until a singular buffer is reached.

    Returns (labels, paths); label -1 marks a failed trace.  ``ignore[i]`` is a
    critical point id not counted until start ``i`` has left its buffer.
    """
    P = np.array(P0, dtype=float)
    n = P.shape[0]
    crit_pts = np.stack([c.point for c in crit])
    labels = np.full(n, -1)
    active = np.ones(n, dtype=bool)
    armed = np.ones(n, dtype=bool) if ignore is None else np.asarray(ignore) < 0
    ign = np.full(n, -1) if ignore is None else np.asarray(ignore)
    h0 = settings.step * model.size
    buf = settings.buffer
    paths = [[P[i].copy()] for i in range(n)] if record else None

    def field(Q):
        g = gradient_ambient(model, f, Q)
        nrm = np.linalg.norm(g, axis=-1, keepdims=True)
        return sign * g / np.maximum(nrm, 1e-300)

    for _ in range(settings.max_steps):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        Q = P[idx]
        j, dist = _nearest(model, Q, crit_pts)
        if ignore is not None:
            # distance to the ignored source point
            own = ign[idx] >= 0
            if np.any(own):
                d_own = geo.surface_distance(model, Q[own], crit_pts[ign[idx][own]])
                newly = d_own > 2 * buf
                sub = idx[own]
                armed[sub[newly]] = True
        hit = (dist < buf) & (armed[idx] | (j != ign[idx]))
        if np.any(hit):
            labels[idx[hit]] = j[hit]
            active[idx[hit]] = False
            if record:
                for i, jj in zip(idx[hit], j[hit]):
                    paths[i].append(crit_pts[jj].copy())
            keep = ~hit
            idx, Q, dist = idx[keep], Q[keep], dist[keep]
            if idx.size == 0:
                break
        # step bounded by half the distance to the nearest singular point
        h = np.minimum(h0, 0.5 * np.maximum(dist, 0.5 * buf))[:, None]
        k1 = field(Q)
        k2 = field(Q + 0.5 * h * k1)
        k3 = field(Q + 0.5 * h * k2)
        k4 = field(Q + h * k3)
        Qn = Q + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        if model.is_sphere:
            Qn = geo.project_sphere(Qn, model.size)
        P[idx] = Qn
        if record:
            for i, q in zip(idx, Qn):
                paths[i].append(q.copy())
    if record:
        paths = [np.array(p) for p in paths]
        if not model.is_sphere:
            paths = [geo.unwrap_torus_loop(p, model.size) if p.shape[0] > 1 else p for p in paths]
    return labels, paths


def _saddle_seeds(model, c: CriticalPoint, settings: MorseSettings):
    """Seeds (embedded) along the ascending and descending Hessian directions."""
    ev, vec = np.linalg.eigh(c.hessian)
    out = {}
    for name, col in (("descending", 0), ("ascending", 1)):
        v = vec[:, col]
        seeds = []
        for sgn in (1.0, -1.0):
            z = np.asarray(c.coords) + sgn * settings.seed_offset * v
            P = geo.chart_to_embed(model, c.chart, z)
            seeds.append(P)
        out[name] = np.stack(seeds)
    return out


# ------------------------------------------------------- Morse complex

def gf2_rank(M: np.ndarray) -> int:
    A = (np.asarray(M, dtype=np.int64) % 2).astype(np.uint8)
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        piv = np.nonzero(A[r:, c])[0]
        if piv.size == 0:
            continue
        p = r + piv[0]
        A[[r, p]] = A[[p, r]]
        others = np.nonzero(A[:, c])[0]
        others = others[others != r]
        A[others] ^= A[r]
        r += 1
        if r == rows:
            break
    return r


def build_morse_complex(model: SurfaceModel, f: HamiltonianSpec, settings: MorseSettings = MorseSettings()) -> MorseComplexData:
    crit = critical_points(model, f, settings)
    saddles = [c for c in crit if c.index == 1]
    lines: list[FlowLine] = []
    for c in saddles:
        seeds = _saddle_seeds(model, c, settings)
        for side, sign in (("ascending", 1.0), ("descending", -1.0)):
            labels, paths = trace_lines(model, f, seeds[side], sign, crit, settings, record=True,
                                        ignore=np.full(2, c.id))
            for lab, path in zip(labels, paths):
                if lab < 0:
                    raise MorseError(f"separatrix from saddle {c.id} did not reach a singular point")
                end = crit[lab]
                if end.index == 1:
                    raise NotMorseSmaleError(
                        f"saddle-saddle connection {c.id} -> {end.id}; perturb the function or the metric")
                full = np.concatenate([c.point[None], path])
                if not model.is_sphere:
                    full = geo.unwrap_torus_loop(full, model.size)
                if side == "ascending":
                    lines.append(FlowLine(end.id, c.id, side, full[::-1].copy()))
                else:
                    lines.append(FlowLine(c.id, end.id, side, full))
    lines.sort(key=lambda ln: (ln.upper, ln.lower, ln.saddle_side, tuple(np.round(ln.path[len(ln.path) // 2], 9))))
    gens = {k: [c.id for c in crit if c.index == k] for k in range(3)}
    counts, boundary = {}, {}
    for k in (1, 2):
        M = np.zeros((len(gens[k - 1]), len(gens[k])), dtype=int)
        for ln in lines:
            if crit[ln.upper].index == k and crit[ln.lower].index == k - 1:
                M[gens[k - 1].index(ln.lower), gens[k].index(ln.upper)] += 1
        counts[k] = M
        boundary[k] = M % 2
    dd = boundary[1] @ boundary[2] % 2
    r1, r2 = gf2_rank(boundary[1]), gf2_rank(boundary[2])
    betti = (len(gens[0]) - r1, len(gens[1]) - r1 - r2, len(gens[2]) - r2)
    return MorseComplexData(model, crit, lines, boundary, counts, betti, not np.any(dd))


def match_orbits(model: SurfaceModel, crit: list[CriticalPoint], orbits, tol: float = 1e-6) -> dict:
    """Map orbit ids (constant orbits) to critical point ids by position."""
    out = {}
    for o in orbits:
        loop = o.loop if hasattr(o, "loop") else np.asarray(o)
        if float(np.ptp(loop, axis=0).max()) > tol * model.size:
            raise UnsupportedCaseError(f"orbit {getattr(o, 'id', '?')} is not constant")
        d = [float(geo.surface_distance(model, loop[0], c.point)) for c in crit]
        j = int(np.argmin(d))
        if d[j] > tol * model.size:
            raise UnsupportedCaseError(f"orbit {getattr(o, 'id', '?')} is not a critical point of f")
        out[getattr(o, "id", len(out))] = j
    return out


def restricted_complex(model: SurfaceModel, family, orbits, H: HamiltonianSpec,
                       settings: MorseSettings = MorseSettings()) -> MorseComplexData:
    """Complex generated by a murm family of a small autonomous Hamiltonian.

    Realized only when the family is the whole critical set of H, where it
    coincides with the Morse complex of H.
    """
    if getattr(family, "kind", None) != "murm":
        raise UnsupportedCaseError("restricted complexes are built for murm families")
    if not H.autonomous:
        raise UnsupportedCaseError("time-dependent Hamiltonians are not realized")
    cx = build_morse_complex(model, H, settings)
    by_id = {o.id: o for o in orbits}
    members = [by_id[m.orbit] for m in family.members]
    if any(m.capping != 0 for m in family.members):
        raise UnsupportedCaseError("only base cappings are realized")
    matched = match_orbits(model, cx.critical, members)
    if sorted(matched.values()) != list(range(len(cx.critical))):
        raise UnsupportedCaseError("family is not the full critical set of H")
    for m in family.members:
        if cx.critical[matched[m.orbit]].mu != m.mu:
            raise UnsupportedCaseError(f"index mismatch for orbit {m.orbit}")
    return cx


# ---------------------------------------------------------- foliation

@dataclass
class FoliationAtlas:
    model: SurfaceModel
    singular: list
    separatrices: list
    leaves: list = field(repr=False)  # embedded polylines oriented along -grad f
    coverage: float = 0.0
    coverage_counts: dict = field(default_factory=dict)
    buffer: float = 1e-3

    def to_dict(self) -> dict:
        return {
            "singular": [c.to_dict() for c in self.singular],
            "separatrices": [s.to_dict() for s in self.separatrices],
            "leaves": len(self.leaves),
            "coverage": self.coverage,
            "coverage_counts": self.coverage_counts,
        }


def coverage_grid(model: SurfaceModel, n: int) -> np.ndarray:
    """Test points; the torus grid is offset by irrational fractions of a cell."""
    if model.is_sphere:
        return model.size * geo.fibonacci_sphere(n * n)
    ox, oy = 0.5 * (np.sqrt(5) - 1), 1.0 / np.pi
    g = np.arange(n)
    X, Y = np.meshgrid((g + ox) / n, (g + oy) / n, indexing="ij")
    return model.size * np.stack([X.ravel(), Y.ravel()], axis=-1)


def trace_foliation(model: SurfaceModel, f: HamiltonianSpec, settings: MorseSettings = MorseSettings(),
                    leaf_grid: int = 12, coverage_n: int = 100) -> FoliationAtlas:
    cx = build_morse_complex(model, f, settings)
    crit = cx.critical
    # sampled regular leaves, each traced both ways and joined along -grad f
    seeds = coverage_grid(model, leaf_grid)
    up_lab, up_paths = trace_lines(model, f, seeds, 1.0, crit, settings, record=True)
    dn_lab, dn_paths = trace_lines(model, f, seeds, -1.0, crit, settings, record=True)
    leaves = []
    for a, b, la, lb in zip(up_paths, dn_paths, up_lab, dn_lab):
        if la < 0 or lb < 0:
            continue
        leaf = np.concatenate([a[::-1], b[1:]])
        if not model.is_sphere:
            leaf = geo.unwrap_torus_loop(leaf, model.size)
        leaves.append(leaf)
    # coverage: each test point must lie on a leaf joining a source to a sink
    pts = coverage_grid(model, coverage_n)
    crit_pts = np.stack([c.point for c in crit])
    _, dist = _nearest(model, pts, crit_pts)
    outside = dist >= settings.buffer
    P = pts[outside]
    alpha, _ = trace_lines(model, f, P, 1.0, crit, settings)
    omega, _ = trace_lines(model, f, P, -1.0, crit, settings)
    idx = np.array([c.index for c in crit])
    good = (alpha >= 0) & (omega >= 0)
    good &= np.where(alpha >= 0, idx[np.maximum(alpha, 0)] == 2, False)
    good &= np.where(omega >= 0, idx[np.maximum(omega, 0)] == 0, False)
    cells = {}
    for a, w in zip(alpha[good], omega[good]):
        cells[(int(a), int(w))] = cells.get((int(a), int(w)), 0) + 1
    counts = {
        "tested": int(P.shape[0]),
        "in_buffer": int(np.sum(~outside)),
        "covered": int(np.sum(good)),
        "failed": int(np.sum((alpha < 0) | (omega < 0))),
        "cells": {f"{a}->{w}": v for (a, w), v in sorted(cells.items())},
    }
    cov = float(np.mean(good)) if P.shape[0] else 1.0
    return FoliationAtlas(model, crit, cx.lines, leaves, cov, counts, settings.buffer)


def check_transversality(atlas: FoliationAtlas, H: HamiltonianSpec, t: float = 0.0) -> dict:
    """Sign of omega(X_H, d/ds u) along every sampled regular leaf segment."""
    model = atlas.model
    crit_pts = np.stack([c.point for c in atlas.singular])
    vals, skipped = [], 0
    for leaf in atlas.leaves:
        a, b = leaf[:-1], leaf[1:]
        mid = 0.5 * (a + b)
        if model.is_sphere:
            mid = geo.project_sphere(mid, model.size)
        _, dist = _nearest(model, mid % model.size if not model.is_sphere else mid, crit_pts)
        keep = dist >= atlas.buffer
        skipped += int(np.sum(~keep))
        if not np.any(keep):
            continue
        X = hamiltonian_ambient(model, H, mid[keep], t)
        vals.append(area_form(model, mid[keep], X, (b - a)[keep]))
    v = np.concatenate(vals) if vals else np.zeros(0)
    pos, neg, zero = int(np.sum(v > 0)), int(np.sum(v < 0)), int(np.sum(v == 0))
    sign = 1 if pos >= neg else -1
    violations = (neg if sign > 0 else pos) + zero
    return {"sign": sign if v.size else 0, "samples": int(v.size), "positive": pos, "negative": neg,
            "zero": zero, "violations": violations, "skipped": skipped,
            "min_abs": float(np.min(np.abs(v))) if v.size else 0.0}


# ------------------------------------------------------------- Peixoto

@dataclass
class PeixotoGraph:
    model: SurfaceModel
    vertices: list  # critical points
    edges: list  # FlowLine objects between index-difference-1 pairs

    def mu(self, vid: int) -> int:
        return self.vertices[vid].mu

    def edge_pairs(self) -> list[tuple[int, int]]:
        return [(e.upper, e.lower) for e in self.edges]

    def to_dict(self) -> dict:
        return {"vertices": [{"id": v.id, "mu": v.mu} for v in self.vertices],
                "edges": [[e.upper, e.lower] for e in self.edges]}


def peixoto_graph(cx: MorseComplexData) -> PeixotoGraph:
    edges = [ln for ln in cx.lines if cx.critical[ln.upper].index - cx.critical[ln.lower].index == 1]
    return PeixotoGraph(cx.model, list(cx.critical), edges)


def _arclength_resample(path: np.ndarray, n: int) -> np.ndarray:
    seg = np.linalg.norm(np.diff(path, axis=0), axis=-1)
    u = np.concatenate([[0.0], np.cumsum(seg)])
    u /= u[-1]
    w = np.linspace(0.0, 1.0, n)
    return np.stack([np.interp(w, u, path[:, k]) for k in range(path.shape[1])], axis=-1)


def edge_cylinder(model: SurfaceModel, edge: FlowLine, ns: int, nt: int) -> np.ndarray:
    """(ns, nt, d) samples of the t-independent cylinder over a flow line."""
    p = _arclength_resample(edge.path, ns)
    if model.is_sphere:
        p = geo.project_sphere(p, model.size)
    return np.repeat(p[:, None, :], nt, axis=1)


def edge_crossings(model: SurfaceModel, edge: FlowLine, gamma: lk.CappedLoop,
                   grids=((96, 128), (101, 131), (107, 137))):
    """Signed intersections of an edge cylinder's graph with a probe loop's graph."""

    def build(ns, nt):
        cyl = edge_cylinder(model, edge, ns, nt)
        g = geo.periodic_resample(geo.as_loop(model, gamma.loop), nt)
        strands = np.stack([cyl, np.repeat(g[None], ns, axis=0)])
        caps = np.array([0, gamma.capping])
        return lk.DiscreteCobordism(model, strands, np.linspace(0, 1, ns), caps, caps.copy())

    return lk.robust_crossings(build, grids)


def cochain_relation(graph: PeixotoGraph, gamma) -> dict:
    """Check I_gamma(u) = l_gamma(lower) - l_gamma(upper) on every edge."""
    model = graph.model
    g = lk.as_capped(gamma)
    ell = {}
    for v in graph.vertices:
        ell[v.id] = lk.pairwise_linking(model, g, lk.CappedLoop(v.point[None], 0))
    rows = []
    for e in graph.edges:
        _, events = edge_crossings(model, e, g)
        if any(not ev.resolved for ev in events):
            raise lk.NonTransverseError(f"unresolved crossing on edge {e.upper}->{e.lower}")
        I = int(sum(ev.sign for ev in events))
        delta = ell[e.lower] - ell[e.upper]
        rows.append({"edge": [e.upper, e.lower], "I": I, "delta": delta, "holds": I == delta,
                     "crossings": len(events)})
    return {"ell": {str(k): v for k, v in ell.items()}, "edges": rows, "holds": all(r["holds"] for r in rows)}


def edge_window_checks(graph: PeixotoGraph) -> dict:
    """Index window b(x) <= l(x, y) <= a(y) and monotonicity against third vertices."""
    model = graph.model
    pts = {v.id: lk.CappedLoop(v.point[None], 0) for v in graph.vertices}
    pair = {}

    def ell(a, b):
        key = (min(a, b), max(a, b))
        if key not in pair:
            pair[key] = lk.pairwise_linking(model, pts[a], pts[b])
        return pair[key]

    window, mono = [], []
    for e in graph.edges:
        x, y = e.upper, e.lower
        a_y = winding_bounds(graph.mu(y))[0]
        b_x = winding_bounds(graph.mu(x))[1]
        l_xy = ell(x, y)
        window.append({"edge": [x, y], "b": b_x, "l": l_xy, "a": a_y, "holds": b_x <= l_xy <= a_y})
        for v in graph.vertices:
            if v.id in (x, y):
                continue
            mono.append({"edge": [x, y], "third": v.id, "holds": ell(x, v.id) <= ell(y, v.id)})
    return {"window": window, "monotone": mono,
            "holds": all(r["holds"] for r in window) and all(r["holds"] for r in mono)}


def edge_profiles(graph: PeixotoGraph, ns: int = 33, nt: int = 8) -> list[dict]:
    """Linking profile along each edge cylinder against every other vertex."""
    model = graph.model
    out = []
    for e in graph.edges:
        cyl = edge_cylinder(model, e, ns, nt)
        for v in graph.vertices:
            if v.id in (e.upper, e.lower):
                continue
            const = np.repeat(np.repeat(v.point[None, None], ns, axis=0), nt, axis=1)
            prof = lk.linking_profile(model, cyl, const)
            out.append({"edge": [e.upper, e.lower], "third": v.id, "values": prof.values.tolist(),
                        "nondecreasing": prof.nondecreasing})
    return out


def far_probe_point(graph: PeixotoGraph, n: int = 48) -> np.ndarray:
    """Grid point farthest from every vertex and edge, for constant probe loops."""
    model = graph.model
    cand = coverage_grid(model, n)
    pts = [v.point[None] for v in graph.vertices] + [e.path for e in graph.edges]
    allp = np.concatenate(pts)
    if not model.is_sphere:
        allp = allp % model.size
    best = np.full(cand.shape[0], np.inf)
    for chunk in np.array_split(np.arange(allp.shape[0]), max(1, allp.shape[0] // 2048)):
        d = cand[:, None, :] - allp[chunk][None]
        if not model.is_sphere:
            d -= model.size * np.round(d / model.size)
        best = np.minimum(best, np.linalg.norm(d, axis=-1).min(axis=1))
    return cand[int(np.argmax(best))]

"""Hamiltonian flows on surface charts and periodic-orbit search.

Conventions: ``omega(X_H, .) = -dH`` with ``omega = rho dx^dy`` in a chart,
so ``X_H = (-H_y, H_x) / rho``.  Interior maxima therefore rotate clockwise.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geo
from .geometry import SurfaceModel, SurfacePoint
from .hamparse import HamiltonianSpec


class NumericalFailure(RuntimeError):
    """Integration or Newton failure that invalidates a result."""


class DegenerateOrbitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FlowConfig:
    steps: int = 2048  # RK4 steps per unit time for records and polishing
    search_steps: int = 256  # RK4 steps per unit time during the seed search
    newton_tol: float = 1e-10
    seed_grid: int = 16
    dedup_radius: float | None = None  # defaults to 10 * newton_tol
    degeneracy_tol: float = 1e-4
    max_newton: int = 40
    threads: int = 1

    def __post_init__(self):
        for name in ("steps", "search_steps", "seed_grid", "max_newton", "threads"):
            if int(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("newton_tol", "degeneracy_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.dedup_radius is not None and not self.dedup_radius > 0:
            raise ValueError("dedup_radius must be positive")

    @property
    def dedup(self) -> float:
        return self.dedup_radius if self.dedup_radius is not None else 10 * self.newton_tol


# ---------------------------------------------------------------- field

class FlowField:
    """Hamiltonian vector field and its Jacobian in each chart."""

    def __init__(self, model: SurfaceModel, H: HamiltonianSpec):
        self.model = model
        self.H = H
        self.names = model.charts
        missing = [c for c in self.names if c not in H.charts]
        if missing:
            raise ValueError(f"Hamiltonian lacks chart(s) {missing}")
        self.funcs = [H.chart(c) for c in self.names]

    def _one(self, idx: int, t, z, jac: bool):
        f = self.funcs[idx]
        x, y = z[:, 0], z[:, 1]
        hx, hy, hxx, hxy, hyy = f.derivatives(t, x, y)
        X = np.empty_like(z)
        X[:, 0] = -hy
        X[:, 1] = hx
        if self.model.is_sphere:
            R = self.model.size
            s = R * R + x * x + y * y
            inv_rho = s * s / (4 * R**4)
            X *= inv_rho[:, None]
        if not jac:
            return X, None
        D = np.empty((z.shape[0], 2, 2))
        D[:, 0, 0] = -hxy
        D[:, 0, 1] = -hyy
        D[:, 1, 0] = hxx
        D[:, 1, 1] = hxy
        if self.model.is_sphere:
            D *= inv_rho[:, None, None]
            g = -4 * z / s[:, None]
            D -= X[:, :, None] * g[:, None, :]
        return X, D

    def __call__(self, charts: np.ndarray, t, z: np.ndarray, jac: bool = False):
        if len(self.names) == 1:
            return self._one(0, t, z, jac)
        lo, hi = charts.min(), charts.max()
        if lo == hi:
            return self._one(int(lo), t, z, jac)
        X = np.empty_like(z)
        D = np.empty((z.shape[0], 2, 2)) if jac else None
        for idx in range(len(self.names)):
            mask = charts == idx
            if not np.any(mask):
                continue
            tt = t[mask] if np.ndim(t) else t
            Xi, Di = self._one(idx, tt, z[mask], jac)
            X[mask] = Xi
            if jac:
                D[mask] = Di
        return X, D

    def hamiltonian(self, charts: np.ndarray, t, z: np.ndarray) -> np.ndarray:
        out = np.empty(z.shape[0])
        for idx in range(len(self.names)):
            mask = charts == idx
            if np.any(mask):
                tt = t[mask] if np.ndim(t) else t
                out[mask] = self.funcs[idx].H(tt, z[mask, 0], z[mask, 1])
        return out


@dataclass
class FlowState:
    z: np.ndarray  # (n, 2)
    charts: np.ndarray  # (n,) chart indices
    P: np.ndarray | None = None  # (n, 2, 2) linearized flow in chart frame


def _switch_charts(model: SurfaceModel, st: FlowState) -> None:
    if not model.is_sphere:
        return
    R = model.size
    far = np.hypot(st.z[:, 0], st.z[:, 1]) > geo.CHART_SWITCH * R
    if not np.any(far):
        return
    zf = st.z[far]
    if st.P is not None:
        st.P[far] = geo.sphere_transition_jacobian(zf, R) @ st.P[far]
    st.z[far] = geo.sphere_transition(zf, R)
    st.charts[far] = 1 - st.charts[far]


def flow(field: FlowField, st: FlowState, t0: float, duration: float, nsteps: int,
         switch: bool = True, record: bool = False):
    """Advance ``st`` in place by RK4.  Returns recorded (z, charts, P) lists if asked."""
    h = duration / nsteps
    var = st.P is not None
    rec = ([st.z.copy()], [st.charts.copy()], [st.P.copy()] if var else None) if record else None
    for k in range(nsteps):
        t = t0 + k * h
        z = st.z
        if var:
            P = st.P
            k1, D1 = field(st.charts, t, z, True)
            K1 = D1 @ P
            k2, D2 = field(st.charts, t + h / 2, z + h / 2 * k1, True)
            K2 = D2 @ (P + h / 2 * K1)
            k3, D3 = field(st.charts, t + h / 2, z + h / 2 * k2, True)
            K3 = D3 @ (P + h / 2 * K2)
            k4, D4 = field(st.charts, t + h, z + h * k3, True)
            K4 = D4 @ (P + h * K3)
            st.P = P + h / 6 * (K1 + 2 * K2 + 2 * K3 + K4)
        else:
            k1, _ = field(st.charts, t, z)
            k2, _ = field(st.charts, t + h / 2, z + h / 2 * k1)
            k3, _ = field(st.charts, t + h / 2, z + h / 2 * k2)
            k4, _ = field(st.charts, t + h, z + h * k3)
        st.z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(st.z)):
            raise NumericalFailure("integration produced non-finite values")
        if switch:
            _switch_charts(field.model, st)
        if record:
            rec[0].append(st.z.copy())
            rec[1].append(st.charts.copy())
            if var:
                rec[2].append(st.P.copy())
    return rec


def _embed(model: SurfaceModel, z: np.ndarray, charts: np.ndarray) -> np.ndarray:
    if not model.is_sphere:
        return z.copy()
    out = np.empty(z.shape[:-1] + (3,))
    for idx, name in enumerate(model.charts):
        mask = charts == idx
        if np.any(mask):
            out[mask] = geo.chart_to_embed(model, name, z[mask])
    return out


def _chart_index(model: SurfaceModel, name: str) -> int:
    return model.charts.index(name)


@dataclass
class SampledPath:
    times: np.ndarray
    points: np.ndarray  # embedded coordinates
    chart_coords: np.ndarray
    charts: list


def integrate_flow(model: SurfaceModel, H: HamiltonianSpec, z0: SurfacePoint, t0: float, t1: float,
                   cfg: FlowConfig = FlowConfig()) -> SampledPath:
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    fld = FlowField(model, H)
    n = max(1, int(np.ceil((t1 - t0) * cfg.steps)))
    st = FlowState(z0.array[None, :].copy(), np.array([_chart_index(model, z0.chart)]))
    zs, cs, _ = flow(fld, st, t0, t1 - t0, n, record=True)
    z = np.array(zs)[:, 0]
    c = np.array(cs)[:, 0]
    return SampledPath(t0 + (t1 - t0) * np.arange(n + 1) / n, _embed(model, z, c), z,
                       [model.charts[i] for i in c])


# -------------------------------------------------------------- records

@dataclass
class OrbitRecord:
    id: int
    period: int
    start: SurfacePoint
    loop: np.ndarray = field(repr=False)  # (n, d) embedded samples on [0, period)
    monodromy: np.ndarray = field(repr=False)
    residual: float = 0.0
    nondegenerate: bool = True
    near_threshold: bool = False
    eigen_gap: float = 0.0  # min |lambda - 1|
    frame_chart: str = "T"
    frame_path: np.ndarray | None = field(default=None, repr=False)  # (n+1, 2, 2)
    capping: int = 0
    action: float = float("nan")

    @property
    def is_constant(self) -> bool:
        return float(np.ptp(self.loop, axis=0).max()) < 1e-9

    def basepoint(self) -> np.ndarray:
        return self.loop[0]

    def summary(self) -> dict:
        return {
            "id": self.id,
            "period": self.period,
            "chart": self.start.chart,
            "start": [float(v) for v in self.start.coords],
            "action": float(self.action),
            "residual": float(self.residual),
            "monodromy": [[float(v) for v in row] for row in self.monodromy],
            "nondegenerate": bool(self.nondegenerate),
            "near_threshold": bool(self.near_threshold),
            "eigen_gap": float(self.eigen_gap),
        }


@dataclass
class SearchResult:
    orbits: list
    degenerate: list
    failures: int
    seeds: int


def monodromy(model: SurfaceModel, H: HamiltonianSpec, orbit: OrbitRecord, cfg: FlowConfig = FlowConfig()) -> np.ndarray:
    """Linearized period map along the orbit, recomputed in the orbit's start chart."""
    fld = FlowField(model, H)
    st = FlowState(orbit.start.array[None, :].copy(),
                   np.array([_chart_index(model, orbit.start.chart)]), np.eye(2)[None].copy())
    flow(fld, st, 0.0, float(orbit.period), cfg.steps * orbit.period)
    P = st.P[0]
    if st.charts[0] != _chart_index(model, orbit.start.chart):
        # returned in the other chart: pull the frame back through the transition
        P = geo.sphere_transition_jacobian(st.z[0], model.size) @ P
    return P


def action(model: SurfaceModel, H: HamiltonianSpec, orbit: OrbitRecord, capping: int | geo.CappingClass = 0) -> float:
    """Hamiltonian term minus capping area, by the periodic trapezoidal rule."""
    loop = orbit.loop
    n = loop.shape[0]
    m = orbit.period
    times = m * np.arange(n) / n
    fld = FlowField(model, H)
    if model.is_sphere:
        names = geo.preferred_chart(model, loop)
        charts = np.where(names == "N", 0, 1)
        z = np.empty((n, 2))
        for idx, name in enumerate(model.charts):
            mask = charts == idx
            if np.any(mask):
                z[mask] = geo.embed_to_chart(model, loop[mask], name)
    else:
        charts = np.zeros(n, dtype=int)
        z = loop
    hvals = fld.hamiltonian(charts, times, z)
    integral = float(np.sum(hvals) * m / n)
    return integral - geo.capping_area(model, loop, capping)


# ---------------------------------------------------------------- search

def seed_points(model: SurfaceModel, grid: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic seeds as (chart coords, chart indices)."""
    if not model.is_sphere:
        L = model.size
        g = (np.arange(grid) + 0.5) / grid * L
        X, Y = np.meshgrid(g, g, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=-1), np.zeros(grid * grid, dtype=int)
    P = model.size * geo.fibonacci_sphere(2 * grid * grid)
    charts = np.where(P[:, 2] >= 0, 0, 1)
    z = np.empty((P.shape[0], 2))
    for idx, name in enumerate(model.charts):
        mask = charts == idx
        z[mask] = geo.embed_to_chart(model, P[mask], name)
    return z, charts


def _period_residual(model, st0: FlowState, st1: FlowState):
    """F = phi(z) - z in the starting chart, and the Jacobian of phi there."""
    z1, P = st1.z.copy(), st1.P.copy()
    if model.is_sphere:
        moved = st1.charts != st0.charts
        if np.any(moved):
            R = model.size
            P[moved] = geo.sphere_transition_jacobian(z1[moved], R) @ P[moved]
            z1[moved] = geo.sphere_transition(z1[moved], R)
    return z1 - st0.z, P


def _newton(model, fld, z, charts, period, nsteps, tol, max_iter, max_step):
    """Vectorized damped Newton on phi^m(z) - z.  Returns z, charts, |F|, converged."""
    z = z.copy()
    charts = charts.copy()
    n = z.shape[0]
    active = np.ones(n, dtype=bool)
    conv = np.zeros(n, dtype=bool)
    res = np.full(n, np.inf)
    Pend = np.full((n, 2, 2), np.nan)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        st0 = FlowState(z[idx].copy(), charts[idx].copy())
        st = FlowState(z[idx].copy(), charts[idx].copy(), np.broadcast_to(np.eye(2), (idx.size, 2, 2)).copy())
        try:
            with np.errstate(all="ignore"):
                flow(fld, st, 0.0, float(period), nsteps * period)
        except NumericalFailure:
            # fall back to one trajectory at a time so a single blow-up does not sink the batch
            ok = np.zeros(idx.size, dtype=bool)
            for j in range(idx.size):
                sj = FlowState(st0.z[j:j + 1].copy(), st0.charts[j:j + 1].copy(), np.eye(2)[None].copy())
                try:
                    with np.errstate(all="ignore"):
                        flow(fld, sj, 0.0, float(period), nsteps * period)
                except NumericalFailure:
                    continue
                st.z[j], st.charts[j], st.P[j] = sj.z[0], sj.charts[0], sj.P[0]
                ok[j] = True
            active[idx[~ok]] = False
            keep = ok
            idx, st0 = idx[keep], FlowState(st0.z[keep], st0.charts[keep])
            st = FlowState(st.z[keep], st.charts[keep], st.P[keep])
        F, P = _period_residual(model, st0, st)
        r = np.linalg.norm(F, axis=-1)
        res[idx] = r
        done = r <= tol
        conv[idx[done]] = True
        Pend[idx[done]] = P[done]
        active[idx[done]] = False
        todo = ~done
        if not np.any(todo):
            break
        J = P[todo] - np.eye(2)
        Ft = F[todo]
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        bad = ~(np.abs(det) > 1e-14)
        det = np.where(bad, 1.0, det)
        step = -np.stack([J[:, 1, 1] * Ft[:, 0] - J[:, 0, 1] * Ft[:, 1],
                          -J[:, 1, 0] * Ft[:, 0] + J[:, 0, 0] * Ft[:, 1]], axis=-1) / det[:, None]
        norm = np.linalg.norm(step, axis=-1)
        scale = np.minimum(1.0, max_step / np.maximum(norm, 1e-300))
        step *= scale[:, None]
        ti = idx[todo]
        stopped = bad | ~np.all(np.isfinite(step), axis=-1)
        active[ti[stopped]] = False
        move = ti[~stopped]
        z[move] += step[~stopped]
        if model.is_sphere:
            stt = FlowState(z[move], charts[move])
            _switch_charts(model, stt)
            z[move], charts[move] = stt.z, stt.charts
        else:
            z[move] %= model.size
    return z, charts, res, conv, Pend


def _dedupe(model, P: np.ndarray, radius: float) -> list[int]:
    keep: list[int] = []
    for i in range(P.shape[0]):
        if keep and np.min(geo.surface_distance(model, P[keep], P[i])) <= radius:
            continue
        keep.append(i)
    return keep


def _sort_key(model, P: np.ndarray):
    if model.is_sphere:
        Q = np.round(P / model.size, 9)
    else:
        Q = np.round((P % model.size) / model.size, 9) % 1.0
    return tuple(float(v) for v in Q)


def _build_records(model, fld, Z0, C0, period, cfg) -> list[OrbitRecord]:
    """Trace candidates together; records carry loop, monodromy and frame path."""
    k = Z0.shape[0]
    if k == 0:
        return []
    n = cfg.steps * period
    st0 = FlowState(Z0.copy(), C0.copy())
    st = FlowState(Z0.copy(), C0.copy(), np.broadcast_to(np.eye(2), (k, 2, 2)).copy())
    zs, cs, Ps0 = flow(fld, st, 0.0, float(period), n, record=True)
    zs = np.array(zs)
    cs = np.array(cs)
    loops = np.stack([_embed(model, zs[:, j], cs[:, j]) for j in range(k)])
    F, P = _period_residual(model, st0, st)
    if model.is_sphere:
        extents = []
        with np.errstate(divide="ignore", invalid="ignore"):
            for name in model.charts:
                zc = geo.embed_to_chart(model, loops, name)
                extents.append(np.nan_to_num(np.max(np.hypot(zc[..., 0], zc[..., 1]), axis=1), nan=np.inf))
        frame_idx = np.argmin(np.stack(extents), axis=0)
        zf = np.stack([geo.embed_to_chart(model, loops[j, 0], model.charts[frame_idx[j]]) for j in range(k)])
    else:
        frame_idx = np.zeros(k, dtype=int)
        zf = Z0.copy()
    # linearized path in a fixed frame chart; reuse the traced one if it never left that chart
    if np.all(cs == frame_idx[None, :]):
        Ps = np.array(Ps0)
    else:
        sf = FlowState(zf, frame_idx.copy(), np.broadcast_to(np.eye(2), (k, 2, 2)).copy())
        _, _, Ps = flow(fld, sf, 0.0, float(period), n, switch=False, record=True)
        Ps = np.array(Ps)
    out = []
    for j in range(k):
        loop = loops[j, :-1]
        if not model.is_sphere and np.any(geo.lift_displacement(loop, model.size) != 0):
            continue
        M = P[j]
        gap = float(np.min(np.abs(np.linalg.eigvals(M) - 1.0)))
        out.append(OrbitRecord(
            id=j, period=period, start=SurfacePoint(model.charts[int(C0[j])], (float(Z0[j, 0]), float(Z0[j, 1]))),
            loop=loop, monodromy=M, residual=float(np.linalg.norm(F[j])),
            nondegenerate=gap > cfg.degeneracy_tol, near_threshold=gap < 10 * cfg.degeneracy_tol,
            eigen_gap=gap, frame_chart=model.charts[int(frame_idx[j])], frame_path=Ps[:, j],
        ))
    return out


def search_periodic_orbits(model: SurfaceModel, H: HamiltonianSpec, cfg: FlowConfig = FlowConfig(),
                           period: int = 1) -> SearchResult:
    period = int(period)
    if period < 1:
        raise ValueError("period must be a positive integer")
    fld = FlowField(model, H)
    z, charts = seed_points(model, cfg.seed_grid)
    spacing = model.size / cfg.seed_grid if not model.is_sphere else 2 * model.size / cfg.seed_grid
    chunks = np.array_split(np.arange(z.shape[0]), cfg.threads)

    def coarse(ix):
        return _newton(model, fld, z[ix], charts[ix], period, cfg.search_steps, 1e-7,
                       cfg.max_newton, 2 * spacing)

    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as ex:
            parts = list(ex.map(coarse, chunks))
    else:
        parts = [coarse(ix) for ix in chunks]
    zc = np.concatenate([p[0] for p in parts])
    cc = np.concatenate([p[1] for p in parts])
    ok = np.concatenate([p[3] for p in parts])
    failures = int(np.sum(~ok))
    zc, cc = zc[ok], cc[ok]
    emb = _embed(model, zc, cc)
    keep = _dedupe(model, emb, 1e-5 * model.size)
    zc, cc = zc[keep], cc[keep]
    # polish at full resolution
    zp, cp, res, conv, Pp = _newton(model, fld, zc, cc, period, cfg.steps, cfg.newton_tol, 8,
                                    1e-3 * model.size)
    failures += int(np.sum(~conv))
    zp, cp, Pp = zp[conv], cp[conv], Pp[conv]
    emb = _embed(model, zp, cp)
    keep = _dedupe(model, emb, cfg.dedup)
    order = sorted(keep, key=lambda i: _sort_key(model, emb[i]))
    if not model.is_sphere:
        zp = zp % model.size
    order = np.array(order, dtype=int)
    # monodromy screen before building full records
    P = Pp[order]
    gaps = np.array([np.min(np.abs(np.linalg.eigvals(M) - 1.0)) for M in P]) if order.size else np.zeros(0)
    bad = [{"chart": model.charts[int(cp[i])], "start": [float(v) for v in zp[i]], "eigen_gap": float(g)}
           for i, g in zip(order, gaps) if not g > cfg.degeneracy_tol]
    sel = order[gaps > cfg.degeneracy_tol]
    records = _build_records(model, fld, zp[sel], cp[sel], period, cfg)
    good = [r for r in records if r.nondegenerate and r.residual <= max(cfg.newton_tol, 1e-9)]
    failures += len(records) - len(good)
    for j, r in enumerate(good):
        r.id = j
        r.action = action(model, H, r, 0)
    return SearchResult(good, bad, failures, z.shape[0])


def find_periodic_orbits(model: SurfaceModel, H: HamiltonianSpec, cfg: FlowConfig = FlowConfig(),
                         period: int = 1) -> list[OrbitRecord]:
    result = search_periodic_orbits(model, H, cfg, period)
    if result.degenerate:
        warnings.warn(f"{len(result.degenerate)} degenerate fixed point(s) excluded", DegenerateOrbitWarning,
                      stacklevel=2)
    return result.orbits


def iterate_record(orbit: OrbitRecord, m: int) -> np.ndarray:
    """Loop samples of the m-fold iterate of a period-1 orbit (repeated samples)."""
    return np.concatenate([orbit.loop] * m)


def with_capping(orbit: OrbitRecord, model: SurfaceModel, H: HamiltonianSpec, k: int) -> OrbitRecord:
    geo.CappingClass(k).check(model)
    return replace(orbit, capping=int(k), action=action(model, H, orbit, k))

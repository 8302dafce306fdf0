"""Spectral invariants from finite orbit and family data.

c_im is the min over mp1 families of the max member action; the dual term is
the max over mn-1 families of the min member action; gamma_im is their
difference.  Everything here is a reduction over already computed data plus a
few grid quadratures for normalization and sanity bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .dynamics import FlowConfig, FlowField, OrbitRecord, action, search_periodic_orbits
from .families import MN1, MP1, BraidFamily, enumerate_families
from .geometry import SurfaceModel
from .hamparse import BinOp, Const, Func, HamiltonianSpec, Pi, Var, const


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class BoundCheck:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "pass": self.passed, "margin": self.margin, "detail": self.detail}


@dataclass
class SpectralReport:
    c_im: float
    witness: dict
    dual: float
    dual_witness: dict
    gamma_im: float
    checks: list = field(default_factory=list)
    uncertified: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "c_im": self.c_im,
            "witness": self.witness,
            "dual": self.dual,
            "dual_witness": self.dual_witness,
            "gamma_im": self.gamma_im,
            "checks": [c.to_dict() for c in self.checks],
            "uncertified": self.uncertified,
        }


def _usable(families: list[BraidFamily], kind: str, include_uncertified: bool):
    fams = [(i, f) for i, f in enumerate(families) if f.kind == kind]
    if not fams:
        raise SpectralError(f"no {kind} families")
    good = [(i, f) for i, f in fams if f.certified or include_uncertified]
    if not good:
        raise SpectralError(f"no certified {kind} families")
    return good


def c_im_fundamental(families: list[BraidFamily], include_uncertified: bool = False) -> tuple[float, dict]:
    """min over mp1 families of the max member action, with the attaining pair."""
    best = None
    for i, f in _usable(families, MP1, include_uncertified):
        top = max(f.members, key=lambda m: (m.action, -m.orbit))
        if best is None or top.action < best[0]:
            best = (top.action, {"family": i, "orbit": top.orbit, "capping": top.capping})
    return float(best[0]), best[1]


def dual_term(families: list[BraidFamily], include_uncertified: bool = False) -> tuple[float, dict]:
    """max over mn-1 families of the min member action."""
    best = None
    for i, f in _usable(families, MN1, include_uncertified):
        low = min(f.members, key=lambda m: (m.action, m.orbit))
        if best is None or low.action > best[0]:
            best = (low.action, {"family": i, "orbit": low.orbit, "capping": low.capping})
    return float(best[0]), best[1]


def gamma_im(mp1: list[BraidFamily], mn1: list[BraidFamily]) -> float:
    c, _ = c_im_fundamental(mp1)
    d, _ = dual_term(mn1)
    return c - d


def commutator_bound(model: SurfaceModel, upper: float, lower: float, k: int) -> dict:
    """Commutator-length test on the sphere.

    ``upper`` is the mp1 minimax (c_im) and ``lower`` the mn-1 maximin, both
    for a mean-zero Hamiltonian.  Triggered when min(upper, -lower) < -k Area,
    in which case the commutator length exceeds 2k + 1.
    """
    if not model.is_sphere:
        raise SpectralError("commutator bound is stated for the sphere")
    k = int(k)
    if k < 0:
        raise ValueError("k must be nonnegative")
    term = min(upper, -lower)
    threshold = -k * model.area
    triggered = bool(term < threshold)
    return {"k": k, "term": float(term), "threshold": float(threshold), "triggered": triggered,
            "cl_exceeds": 2 * k + 1 if triggered else None, "margin": float(threshold - term)}


# ------------------------------------------------------------- quadrature

def surface_samples(model: SurfaceModel, n: int):
    """(chart indices, chart coords, equal weights) on an n-by-n sized sample set."""
    if not model.is_sphere:
        L = model.size
        g = (np.arange(n) + 0.5) / n * L
        X, Y = np.meshgrid(g, g, indexing="ij")
        z = np.stack([X.ravel(), Y.ravel()], axis=-1)
        return np.zeros(z.shape[0], dtype=int), z, np.full(z.shape[0], model.area / z.shape[0])
    P = model.size * geo.fibonacci_sphere(n * n)
    charts = np.where(P[:, 2] >= 0, 0, 1)
    z = np.empty((P.shape[0], 2))
    for idx, name in enumerate(model.charts):
        mask = charts == idx
        z[mask] = geo.embed_to_chart(model, P[mask], name)
    return charts, z, np.full(P.shape[0], model.area / P.shape[0])


def _orbit_samples(model: SurfaceModel, orbits: list[OrbitRecord]):
    if not orbits:
        return np.zeros(0, dtype=int), np.zeros((0, 2))
    P = np.concatenate([o.loop for o in orbits])
    if not model.is_sphere:
        return np.zeros(P.shape[0], dtype=int), P % model.size
    names = geo.preferred_chart(model, P)
    charts = np.where(names == "N", 0, 1)
    z = np.empty((P.shape[0], 2))
    for idx, name in enumerate(model.charts):
        mask = charts == idx
        if np.any(mask):
            z[mask] = geo.embed_to_chart(model, P[mask], name)
    return charts, z


def spatial_mean(model: SurfaceModel, H: HamiltonianSpec, t: float, n: int = 512) -> float:
    charts, z, w = surface_samples(model, n)
    vals = FlowField(model, H).hamiltonian(charts, t, z)
    return float(np.sum(vals * w) / model.area)


def normalize_mean_zero(model: SurfaceModel, H: HamiltonianSpec, n: int = 512, nt: int = 16) -> tuple[HamiltonianSpec, np.ndarray]:
    """Subtract the omega-average of H_t, returned as a trigonometric polynomial in t."""
    if H.autonomous:
        coef = np.array([spatial_mean(model, H, 0.0, n)])
    else:
        tt = np.arange(nt) / nt
        coef = np.fft.rfft([spatial_mean(model, H, t, n) for t in tt]) / nt
    terms = const(float(np.real(coef[0])))
    for j, c in enumerate(coef[1:], start=1):
        scale = 1.0 if (nt % 2 or j < nt // 2) else 0.5
        a, b = 2 * scale * float(np.real(c)), -2 * scale * float(np.imag(c))
        arg = BinOp("*", const(2.0 * j), BinOp("*", Pi(), Var("t")))
        if abs(a) > 1e-15:
            terms = BinOp("+", terms, BinOp("*", Const(a), Func("cos", arg)))
        if abs(b) > 1e-15:
            terms = BinOp("+", terms, BinOp("*", Const(b), Func("sin", arg)))
    out = H.map_exprs(lambda e: BinOp("-", e, terms), f"({H.text}) - mean")
    return out, coef


def extrema_integrals(model: SurfaceModel, H: HamiltonianSpec, orbits=(), n: int = 512, nt: int = 64):
    """Quadrature of t -> min and t -> max of H_t over the grid plus orbit points."""
    charts, z, _ = surface_samples(model, n)
    oc, oz = _orbit_samples(model, list(orbits))
    charts = np.concatenate([charts, oc])
    z = np.concatenate([z, oz])
    fld = FlowField(model, H)
    times = [0.0] if H.autonomous else list(np.arange(nt) / nt)
    lo, hi = [], []
    for t in times:
        v = fld.hamiltonian(charts, t, z)
        lo.append(v.min())
        hi.append(v.max())
    return float(np.mean(lo)), float(np.mean(hi))


# ------------------------------------------------------------------ suite

def spectral_report(model: SurfaceModel, H: HamiltonianSpec, orbits: list[OrbitRecord], mp1: list[BraidFamily],
                    mn1: list[BraidFamily]) -> SpectralReport:
    c, wit = c_im_fundamental(mp1)
    d, dwit = dual_term(mn1)
    unc = [f.to_dict() for f in mp1 + mn1 if not f.certified]
    rep = SpectralReport(c, wit, d, dwit, c - d, uncertified=unc)
    rep.checks = sanity_suite(model, H, orbits, rep)
    return rep


def sanity_suite(model: SurfaceModel, H: HamiltonianSpec, orbits: list[OrbitRecord], report: SpectralReport,
                 grid: int = 512, parts=None, cfg: FlowConfig | None = None) -> list[BoundCheck]:
    """Bounds, spectrality, nonnegativity of gamma and (optionally) the max formula.

    ``parts`` lists Hamiltonians with pairwise disjoint supports summing to H.
    """
    checks = []
    lo, hi = extrema_integrals(model, H, orbits, grid)
    c = report.c_im
    checks.append(BoundCheck("lower bound", lo <= c + 1e-12, c - lo, f"integral of min H_t = {lo:.12g}"))
    checks.append(BoundCheck("upper bound", c <= hi + 1e-12, hi - c, f"integral of max H_t = {hi:.12g}"))
    by_id = {o.id: o for o in orbits}
    w = report.witness
    if w.get("orbit") in by_id:
        a = action(model, H, by_id[w["orbit"]], w.get("capping", 0))
        gap = abs(a - c)
        checks.append(BoundCheck("spectrality", gap <= 1e-8, 1e-8 - gap, f"witness action {a:.12g}"))
    else:
        checks.append(BoundCheck("spectrality", False, float("-inf"), "witness orbit missing"))
    checks.append(BoundCheck("gamma nonnegative", report.gamma_im >= -1e-12, report.gamma_im))
    if parts:
        total = c_im_of(model, H, cfg)[0]
        each = [c_im_of(model, P, cfg)[0] for P in parts]
        gap = abs(total - max(each))
        checks.append(BoundCheck("max formula", gap <= 1e-6, 1e-6 - gap,
                                 f"c_im(sum) = {total:.12g}, parts = {[round(e, 12) for e in each]}"))
    return checks


def c_im_of(model: SurfaceModel, H: HamiltonianSpec, cfg: FlowConfig | None = None, window: int = 2):
    """Search, enumerate mp1 families and reduce; returns (c_im, witness, orbits)."""
    res = search_periodic_orbits(model, H, cfg or FlowConfig())
    fams = enumerate_families(model, H, res.orbits, MP1, window)
    c, wit = c_im_fundamental(fams)
    return c, wit, res.orbits

"""Linking matrices and the braid families mp1, mn-1 and murm.

A family is a set of capped orbits (orbit id, capping class) satisfying an
index condition and a pairwise linking condition.  Families are the maximal
cliques of the compatibility graph, and each one carries a certificate: an
explicit cobordism from a trivial braid whose crossings are checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from . import geometry as geo
from . import linking as lk
from .dynamics import OrbitRecord
from .geometry import SurfaceModel
from .index import conley_zehnder

MP1 = "mp1"
MN1 = "mn-1"
MURM = "murm"
KINDS = (MP1, MN1, MURM)


@dataclass(frozen=True)
class Member:
    orbit: int
    capping: int
    mu: int
    action: float

    def key(self):
        return (self.orbit, self.capping)

    def to_dict(self) -> dict:
        return {"orbit": self.orbit, "capping": self.capping, "mu": self.mu, "action": self.action}


@dataclass
class LinkingMatrix:
    ids: list  # (orbit id, capping) pairs
    matrix: np.ndarray  # integer, diagonal set to 0
    defined: np.ndarray  # False on the diagonal and between cappings of one orbit

    def value(self, a, b) -> int:
        i, j = self.ids.index(a), self.ids.index(b)
        if not self.defined[i, j]:
            raise lk.NotABraidError(f"linking of {a} with {b} is undefined")
        return int(self.matrix[i, j])

    def to_csv(self) -> str:
        head = ",".join(["id"] + [f"{o}:{k}" for o, k in self.ids])
        rows = [head]
        for (o, k), row, ok in zip(self.ids, self.matrix, self.defined):
            cells = [str(int(v)) if d else "" for v, d in zip(row, ok)]
            rows.append(",".join([f"{o}:{k}"] + cells))
        return "\n".join(rows) + "\n"


def base_linking(model: SurfaceModel, orbits: list[OrbitRecord]) -> np.ndarray:
    """Pairwise linking of orbits in their base capping classes."""
    n = len(orbits)
    out = np.zeros((n, n), dtype=int)
    for i in range(n):
        for j in range(i + 1, n):
            v = lk.pairwise_linking(model, lk.CappedLoop(orbits[i].loop, 0), lk.CappedLoop(orbits[j].loop, 0))
            out[i, j] = out[j, i] = v
    return out


def linking_matrix(model: SurfaceModel, orbits: list[OrbitRecord], cappings=None, base=None) -> LinkingMatrix:
    """Matrix over (orbit, capping) pairs; recapping shifts by k_x + k_y."""
    if cappings is None:
        cappings = [(o.id, 0) for o in orbits]
    pos = {o.id: i for i, o in enumerate(orbits)}
    if base is None:
        base = base_linking(model, orbits)
    n = len(cappings)
    M = np.zeros((n, n), dtype=int)
    D = np.zeros((n, n), dtype=bool)
    for a, (oa, ka) in enumerate(cappings):
        for b, (ob, kb) in enumerate(cappings):
            if oa == ob:
                continue
            D[a, b] = True
            M[a, b] = base[pos[oa], pos[ob]] + ka + kb
    return LinkingMatrix(list(cappings), M, D)


@dataclass
class BraidFamily:
    kind: str
    members: list
    certified: bool
    certificate: lk.DiscreteCobordism | None = field(default=None, repr=False)
    linking: np.ndarray | None = None
    report: dict = field(default_factory=dict)

    def actions(self) -> list[float]:
        return [m.action for m in self.members]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "members": [m.to_dict() for m in self.members],
            "certified": self.certified,
            "linking": None if self.linking is None else self.linking.tolist(),
            "certificate": self.report,
        }


def capped_members(model: SurfaceModel, H, orbits: list[OrbitRecord], window: int = 2) -> list[Member]:
    from .dynamics import action

    out = []
    ks = range(-window, window + 1) if model.is_sphere else (0,)
    for o in orbits:
        mu0 = conley_zehnder(model, H, o, 0)
        a0 = o.action if np.isfinite(o.action) else action(model, H, o, 0)
        for k in ks:
            out.append(Member(o.id, int(k), mu0 - 4 * k if model.is_sphere else mu0, a0 - k * model.area))
    return out


def _index_ok(kind: str, mu: int) -> bool:
    if kind == MP1:
        return mu == 1
    if kind == MN1:
        return mu == -1
    return mu in (-1, 0, 1)


def _pair_ok(kind: str, ell: int) -> bool:
    if kind == MP1:
        return ell >= 0
    if kind == MN1:
        return ell <= 0
    return ell == 0


# ----------------------------------------------------------- certificates

def certificate_cobordism(model: SurfaceModel, loops: list[np.ndarray], cappings: list[int], nt: int = 256,
                          ns: int = 48) -> lk.DiscreteCobordism:
    """Cobordism from the trivial braid at the basepoints to the capped loops.

    Torus: straight shrink to basepoints.  Sphere: sweeps adjusting the classes
    of the constant strands, followed by the shrink in a chart projecting from
    a point far from every loop.
    """
    arrs = [geo.periodic_resample(geo.as_loop(model, lp), nt) for lp in loops]
    shrink = lk.shrink_cobordism(model, arrs, ns=ns, nt=nt)
    if not model.is_sphere:
        return shrink
    degrees = np.asarray(cappings, dtype=int) - shrink.caps1
    if not np.any(degrees):
        return shrink
    base = np.stack([a[0] for a in arrs])
    sweep = lk.sweep_cobordism(model, base, degrees, ns=64, nt=nt)
    shrink.caps0 = degrees.copy()
    shrink.caps1 = shrink.caps1 + degrees
    return lk.concatenate(sweep, shrink, tol=1e-8)


def certify(model: SurfaceModel, kind: str, loops, cappings) -> tuple[bool, lk.DiscreteCobordism | None, dict]:
    """Build and check a certificate; returns (certified, cobordism, report)."""
    if len(loops) == 1 and not model.is_sphere:
        return True, None, {"crossings": 0, "positive": True, "negative": True, "note": "single strand"}
    last_err = None
    for nt, ns in ((256, 48), (251, 53)):
        try:
            cob = certificate_cobordism(model, loops, cappings, nt=nt, ns=ns)
            events = lk.detect_crossings(cob)
            break
        except lk.CrossingAtSampleError as err:
            last_err = err
    else:
        return False, None, {"error": str(last_err)}
    classes = lk.cobordism_classes(cob)
    signs = [e.sign for e in events]
    unresolved = sum(not e.resolved for e in events)
    rep = {"crossings": len(events), "positive": all(s > 0 for s in signs) and not unresolved,
           "negative": all(s < 0 for s in signs) and not unresolved, "unresolved": unresolved,
           "classes": classes.tolist(), "linking": int(sum(signs))}
    ok_classes = not np.any(classes)
    if kind == MP1:
        ok = rep["positive"]
    elif kind == MN1:
        ok = rep["negative"]
    else:
        ok = len(events) == 0
    rep["zero_cobordism"] = bool(ok_classes)
    return bool(ok and ok_classes), cob, rep


def unlinkedness_certificate(model: SurfaceModel, loops, cappings=None) -> dict:
    """Certificate that a capped braid is unlinked, or a refusal with witnesses."""
    cappings = [0] * len(loops) if cappings is None else list(cappings)
    k = len(loops)
    for i in range(k):
        for j in range(i + 1, k):
            ell = lk.pairwise_linking(model, lk.CappedLoop(loops[i], cappings[i]),
                                      lk.CappedLoop(loops[j], cappings[j]))
            if ell != 0:
                return {"certified": False, "reason": "nonzero pairwise linking", "witness": [i, j, ell]}
    ok, cob, rep = certify(model, MURM, loops, cappings)
    out = {"certified": ok, "report": rep, "cobordism": cob}
    if not ok:
        out["reason"] = "shrink certificate has crossings (inconclusive)"
    return out


# ------------------------------------------------------------ enumeration

def enumerate_families(model: SurfaceModel, H, orbits: list[OrbitRecord], kind: str, window: int = 2,
                       base=None) -> list[BraidFamily]:
    if kind not in KINDS:
        raise ValueError(f"unknown family kind {kind!r}")
    members = [m for m in capped_members(model, H, orbits, window) if _index_ok(kind, m.mu)]
    members.sort(key=lambda m: (m.orbit, m.capping))
    by_id = {o.id: o for o in orbits}
    lm = linking_matrix(model, orbits, [m.key() for m in members], base)
    G = nx.Graph()
    G.add_nodes_from(range(len(members)))
    for a in range(len(members)):
        for b in range(a + 1, len(members)):
            if lm.defined[a, b] and _pair_ok(kind, int(lm.matrix[a, b])):
                G.add_edge(a, b)
    cliques = [sorted(c) for c in nx.find_cliques(G)] if members else []
    cliques.sort(key=lambda c: [members[i].key() for i in c])
    out = []
    for c in cliques:
        fam = [members[i] for i in c]
        loops = [by_id[m.orbit].loop for m in fam]
        ok, cob, rep = certify(model, kind, loops, [m.capping for m in fam])
        sub = lm.matrix[np.ix_(c, c)]
        out.append(BraidFamily(kind, fam, ok, cob, sub, rep))
    return out


def is_maximal(model: SurfaceModel, H, orbits, family: BraidFamily, window: int = 2, base=None) -> bool:
    """No admissible capped orbit outside the family can be added."""
    pool = [m for m in capped_members(model, H, orbits, window) if _index_ok(family.kind, m.mu)]
    have = {m.key() for m in family.members}
    keys = [m.key() for m in family.members]
    for cand in pool:
        if cand.key() in have:
            continue
        lm = linking_matrix(model, orbits, keys + [cand.key()], base)
        last = len(keys)
        if all(lm.defined[last, i] and _pair_ok(family.kind, int(lm.matrix[last, i])) for i in range(last)):
            return False
    return True


# ------------------------------------------------------------- iterates

def _same_loop(model, a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    a, b = lk._common_samples(a, b)
    return float(np.max(geo.surface_distance(model, a, b))) < tol


def iterate_linking_check(model: SurfaceModel, family: BraidFamily, orbits: list[OrbitRecord], m: int,
                          period_m: list, tol: float = 1e-6) -> dict:
    """Each period-m loop outside the iterated family must link it.

    ``period_m`` may hold orbit records or capped loops (synthetic probes).
    """
    if family.kind != MURM:
        raise ValueError("iterate check applies to murm families")
    by_id = {o.id: o for o in orbits}
    iterated = [lk.CappedLoop(np.concatenate([by_id[x.orbit].loop] * m), m * x.capping) for x in family.members]
    results = []
    violations = []
    for idx, y in enumerate(period_m):
        yc = lk.as_capped(y)
        if any(_same_loop(model, yc.loop, it.loop, tol) for it in iterated):
            results.append({"index": idx, "status": "member"})
            continue
        ells = [lk.pairwise_linking(model, it, yc) for it in iterated]
        if any(ells):
            results.append({"index": idx, "status": "linked", "linking": ells})
            continue
        cert = unlinkedness_certificate(model, [it.loop for it in iterated] + [yc.loop],
                                        [it.capping for it in iterated] + [yc.capping])
        if cert["certified"]:
            violations.append(idx)
            results.append({"index": idx, "status": "unlinked", "linking": ells})
        else:
            results.append({"index": idx, "status": "certificate failed", "linking": ells})
    return {"m": m, "checked": len(period_m), "results": results, "violations": violations,
            "pass": not violations}

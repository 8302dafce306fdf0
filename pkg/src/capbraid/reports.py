"""Command pipelines producing JSON-ready reports from a RunConfig."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import families as fam
from . import morsefol as mf
from . import spectral as sp
from .config import RunConfig
from .dynamics import SearchResult, search_periodic_orbits
from .index import conley_zehnder, index_data


@dataclass
class Pipeline:
    """Lazily computed stages for one configuration."""

    cfg: RunConfig
    warnings: list = field(default_factory=list)

    @cached_property
    def model(self):
        return self.cfg.model()

    @cached_property
    def H(self):
        return self.cfg.hamiltonian_spec()

    @cached_property
    def search(self) -> SearchResult:
        res = search_periodic_orbits(self.model, self.H, self.cfg.flow)
        if res.degenerate:
            self.warnings.append(f"{len(res.degenerate)} degenerate fixed point(s) excluded")
        for o in res.orbits:
            if o.near_threshold:
                self.warnings.append(f"orbit {o.id} is close to the degeneracy threshold")
        return res

    @property
    def orbits(self):
        return self.search.orbits

    @cached_property
    def base_linking(self) -> np.ndarray:
        return fam.base_linking(self.model, self.orbits)

    @cached_property
    def families(self) -> dict:
        return {k: fam.enumerate_families(self.model, self.H, self.orbits, k, self.cfg.window, self.base_linking)
                for k in fam.KINDS}

    @cached_property
    def spectral(self) -> sp.SpectralReport:
        return sp.spectral_report(self.model, self.H, self.orbits, self.families[fam.MP1], self.families[fam.MN1])

    @cached_property
    def complex(self) -> mf.MorseComplexData:
        return mf.build_morse_complex(self.model, self.H, self.cfg.morse)

    @cached_property
    def atlas(self) -> mf.FoliationAtlas:
        return mf.trace_foliation(self.model, self.H, self.cfg.morse, coverage_n=self.cfg.coverage_grid)

    # ------------------------------------------------------------ reports

    def header(self, command: str) -> dict:
        return {"command": command, "config": self.cfg.to_dict(), "config_hash": self.cfg.digest()}

    def orbit_table(self) -> list[dict]:
        return [o.summary() for o in self.orbits]

    def index_table(self) -> list[dict]:
        rows = []
        ks = range(-self.cfg.window, self.cfg.window + 1) if self.model.is_sphere else (0,)
        for o in self.orbits:
            for k in ks:
                mu = conley_zehnder(self.model, self.H, o, k)
                rows.append({"orbit": o.id, "capping": k, **index_data(mu).to_dict()})
        return rows

    def linking_table(self) -> dict:
        lm = fam.linking_matrix(self.model, self.orbits, base=self.base_linking)
        return {"ids": [list(i) for i in lm.ids], "matrix": lm.matrix.tolist(), "defined": lm.defined.tolist()}

    def linking_csv(self) -> str:
        return fam.linking_matrix(self.model, self.orbits, base=self.base_linking).to_csv()

    def family_table(self) -> dict:
        out = {}
        for kind, fs in self.families.items():
            out[kind] = []
            for f in fs:
                d = f.to_dict()
                d["maximal"] = fam.is_maximal(self.model, self.H, self.orbits, f, self.cfg.window, self.base_linking)
                out[kind].append(d)
        return out

    def report(self, command: str) -> dict:
        rep = self.header(command)
        if command in ("orbits", "index", "linking", "families", "spectral"):
            rep["orbits"] = self.orbit_table()
            rep["degenerate"] = self.search.degenerate
        if command in ("index", "families", "spectral"):
            rep["index"] = self.index_table()
        if command in ("linking", "families"):
            rep["linking"] = self.linking_table()
        if command in ("families", "spectral"):
            rep["families"] = self.family_table()
        if command == "spectral":
            rep["spectral"] = self.spectral.to_dict()
            if self.model.is_sphere:
                rep["commutator"] = [sp.commutator_bound(self.model, self.spectral.c_im, self.spectral.dual, k)
                                     for k in range(3)]
        if command == "morse":
            rep["complex"] = self.complex.to_dict()
            rep["peixoto"] = mf.peixoto_graph(self.complex).to_dict()
        if command == "foliate":
            rep["atlas"] = self.atlas.to_dict()
            rep["transversality"] = mf.check_transversality(self.atlas, self.H)
        rep["warnings"] = list(dict.fromkeys(self.warnings))
        return rep

"""Run configuration: TOML files with [surface], [hamiltonian], [flow], [families],
[morse] and [run] sections."""

from __future__ import annotations

import hashlib
import json
import re
import sys
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import FlowConfig
from .geometry import SPHERE, TORUS, SurfaceModel
from .hamparse import HamiltonianSpec, make_hamiltonian
from .morsefol import MorseSettings

PROFILES = ("default", "strict")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None, source: str = ""):
        where = f"{source}:" if source else ""
        if line is not None:
            where += f"{line}:{column or 1}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")
        self.message = message
        self.line = line
        self.column = column
        self.source = source

    def to_dict(self) -> dict:
        return {"error": "config", "message": self.message, "line": self.line, "column": self.column,
                "source": self.source}


@dataclass(frozen=True)
class RunConfig:
    surface: str = TORUS
    size: float = 1.0
    hamiltonian: str | dict = "0.05*sin(2*pi*x)*sin(2*pi*y)"
    flow: FlowConfig = FlowConfig()
    window: int = 2
    morse: MorseSettings = MorseSettings()
    coverage_grid: int = 100
    out: str = "capbraid-out"
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.surface not in (TORUS, SPHERE):
            raise ConfigError(f"surface kind must be '{TORUS}' or '{SPHERE}'")
        if not self.size > 0:
            raise ConfigError("surface size must be positive")
        if self.window < 0:
            raise ConfigError("capping window must be nonnegative")
        if self.coverage_grid <= 0:
            raise ConfigError("coverage_grid must be positive")
        for f in fields(MorseSettings):
            if not getattr(self.morse, f.name) > 0:
                raise ConfigError(f"morse.{f.name} must be positive")

    def model(self) -> SurfaceModel:
        return SurfaceModel.sphere(self.size) if self.surface == SPHERE else SurfaceModel.torus(self.size)

    def hamiltonian_spec(self) -> HamiltonianSpec:
        return make_hamiltonian(self.model(), self.hamiltonian)

    def to_dict(self) -> dict:
        flow = {k: v for k, v in asdict(self.flow).items() if v is not None and k != "threads"}
        ham = dict(self.hamiltonian) if isinstance(self.hamiltonian, dict) else {"expr": self.hamiltonian}
        return {
            "surface": {"kind": self.surface, "size": self.size},
            "hamiltonian": ham,
            "flow": flow,
            "families": {"window": self.window},
            "morse": {**asdict(self.morse), "coverage_grid": self.coverage_grid},
            "run": {"name": self.name, "out": self.out, "seed": self.seed},
        }

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def digest(self) -> str:
        """Hash of everything that affects results (output location excluded)."""
        d = self.to_dict()
        d["run"].pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def with_profile(self, profile: str) -> "RunConfig":
        if profile not in PROFILES:
            raise ConfigError(f"unknown tolerance profile {profile!r}")
        if profile == "default":
            return self
        f = self.flow
        strict = replace(f, steps=max(f.steps, 4096), search_steps=max(f.search_steps, 512),
                         seed_grid=max(f.seed_grid, 24), newton_tol=min(f.newton_tol, 1e-11))
        return replace(self, flow=strict)

    def with_threads(self, threads: int) -> "RunConfig":
        return replace(self, flow=replace(self.flow, threads=int(threads)))


_SECTIONS = {
    "surface": {"kind", "size"},
    "hamiltonian": {"expr", "north", "south"},
    "flow": {f.name for f in fields(FlowConfig)} - {"threads"},
    "families": {"window"},
    "morse": {f.name for f in fields(MorseSettings)} | {"coverage_grid"},
    "run": {"name", "out", "seed"},
}


def _locate(text: str, section: str, key: str | None) -> tuple[int | None, int | None]:
    lines = text.splitlines()
    head = re.compile(rf"^\s*\[\s*{re.escape(section)}\s*\]")
    start = None
    for i, ln in enumerate(lines):
        if head.match(ln):
            start = i
            if key is None:
                return i + 1, ln.index("[") + 1
            continue
        if start is not None:
            if re.match(r"^\s*\[", ln):
                break
            m = re.match(rf"^(\s*){re.escape(key)}\s*=", ln)
            if m:
                return i + 1, len(m.group(1)) + 1
    return (start + 1, 1) if start is not None else (None, None)


def _decode_error(err, text: str, source: str) -> ConfigError:
    line = getattr(err, "lineno", None)
    col = getattr(err, "colno", None)
    msg = getattr(err, "msg", None) or str(err)
    if line is None:
        m = re.search(r"\(at line (\d+), column (\d+)\)", str(err))
        if m:
            line, col = int(m.group(1)), int(m.group(2))
            msg = str(err)[: m.start()].strip()
    return ConfigError(msg, line, col, source)


def loads(text: str, source: str = "") -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise _decode_error(err, text, source) from None

    def fail(msg, section, key=None):
        line, col = _locate(text, section, key)
        return ConfigError(msg, line, col, source)

    for sec, body in data.items():
        if sec not in _SECTIONS:
            raise fail(f"unknown section [{sec}]", sec)
        if not isinstance(body, dict):
            raise ConfigError(f"'{sec}' must be a section", *_locate(text, sec, None), source)
        for key in body:
            if key not in _SECTIONS[sec]:
                raise fail(f"unknown key '{key}' in [{sec}]", sec, key)
    if "surface" not in data or "hamiltonian" not in data:
        raise ConfigError("config needs [surface] and [hamiltonian] sections", 1, 1, source)
    surf = data["surface"]
    ham = data["hamiltonian"]
    kind = surf.get("kind", TORUS)
    if "expr" in ham and ({"north", "south"} & set(ham)):
        raise fail("give either 'expr' or 'north'/'south', not both", "hamiltonian", "expr")
    if "expr" in ham:
        h = ham["expr"]
    elif {"north", "south"} <= set(ham):
        h = {"north": ham["north"], "south": ham["south"]}
    else:
        raise fail("hamiltonian needs 'expr' or both 'north' and 'south'", "hamiltonian")
    fam = data.get("families", {})
    morse = dict(data.get("morse", {}))
    run = data.get("run", {})
    cov = morse.pop("coverage_grid", 100)
    try:
        flow = FlowConfig(**data.get("flow", {}))
    except (TypeError, ValueError) as err:
        raise fail(str(err), "flow") from None
    try:
        ms = MorseSettings(**morse)
    except TypeError as err:
        raise fail(str(err), "morse") from None
    try:
        cfg = RunConfig(surface=kind, size=float(surf.get("size", 1.0)), hamiltonian=h, flow=flow,
                        window=int(fam.get("window", 2)), morse=ms, coverage_grid=int(cov),
                        out=str(run.get("out", "capbraid-out")), seed=int(run.get("seed", 0)),
                        name=str(run.get("name", "")))
    except ConfigError as err:
        raise ConfigError(err.message, *_locate(text, "surface", None), source) from None
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err), None, None, source) from None
    try:
        cfg.hamiltonian_spec()
    except Exception as err:  # parse errors, chart disagreement
        key = "expr" if "expr" in ham else "north"
        line, col = _locate(text, "hamiltonian", key)
        raise ConfigError(f"hamiltonian: {err}", line, col, source) from None
    return cfg


def load(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config: {err.strerror}", source=str(p)) from None
    return loads(text, str(p))


SHIPPED = ("torus_sinsin", "torus_sinsum", "sphere_height")


def shipped(name: str) -> RunConfig:
    text = resources.files("capbraid").joinpath("configs", f"{name}.toml").read_text()
    return loads(text, f"{name}.toml")


def shipped_text(name: str) -> str:
    return resources.files("capbraid").joinpath("configs", f"{name}.toml").read_text()

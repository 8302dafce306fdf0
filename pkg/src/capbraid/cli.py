"""Command line entry point.

    capbraid COMMAND [--config PATH] [--out DIR] [--threads N]
                     [--tolerance-profile {default,strict}] [--svg] [--only IDS]

Reports are written as ``<out>/<command>.json`` (keys sorted; wall-clock data
only under "timestamp"), linking matrices additionally as CSV and phase
portraits as SVG.  Exit status: 0 success, 1 property failure, 2 usage or
config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import checks
from .config import SHIPPED, ConfigError, RunConfig, load, shipped
from .dynamics import NumericalFailure
from .geometry import GeometryError
from .hamparse import EvaluationError
from .index import DegenerateOrbitError
from .linking import LinkingError
from .morsefol import MorseError, UnsupportedCaseError
from .reports import Pipeline
from .spectral import SpectralError

COMMANDS = ("orbits", "index", "linking", "families", "spectral", "morse", "foliate", "verify")
OUT_ENV = "CAPBRAID_OUT"
DEFAULT_CONFIG = "torus_sinsin"

EXIT_OK, EXIT_PROPERTY, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="capbraid", description="Capped braids, spectral invariants and "
                                 "transverse foliations of Hamiltonians on the torus and sphere.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="PATH",
                    help=f"TOML run config; a shipped name ({', '.join(SHIPPED)}) also works")
    ap.add_argument("--out", metavar="DIR", help=f"output directory (default: ${OUT_ENV}, then the config's run.out)")
    ap.add_argument("--threads", type=int, default=1, metavar="N")
    ap.add_argument("--tolerance-profile", choices=("default", "strict"), default="default")
    ap.add_argument("--svg", action="store_true", help="also write a phase portrait (autonomous Hamiltonians)")
    ap.add_argument("--only", metavar="IDS",
                    help="verify: comma-separated criterion ids, plus 'configs' for the config suites")
    return ap


def _load_config(arg: str | None) -> RunConfig:
    if arg is None:
        return shipped(DEFAULT_CONFIG)
    if arg in SHIPPED and not Path(arg).exists():
        return shipped(arg)
    return load(arg)


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or cfg.out)


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, sort_keys=True, indent=1, default=_jsonable) + "\n")


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _timestamp(started: float, wall: datetime, extra: dict | None = None) -> dict:
    out = {"started_utc": wall.isoformat(timespec="seconds"), "elapsed_s": round(time.perf_counter() - started, 3)}
    if extra:
        out.update(extra)
    return out


def _property_failures(command: str, pipe: Pipeline, rep: dict) -> list[str]:
    bad = []
    if command == "spectral" and not pipe.spectral.passed:
        bad += [c.name for c in pipe.spectral.checks if not c.passed]
    if command == "morse" and not pipe.complex.d_squared_zero:
        bad.append("boundary squared is nonzero")
    if command == "foliate":
        tr = rep["transversality"]
        if tr["violations"]:
            bad.append(f"{tr['violations']} transversality sign violations")
        if pipe.atlas.coverage < 0.999:
            bad.append(f"coverage {pipe.atlas.coverage:.4f} below 0.999")
    return bad


def _summary(command: str, rep: dict) -> list[str]:
    lines = []
    if "orbits" in rep:
        lines.append(f"orbits: {len(rep['orbits'])} nondegenerate, {len(rep['degenerate'])} degenerate")
    if "families" in rep:
        for kind, fs in rep["families"].items():
            lines.append(f"{kind}: {len(fs)} famil{'y' if len(fs) == 1 else 'ies'}")
    if "spectral" in rep:
        s = rep["spectral"]
        lines.append(f"c_im = {s['c_im']!r}  dual = {s['dual']!r}  gamma_im = {s['gamma_im']!r}")
    if "complex" in rep:
        lines.append(f"betti = {tuple(rep['complex']['betti'])}  d^2 = 0: {rep['complex']['d_squared_zero']}")
    if "transversality" in rep:
        tr = rep["transversality"]
        lines.append(f"coverage = {rep['atlas']['coverage']:.4f}  violations = {tr['violations']} of {tr['samples']}")
    return lines


def _run_command(args, cfg: RunConfig, out: Path, started: float, wall: datetime) -> int:
    pipe = Pipeline(cfg)
    rep = pipe.report(args.command)
    bad = _property_failures(args.command, pipe, rep)
    rep["property_failures"] = bad
    files = [f"{args.command}.json"]
    if args.command in ("linking", "families"):
        (out / "linking.csv").write_text(pipe.linking_csv())
        files.append("linking.csv")
    if args.svg:
        if pipe.H.autonomous:
            from .plotting import phase_portrait

            phase_portrait(pipe.atlas, pipe.H, out / "portrait.svg", title=cfg.name)
            files.append("portrait.svg")
        else:
            rep["warnings"].append("no portrait: the Hamiltonian depends on time")
    rep["timestamp"] = _timestamp(started, wall)
    _write_json(out / f"{args.command}.json", rep)
    for ln in _summary(args.command, rep):
        print(ln)
    for w in rep["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    for b in bad:
        print(f"FAIL: {b}", file=sys.stderr)
    print(f"wrote {', '.join(str(out / f) for f in files)}")
    return EXIT_PROPERTY if bad else EXIT_OK


def _run_verify(args, out: Path, started: float, wall: datetime) -> int:
    if args.only:
        wanted = [s.strip() for s in args.only.split(",") if s.strip()]
        unknown = [w for w in wanted if w not in checks.CRITERIA and w != "configs"]
        if unknown:
            raise ConfigError(f"--only: unknown criteria {', '.join(unknown)}")
        keys = [k for k in checks.CRITERIA if k in wanted]
        with_configs = "configs" in wanted
    else:
        keys, with_configs = list(checks.CRITERIA), True
    configs = []
    if with_configs:
        names = [args.config] if args.config else list(SHIPPED)
        configs = [_load_config(n).with_profile(args.tolerance_profile) for n in names]
    results = checks.run_suite(keys, configs, args.threads)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} [{r.id}] {r.name}")
    rep = checks.verify_report(results)
    budgets = [{"id": r.id, "elapsed_s": round(r.elapsed, 3), "budget_s": r.budget, "within_budget": r.within_budget}
               for r in results]
    rep["timestamp"] = _timestamp(started, wall, {"checks": budgets})
    _write_json(out / "verify.json", rep)
    print(f"{sum(r.passed for r in results)}/{len(results)} passed; wrote {out / 'verify.json'}")
    return EXIT_OK if rep["passed"] else EXIT_PROPERTY


def _error(kind: str, err: Exception, extra: dict | None = None) -> None:
    print(f"capbraid: {kind} error: {err}", file=sys.stderr)
    body = {"error": kind, "type": type(err).__name__, "message": str(err)}
    body.update(extra or {})
    print(json.dumps(body, sort_keys=True), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started, wall = time.perf_counter(), datetime.now(timezone.utc)
    try:
        if args.threads <= 0:
            raise ConfigError("--threads must be positive")
        cfg = _load_config(args.config).with_profile(args.tolerance_profile).with_threads(args.threads)
        out = _out_dir(args, cfg)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "verify":
            return _run_verify(args, out, started, wall)
        return _run_command(args, cfg, out, started, wall)
    except ConfigError as err:
        _error("config", err, err.to_dict())
        return EXIT_USAGE
    except (UnsupportedCaseError, OSError) as err:
        _error("usage", err)
        return EXIT_USAGE
    except (NumericalFailure, LinkingError, MorseError, DegenerateOrbitError, SpectralError, GeometryError,
            EvaluationError) as err:
        _error("numerical", err)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

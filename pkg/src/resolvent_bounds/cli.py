"""Command-line front end.

Every subcommand prints one report; ``--json`` makes it machine readable and
byte-stable for identical inputs.  Exit codes: 0 success, 2 bad input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .critical_atlas import chain_certificate, inertia_group, pattern_at, pattern_class, phi_s_values
from .errors import NumericalError
from .monodromy import ParamLoop, monodromy_group
from .perm_core import ALTERNATING, GROUP_KINDS, CycleType, lower_bound_s, max_chain
from .poly_lab import MPoly, ParametricFamily, Tolerances, point_from_json, point_to_json
from .resolvent_check import transformability_test

logger = logging.getLogger(__name__)

TABLE_DEGREES = (5, 6, 7, 8, 9)
# literature values, quoted rather than derived
HILBERT_COUNTS = {5: 1, 6: 2, 7: 3, 8: 4, 9: 4}
WIMAN_NOTE = "Wiman: for n >= 9 resolvents with s <= n - 5 parameters exist"


@dataclass(frozen=True)
class RunConfig:
    seed: int
    tolerances: Tolerances
    cache_dir: str | None
    output: str

    def __post_init__(self):
        t = self.tolerances
        if min(t.residual, t.cluster, t.safety) <= 0:
            raise ValueError("tolerances must be positive")
        if not -(2**63) <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    def to_json(self) -> dict:
        return {"seed": self.seed, "tolerances": self.tolerances.to_json(),
                "cache_dir": self.cache_dir, "output": self.output}


# -- input files ----------------------------------------------------------------

def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path} is not valid JSON: {exc}") from exc


def load_family(path: str) -> ParametricFamily:
    return ParametricFamily.from_json(_load(path))


def load_point(path: str) -> np.ndarray:
    data = _load(path)
    if isinstance(data, dict):
        data = data.get("point", data.get("basepoint"))
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a list of [re, im] pairs")
    return point_from_json(data)


def load_points(path: str) -> list[np.ndarray]:
    data = _load(path)
    if isinstance(data, dict):
        data = data.get("points")
    if not isinstance(data, list) or not data:
        raise ValueError(f"{path}: expected a non-empty list of points")
    return [point_from_json(p) for p in data]


def load_loops(path: str) -> list[ParamLoop]:
    data = _load(path)
    if isinstance(data, dict):
        data = data.get("loops")
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a list of paths")
    return [ParamLoop.from_json(p) for p in data]


def load_pmap(path: str, nvars: int) -> list[MPoly]:
    """One term list per target parameter, each term ``{"c": [re, im], "e": [...]}``."""
    data = _load(path)
    if isinstance(data, dict):
        data = data.get("pmap")
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a list of term lists")
    return [MPoly.from_json(terms, nvars) for terms in data]


def parse_class(text: str) -> CycleType:
    try:
        parts = [int(p) for p in text.replace(" ", "").split(",") if p]
    except ValueError as exc:
        raise ValueError(f"bad class {text!r}; expected e.g. \"3,1,1\"") from exc
    return CycleType.of(*parts)


# -- subcommands ----------------------------------------------------------------

def cmd_bound(args, cfg: RunConfig) -> dict:
    if args.n < 3:
        raise ValueError("n must be at least 3")
    cert = max_chain(args.n, args.kind)
    s = lower_bound_s(args.n) if args.kind == ALTERNATING else cert.length
    return {"n": args.n, "kind": args.kind, "s": s, "witness": [list(c.parts) for c in cert.chain]}


def cmd_chain(args, cfg: RunConfig) -> dict:
    fam = load_family(args.family)
    points = load_points(args.points)
    classes = [pattern_class(pattern_at(fam, p, cfg.tolerances)).to_json() for p in points]
    cert = chain_certificate(fam, points, cfg.tolerances)
    return {"classes": classes, "certificate": cert.to_json(), "bound": cert.length}


def cmd_monodromy(args, cfg: RunConfig) -> dict:
    fam = load_family(args.family)
    if args.basepoint:
        base = load_point(args.basepoint)
    elif args.auto:
        rng = np.random.default_rng(cfg.seed)
        base = rng.normal(size=fam.param_count) + 1j * rng.normal(size=fam.param_count)
    else:
        raise ValueError("--basepoint is required with --loops")
    loops = "auto" if args.auto else load_loops(args.loops)
    run = monodromy_group(fam, base, loops, seed=cfg.seed, tol=cfg.tolerances)
    out = run.to_json()
    out["basepoint"] = point_to_json(base)
    out["orbits"] = [list(o) for o in run.group.orbits()]
    out["loop_permutations"] = [p.to_json() for p in run.permutations]
    return out


def cmd_inertia(args, cfg: RunConfig) -> dict:
    fam = load_family(args.family)
    rep = inertia_group(fam, load_point(args.point), probes=args.probes, seed=cfg.seed, tol=cfg.tolerances)
    out = rep.to_json()
    out["violations"] = [g.to_json() for g in rep.violations()]
    return out


def cmd_phi(args, cfg: RunConfig) -> dict:
    fam = load_family(args.family)
    cls = parse_class(args.cls)
    res = phi_s_values(fam, load_point(args.point), cls, samples=args.samples, seed=cfg.seed,
                       tol=cfg.tolerances)
    return {
        "class": cls.to_json(),
        "holds": res.holds,
        "layouts": [[list(b) for b in lay] for lay in res.layouts],
        "max_abs_phi": [float(v.max()) for v in res.values],
        "vanishing_layouts": res.vanishing_layouts(),
        "samples": args.samples,
        "threshold": res.tol,
        "group_order": res.group.order,
    }


def cmd_transform(args, cfg: RunConfig) -> dict:
    fam_f = load_family(getattr(args, "from"))
    fam_g = load_family(args.to)
    pmap = load_pmap(args.pmap, fam_f.param_count)
    base = load_point(args.basepoint)
    if args.loops:
        loops = load_loops(args.loops)
    else:
        loops = list(monodromy_group(fam_f, base, "auto", seed=cfg.seed, tol=cfg.tolerances).loops)
    rep = transformability_test(fam_f, fam_g, pmap, base, loops, seed=cfg.seed, tol=cfg.tolerances)
    out = rep.to_json()
    out["loops"] = len(loops)
    return out


def table_report() -> dict:
    formula = [lower_bound_s(n) for n in TABLE_DEGREES]
    hilbert = [HILBERT_COUNTS[n] for n in TABLE_DEGREES]
    return {
        "n": list(TABLE_DEGREES),
        "tschebotarow": formula,
        "hilbert": hilbert,
        "hilbert_intro": hilbert,
        "notes": [
            "chain bound floor((n-1)/2), computed live",
            "hilbert: literature values, quoted",
            WIMAN_NOTE,
        ],
    }


def cmd_table(args, cfg: RunConfig) -> dict:
    return table_report()


def _format_table(report: dict) -> str:
    ns = report["n"]
    lines = ["n           " + " ".join(f"{n:>3}" for n in ns),
             "chain bound " + " ".join(f"{v:>3}" for v in report["tschebotarow"]),
             "Hilbert     " + " ".join(f"{v:>3}" for v in report["hilbert"])]
    lines += [f"note: {note}" for note in report["notes"][1:]]
    return "\n".join(lines)


COMMANDS = {
    "bound": cmd_bound, "chain": cmd_chain, "monodromy": cmd_monodromy, "inertia": cmd_inertia,
    "phi": cmd_phi, "transform": cmd_transform, "table": cmd_table,
}
CACHED = {"chain", "monodromy", "inertia", "phi", "transform"}
INPUT_FLAGS = ("family", "points", "point", "basepoint", "loops", "from", "to", "pmap")


# -- plumbing -------------------------------------------------------------------

def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    p.add_argument("--tol-residual", type=float, default=d(1e-10), help="root residual tolerance")
    p.add_argument("--tol-cluster", type=float, default=d(1e-6), help="root clustering tolerance")
    p.add_argument("--tol-safety", type=float, default=d(1e-12), help="discriminant safety threshold")
    p.add_argument("--json", action="store_true", default=d(False), help="emit JSON")
    p.add_argument("--cache-dir", default=d(None), help="directory for cached reports")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resolvent-bounds", allow_abbrev=False,
                                     description="Monodromy, inertia and chain bounds for parametric polynomials.")
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("bound", parents=[common], allow_abbrev=False, help="chain lower bound for degree n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=GROUP_KINDS, default=ALTERNATING)

    p = sub.add_parser("chain", parents=[common], allow_abbrev=False, help="certify a chain of coincidence classes")
    p.add_argument("--family", required=True)
    p.add_argument("--points", required=True, help="JSON list of points, lowest class first")

    p = sub.add_parser("monodromy", parents=[common], allow_abbrev=False, help="monodromy group at a basepoint")
    p.add_argument("--family", required=True)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--loops")
    mode.add_argument("--auto", action="store_true")
    p.add_argument("--basepoint", help="JSON point; drawn from the seed when omitted with --auto")

    p = sub.add_parser("inertia", parents=[common], allow_abbrev=False, help="inertia group at a critical point")
    p.add_argument("--family", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--probes", type=int, default=8)

    p = sub.add_parser("phi", parents=[common], allow_abbrev=False, help="critical-manifold membership test")
    p.add_argument("--family", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--class", dest="cls", required=True, help='cycle type such as "3,1,1"')
    p.add_argument("--samples", type=int, default=8)

    p = sub.add_parser("transform", parents=[common], allow_abbrev=False, help="polynomial root correspondence test")
    p.add_argument("--from", required=True)
    p.add_argument("--to", required=True)
    p.add_argument("--pmap", required=True)
    p.add_argument("--basepoint", required=True)
    p.add_argument("--loops", help="JSON loop list; auto loops of the source family when omitted")

    sub.add_parser("table", parents=[common], allow_abbrev=False, help="comparison table for n = 5..9")
    return parser


def _cache_key(args, cfg: RunConfig) -> str:
    blob = {"command": args.command, "config": cfg.to_json() | {"cache_dir": None, "output": None}}
    for name, value in sorted(vars(args).items()):
        if name in INPUT_FLAGS and value:
            blob[name] = _load(value)
        elif name not in ("json", "cache_dir", "verbose", "seed", "tol_residual", "tol_cluster", "tol_safety"):
            blob[name] = value
    return hashlib.sha256(json.dumps(blob, sort_keys=True).encode()).hexdigest()


def _compute(args, cfg: RunConfig) -> dict:
    fn = COMMANDS[args.command]
    if cfg.cache_dir is None or args.command not in CACHED:
        return fn(args, cfg)
    from filelock import FileLock

    cache = Path(cfg.cache_dir)
    cache.mkdir(parents=True, exist_ok=True)
    key = _cache_key(args, cfg)
    target = cache / f"{key}.json"
    with FileLock(str(cache / f"{key}.lock")):
        if target.exists():
            logger.info("cache hit %s", key)
            return json.loads(target.read_text(encoding="utf-8"))
        report = fn(args, cfg)
        target.write_text(json.dumps(report, sort_keys=True), encoding="utf-8")
        return report


def _text(report: dict) -> str:
    if report.get("command") == "table":
        return _format_table(report)
    return "\n".join(f"{k}: {json.dumps(v, sort_keys=True)}" for k, v in sorted(report.items()) if k != "config")


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = RunConfig(args.seed, Tolerances(args.tol_residual, args.tol_cluster, args.tol_safety),
                        args.cache_dir, "json" if args.json else "text")
        report = _compute(args, cfg)
    except NumericalError as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        if exc.location is not None:
            err["location"] = point_to_json(np.atleast_1d(exc.location))
        print(json.dumps(err, sort_keys=True), file=stderr)
        return 3
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=stderr)
        parser.print_usage(stderr)
        return 2
    report = dict(report, command=args.command, config=cfg.to_json())
    if args.json:
        print(json.dumps(report, sort_keys=True, indent=2), file=stdout)
    else:
        print(_text(report), file=stdout)
    return 0


def main() -> None:
    sys.exit(run())

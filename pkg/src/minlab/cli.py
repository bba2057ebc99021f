"""Command-line front end: generate, associate, verify and export.

Exit codes: 0 pass, 1 verification failure, 2 usage or configuration error,
3 integrability failure (period or loop defect, chart exit while marching),
4 input/output error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from . import catalog
from .associate import AssociateParams, congruence_test, make_associate, verify_family
from .checks import CHECKS, residual_report
from .errors import BundleFormatError, ChartExit, LoopDefectExceeded, MinlabError, PeriodDefect
from .io import ImmersionBundle, load_bundle, mesh_from_immersion, save_bundle, write_obj, write_ply
from .report import VerificationReport
from .wdata import GridDomain

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INTEGRABILITY, EXIT_IO = 0, 1, 2, 3, 4
log = logging.getLogger("minlab")


class UsageError(Exception):
    pass


@dataclass
class JobConfig:
    entry: Optional[str] = None
    params: Dict[str, float] = field(default_factory=dict)
    grid: int = 129
    domain: Optional[List[float]] = None
    thetas: List[float] = field(default_factory=list)
    checks: Optional[List[str]] = None
    output: str = "."
    tolerances: Dict[str, float] = field(default_factory=dict)
    bundle: Optional[str] = None
    format: Optional[str] = None
    steps: int = 8
    compare: Optional[str] = None
    compare_params: Dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        if self.entry is not None and self.entry not in catalog.REGISTRY:
            raise UsageError(f"unknown entry {self.entry!r}; registry: {', '.join(catalog.REGISTRY)}")
        for t in self.thetas:
            if not 0.0 <= t < 2 * math.pi:
                raise UsageError(f"theta {t} outside [0, 2 pi)")
        if self.domain is not None and len(self.domain) != 4:
            raise UsageError("--domain needs uMin,uMax,vMin,vMax")
        if self.checks is not None:
            unknown = [c for c in self.checks if c not in CHECKS]
            if unknown:
                raise UsageError(f"unknown checks {unknown}; available: {', '.join(CHECKS)}")

    def grid_domain(self, entry) -> GridDomain:
        bounds = self.domain if self.domain is not None else entry.domain
        return GridDomain.from_bounds(bounds, self.grid)


# ---------------------------------------------------------------------------
# argument handling


def _pairs(items, what) -> Dict[str, float]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"{what} expects name=value, got {item!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise UsageError(f"{what} {key}: {value!r} is not a number") from None
    return out


def _floats(text, what):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what} expects comma-separated numbers, got {text!r}") from None


def config_from_args(args) -> JobConfig:
    """Config file values first, then any flag the user actually passed."""
    base: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config}: {exc}") from exc
        if not isinstance(base, dict):
            raise UsageError("config file must hold one JSON object")
    known = set(JobConfig.__dataclass_fields__)
    extra = set(base) - known
    if extra:
        raise UsageError(f"unknown config keys {sorted(extra)}")
    cfg = JobConfig(**base)
    if args.entry is not None:
        cfg.entry = args.entry
    if args.param:
        cfg.params.update(_pairs(args.param, "--param"))
    if args.grid is not None:
        cfg.grid = args.grid
    if args.domain is not None:
        cfg.domain = _floats(args.domain, "--domain")
    if args.theta:
        cfg.thetas = [float(t) for t in args.theta]
    if args.checks is not None:
        cfg.checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    if args.out is not None:
        cfg.output = args.out
    if args.tol:
        cfg.tolerances.update(_pairs(args.tol, "--tol"))
    if getattr(args, "bundle", None):
        cfg.bundle = args.bundle
    if getattr(args, "format", None):
        cfg.format = args.format
    if getattr(args, "steps", None):
        cfg.steps = args.steps
    if getattr(args, "compare", None):
        cfg.compare = args.compare
    if getattr(args, "compare_param", None):
        cfg.compare_params.update(_pairs(args.compare_param, "--compare-param"))
    cfg.validate()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with JobConfig fields; flags override it")
    common.add_argument("--entry", help="catalog entry name")
    common.add_argument("--param", action="append", metavar="K=V", help="entry parameter (repeatable)")
    common.add_argument("--grid", type=int, help="samples along u (square cells)")
    common.add_argument("--domain", metavar="uMin,uMax,vMin,vMax")
    common.add_argument("--theta", action="append", type=float, metavar="V", help="associate angle (repeatable)")
    common.add_argument("--checks", metavar="LIST", help="comma-separated residual checks")
    common.add_argument("--out", help="output directory (file for export)")
    common.add_argument("--tol", action="append", metavar="NAME=V", help="tolerance override (repeatable)")
    common.add_argument("--bundle", help="existing immersion bundle to load instead of --entry")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="minlab", description="Minimal surfaces in M x R from Weierstrass data.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="sample a catalog entry into a JSON bundle")
    a = sub.add_parser("associate", parents=[common], help="build associate members and their report")
    a.add_argument("--steps", type=int, help="RK4 substeps per grid edge")
    a.add_argument("--compare", help="catalog entry to test each member against for congruence")
    a.add_argument("--compare-param", action="append", metavar="K=V")
    v = sub.add_parser("verify", parents=[common], help="residual report; exit 0 iff all checks pass")
    v.add_argument("--format", choices=["csv", "json"], help="format echoed to stdout (both are written)")
    e = sub.add_parser("export", parents=[common], help="write the sampled surface in the format chosen by --format")
    e.add_argument("--format", choices=["obj", "ply", "json"], default=None)
    return p


# ---------------------------------------------------------------------------
# commands


def _load_or_generate(cfg: JobConfig) -> ImmersionBundle:
    if cfg.bundle:
        return load_bundle(cfg.bundle)
    if cfg.entry is None:
        raise UsageError("give --entry or --bundle")
    try:
        entry = catalog.get_entry(cfg.entry, **cfg.params)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {cfg.entry}: {exc}") from exc
    imm = entry.immersion(grid=cfg.grid_domain(entry))
    return ImmersionBundle(imm, entry.name, dict(entry.params))


def _stem(bundle: ImmersionBundle) -> str:
    return bundle.entry or "bundle"


def _write_report(rep: VerificationReport, out_dir: str, name: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, f"{name}.csv"), "w") as fh:
        fh.write(rep.to_csv())
    with open(os.path.join(out_dir, f"{name}.json"), "w") as fh:
        fh.write(rep.to_json())


def cmd_generate(cfg: JobConfig) -> int:
    bundle = _load_or_generate(cfg)
    os.makedirs(cfg.output, exist_ok=True)
    path = os.path.join(cfg.output, f"{_stem(bundle)}.json")
    save_bundle(bundle, path)
    imm = bundle.imm
    msg = (f"wrote {path}: {imm.manifold.value}, grid {imm.grid.n_u}x{imm.grid.n_v}, "
           f"etaSign {imm.wf.eta_sign:+d}")
    with open(os.path.join(cfg.output, "generate.log"), "a") as fh:
        fh.write(msg + "\n")
    print(msg)
    return EXIT_PASS


def worker_count(jobs: int) -> int:
    cap = os.environ.get("MINLAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, int(cap))
        except ValueError:
            raise UsageError(f"MINLAB_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(n, jobs))


def cmd_associate(cfg: JobConfig) -> int:
    bundle = _load_or_generate(cfg)
    imm = bundle.imm
    thetas = cfg.thetas or [0.0, math.pi / 2]
    compare = None
    if cfg.compare:
        if cfg.compare not in catalog.REGISTRY:
            raise UsageError(f"unknown entry {cfg.compare!r}; registry: {', '.join(catalog.REGISTRY)}")
        ref = catalog.get_entry(cfg.compare, **cfg.compare_params)
        compare = ref.immersion(grid=imm.grid)

    tol_loop = cfg.tolerances.get("loop")

    def job(theta):
        return theta, make_associate(imm, AssociateParams(theta, cfg.steps, tol_loop))

    with ThreadPoolExecutor(worker_count(len(thetas))) as pool:
        members = dict(pool.map(job, thetas))

    os.makedirs(cfg.output, exist_ok=True)
    write_lock = threading.Lock()
    for k, th in enumerate(thetas):
        path = os.path.join(cfg.output, f"{_stem(bundle)}_theta{k}.json")
        with write_lock:
            save_bundle(ImmersionBundle(members[th].imm, bundle.entry, bundle.params, th), path)

    family_tols = {f"tol_{k}": v for k, v in cfg.tolerances.items() if k in ("metric", "hopf", "n3", "omega")}
    rep = verify_family(imm, thetas, cfg.steps, members=members, **family_tols)
    if compare is not None:
        tol = cfg.tolerances.get("congruence", 1e-3)
        for th in thetas:
            try:
                _, res = congruence_test(members[th].imm, compare)
            except MinlabError:
                res = float("nan")
            rep.add(f"theta={th:.6g} congruence", f"residual to {cfg.compare}", res, tol)
    _write_report(rep, cfg.output, "associate")
    print(rep.summary())
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_verify(cfg: JobConfig) -> int:
    if cfg.checks is not None and not cfg.checks:
        raise UsageError("empty check list")
    bundle = _load_or_generate(cfg)
    rep = residual_report(bundle.imm, cfg.checks, cfg.tolerances, title=f"verify {_stem(bundle)}")
    _write_report(rep, cfg.output, "verify")
    print(rep.to_json() if cfg.format == "json" else rep.to_csv() if cfg.format == "csv" else rep.summary())
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_export(cfg: JobConfig) -> int:
    bundle = _load_or_generate(cfg)
    fmt = cfg.format or "obj"
    target = cfg.output
    if os.path.isdir(target) or target.endswith(os.sep) or target == ".":
        target = os.path.join(target, f"{_stem(bundle)}.{fmt}")
    parent = os.path.dirname(target)
    if parent:
        os.makedirs(parent, exist_ok=True)
    if fmt == "json":
        save_bundle(bundle, target)
    else:
        mesh = mesh_from_immersion(bundle.imm)
        (write_obj if fmt == "obj" else write_ply)(mesh, target)
    print(f"wrote {target}")
    return EXIT_PASS


COMMANDS = {"generate": cmd_generate, "associate": cmd_associate, "verify": cmd_verify, "export": cmd_export}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"minlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LoopDefectExceeded, PeriodDefect, ChartExit) as exc:
        print(f"minlab: integrability failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRABILITY
    except (OSError, BundleFormatError) as exc:
        print(f"minlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MinlabError, ValueError, KeyError) as exc:
        print(f"minlab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

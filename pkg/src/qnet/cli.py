"""Command-line entry point: ``qnet preset|sweep|fmap|template``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from . import scenarios as sc


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _pair(text: str) -> tuple[int, int]:
    try:
        j, k = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("pair must look like 1,3") from None
    return j, k


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--threads", type=_positive_int, default=1, help="worker threads")
    common.add_argument("--dt", type=_positive_float, default=None, help="max step in 1/omega_0")
    common.add_argument("--horizon", type=_positive_float, default=None, help="horizon in ct units")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qnet", description="Driven quantum network transport simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("preset", parents=[common], help="run a figure preset")
    pp.add_argument("name", choices=sc.PRESETS)

    ps = sub.add_parser("sweep", parents=[common], help="run a sweep from a JSON config")
    ps.add_argument("config", type=Path)

    pf = sub.add_parser("fmap", parents=[common], help="write |F| suppression maps")
    pf.add_argument("--eta-max", type=_positive_float, default=2.5)
    pf.add_argument("--eta-points", type=_positive_int, default=101)
    pf.add_argument("--dphi-points", type=_positive_int, default=161)
    pf.add_argument("--pair", type=_pair, action="append", dest="pairs", help="site pair, e.g. 1,3 (repeatable)")

    pt = sub.add_parser("template", help="print a default JSON config")
    pt.add_argument("--preset", choices=[n for n in sc.PRESETS if n not in ("fig2", "fig5")], default=None)
    return p


def _linspace(lo: float, hi: float, n: int) -> tuple[float, ...]:
    return (lo,) if n == 1 else tuple(lo + (hi - lo) * i / (n - 1) for i in range(n))


def _run(args) -> list[Path]:
    if args.command == "template":
        cfg = next(iter(sc.preset_configs(args.preset).values())) if args.preset else sc.ScenarioConfig()
        sys.stdout.write(sc.dumps(cfg))
        return []
    progress = (lambda s: print(f"done {s}", file=sys.stderr)) if args.verbose else None
    out = args.out
    if args.command == "preset":
        return sc.run_preset(
            args.name, out or Path("out"), args.threads, args.dt, args.horizon, progress=progress
        )
    if args.command == "sweep":
        cfg = sc.load(args.config)
        if args.dt is not None:
            cfg = replace(cfg, integrator=replace(cfg.integrator, dt=args.dt))
        if args.horizon is not None:
            cfg = replace(cfg, horizon=args.horizon)
        path, results = sc.run_sweep(cfg, threads=args.threads, out_dir=out)
        failed = sum(r.status != "ok" for r in results)
        if failed:
            print(f"warning: {failed} of {len(results)} sweep points failed", file=sys.stderr)
        return [path]
    if args.command == "fmap":
        eta = _linspace(0.0, args.eta_max, args.eta_points)
        dphi = _linspace(-2 * math.pi, 2 * math.pi, args.dphi_points)
        pairs = args.pairs or [(1, 3), (2, 4)]
        return sc.suppression_maps(out or Path("out"), eta, dphi, pairs, prefix="fmap")
    raise AssertionError(args.command)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING)
    try:
        paths = _run(args)
    except (sc.ConfigError, ValueError, OSError, ArithmeticError, RuntimeError) as exc:
        print(f"qnet: error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0

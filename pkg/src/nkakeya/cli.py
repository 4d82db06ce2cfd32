"""Command line entry point: ``nkakeya <group> <action> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import BudgetExhausted, ConfigError, NKakeyaError, ThresholdExceeded

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_BUDGET = 3
EXIT_CONFIG = 4

log = logging.getLogger("nkakeya")

COMMANDS = {
    ("manifold", "check"): "normal ranks and reference-plane distance over the box",
    ("kakeya", "build"): "small-union construction with per-stage slices",
    ("extension", "eval"): "extension operator on a grid, written as field.csv",
    ("symmetry", "suite"): "seeded battery of dilation, translation and modulation checks",
    ("endpoint", "run"): "endpoint experiment: LB per delta, CSV, SVG and verdict",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TOML experiment file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--res", type=int)
    p.add_argument("--quad-n", dest="quad_n", type=int)
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nkakeya", description=__doc__)
    groups = parser.add_subparsers(dest="group", required=True)
    subs: dict[str, argparse._SubParsersAction] = {}
    for (group, action), helptext in COMMANDS.items():
        if group not in subs:
            g = groups.add_parser(group)
            subs[group] = g.add_subparsers(dest="action", required=True)
        _common(subs[group].add_parser(action, help=helptext))
    return parser


def _run(group: str, action: str, cfg) -> int:
    from . import experiments as ex

    if group == "manifold":
        info = ex.manifold_report(cfg)
        for k, v in info.items():
            print(f"{k} = {v}")
        return EXIT_OK if info["well_curved"] else EXIT_VERIFY
    if group == "kakeya":
        a, rows = ex.run_kakeya_demo(cfg)
        acc = [r for r in rows if r.accepted]
        final = acc[-1].neighborhood_measure if acc else float("nan")
        print(f"R = {a.R:g}, m = {len(a)}, final neighborhood measure = {final:.6g}")
        return EXIT_OK
    if group == "extension":
        f = ex.run_extension_eval(cfg)
        print(f"wrote {len(f.values)} samples to {Path(cfg.out) / 'field.csv'}")
        return EXIT_OK
    if group == "symmetry":
        rows = ex.run_symmetry_suite(cfg)
        print(f"{len(rows)} cases, max residual {max(r['residual'] for r in rows):.3e}")
        return EXIT_OK
    rows, verdict = ex.run_endpoint_experiment(cfg)
    for r in rows:
        print(f"delta {r.delta_target:g}: achieved {r.delta_achieved}, R {r.R}, LB {r.lb} {r.error}".rstrip())
    print(f"verdict: {verdict}")
    if any(r.error.startswith("budget") for r in rows):
        return EXIT_BUDGET
    return EXIT_VERIFY if any(r.error for r in rows) else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed, out=args.out, res=args.res, quad_n=args.quad_n)
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        return _run(args.group, args.action, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ThresholdExceeded as exc:
        print(f"verification failed: {exc}; case {exc.case}", file=sys.stderr)
        return EXIT_VERIFY
    except NKakeyaError as exc:
        print(f"verification failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())

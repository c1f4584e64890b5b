"""Command-line entry point.

    policygraph run --condition open8_td_uniform --out runs --jobs 4
    policygraph report --out runs/report runs/open8_td_uniform runs/open8_mc_uniform
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .diagnostics import DEFAULT_TAUS, threshold_sweep
from .env import State
from .metrics import read_records
from .pipeline import (
    CANONICAL_CONDITIONS,
    MANIFEST,
    MissingInputError,
    RunConfig,
    SWEEP_COLUMNS,
    aggregate_report,
    load_run_config,
    render_maps,
    run_condition,
    train_condition,
    write_diagnostics,
    write_table,
)
from .verify import CHECKS, run_checks

log = logging.getLogger("policygraph")


def parse_seeds(text: str) -> list[int]:
    """``"0-4,7"`` -> ``[0, 1, 2, 3, 4, 7]``."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


def _parse_goal(text: str) -> State:
    x, y = text.split(",")
    return State(int(x), int(y))


def _add_run_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="YAML run config")
    src.add_argument("--condition", choices=CANONICAL_CONDITIONS, help="bundled canonical condition")
    p.add_argument("--seeds", type=parse_seeds, help="override seeds, e.g. 0-19 or 0,3,5")
    p.add_argument("--episodes", type=int, help="override the number of training episodes")
    p.add_argument("--out", default="runs", help="output root (default: runs)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes over seeds")


def _load(args) -> RunConfig:
    cfg = load_run_config(args.config or args.condition, out_dir=args.out, jobs=args.jobs)
    if args.seeds is not None:
        cfg.seeds = args.seeds
    if args.episodes is not None:
        cfg.train.episodes = args.episodes
    return cfg


def _records_dir(args) -> Path:
    d = Path(args.dir)
    if not (d / "per_goal.csv").exists():
        raise MissingInputError(f"missing input file {d / 'per_goal.csv'}")
    return d


def _report_failures(out: Path) -> int:
    failed = json.loads((out / MANIFEST).read_text())["failed_seeds"]
    for seed, err in failed.items():
        print(f"seed {seed} failed: {err}", file=sys.stderr)
    return 1 if failed else 0


def cmd_run(args) -> int:
    out = run_condition(_load(args), train=True)
    print(out)
    return _report_failures(out)


def cmd_train(args) -> int:
    cfg = _load(args)
    failures = train_condition(cfg)
    for seed, err in failures.items():
        print(f"seed {seed} failed: {err}", file=sys.stderr)
    print(cfg.artifact_dir)
    return 1 if failures else 0


def cmd_census(args) -> int:
    out = run_condition(_load(args), train=False)
    print(out)
    return _report_failures(out)


def cmd_diagnose(args) -> int:
    d = _records_dir(args)
    out = Path(args.out_dir) if args.out_dir else d
    out.mkdir(parents=True, exist_ok=True)
    write_diagnostics(out, read_records(d / "per_goal.csv"))
    print(out)
    return 0


def cmd_sweep(args) -> int:
    d = _records_dir(args)
    taus = [float(t) for t in args.taus.split(",")] if args.taus else DEFAULT_TAUS
    rows = threshold_sweep(read_records(d / "per_goal.csv"), taus)
    path = Path(args.out_dir or d) / "sweep.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_table(path, SWEEP_COLUMNS, rows)
    for r in rows:
        print(f"{r.condition} tau={r.tau:.3f} P={r.precision:.3f} R={r.recall:.3f} F1={r.f1:.3f}")
    return 0


def cmd_map(args) -> int:
    cfg = _load(args)
    seeds = cfg.seeds if args.seeds is not None else (cfg.map_seeds or cfg.seeds[:1])
    goals = [_parse_goal(g) for g in args.goal] if args.goal else cfg.map_goals
    for seed in seeds:
        for p in render_maps(cfg, seed, goals):
            print(p)
    return 0


def cmd_report(args) -> int:
    print(aggregate_report(args.dirs, args.out))
    return 0


def cmd_verify(args) -> int:
    failed = 0
    for r in run_checks(args.check):
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: {r.detail} ({r.seconds:.2f}s)")
        failed += not r.passed
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="policygraph", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, help_ in (
        ("run", cmd_run, "train all seeds, run the census and write every artifact"),
        ("train", cmd_train, "train seeds and write checkpoints and logs only"),
        ("census", cmd_census, "evaluate existing checkpoints and write every artifact"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_run_args(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("map", help="render SVG policy maps from checkpoints")
    _add_run_args(p)
    p.add_argument("--goal", action="append", help="goal as x,y (repeatable; default from config)")
    p.set_defaults(func=cmd_map)

    for name, fn, help_ in (
        ("diagnose", cmd_diagnose, "write ranking, strata, taxonomy and crosstab tables"),
        ("sweep", cmd_sweep, "local-support threshold sweep"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("dir", help="condition artifact directory holding per_goal.csv")
        p.add_argument("--out", dest="out_dir", help="output directory (default: the input directory)")
        if name == "sweep":
            p.add_argument("--taus", help="comma-separated thresholds")
        p.set_defaults(func=fn)

    p = sub.add_parser("report", help="aggregate tables across condition directories")
    p.add_argument("dirs", nargs="+", help="condition artifact directories")
    p.add_argument("--out", default="report", help="output directory (default: report)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("verify", help="run the built-in property checks")
    p.add_argument("--check", action="append", choices=list(CHECKS), help="run only this check (repeatable)")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``dynpen {regress1d,vehicle,study,report}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import PENALTY_KINDS, STUDIES, load_config, parse_override
from .runs import execute
from .study import format_tables, report, run_study


def parse_seeds(text: str) -> list[int]:
    """``"7"`` -> [7]; ``"0..19"`` -> [0, ..., 19] (inclusive); ``"1,4,9"`` -> [1, 4, 9]."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        seeds = list(range(int(lo), int(hi) + 1))
    else:
        seeds = [int(s) for s in text.split(",") if s]
    if not seeds:
        raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
    return seeds


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat dotted-key TOML config file")
    p.add_argument("--episodes", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key, e.g. agent.gamma=0.95 (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynpen", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    for study in STUDIES:
        p = sub.add_parser(study, help=f"one seeded {study} run")
        _common(p)
        p.add_argument("--penalty", choices=PENALTY_KINDS)
        p.add_argument("--seed", type=int)

    p = sub.add_parser("study", help="sweep penalty kinds x seeds")
    _common(p)
    p.add_argument("--study", choices=STUDIES, default="vehicle")
    p.add_argument("--penalty", choices=PENALTY_KINDS, action="append",
                   help="penalty kind to include (repeatable; default: all)")
    p.add_argument("--seeds", type=parse_seeds, default=parse_seeds("0..19"))
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("report", help="re-aggregate existing run directories")
    p.add_argument("root")
    return parser


def _config(args, study: str):
    overrides = dict(parse_override(item) for item in args.set)
    overrides.setdefault("study", study)
    for key in ("seed", "episodes", "out"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if isinstance(getattr(args, "penalty", None), str):
        overrides["penalty.kind"] = args.penalty
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")

    if args.command in STUDIES:
        config = _config(args, args.command)
        record = execute(config, Path(config.out) if config.out else None)
        line = {"kind": record.kind, "seed": record.seed, "status": record.status,
                "first_success": record.first_success, "best_cost": record.best_cost, **record.metrics}
        print(json.dumps(line))
        return 0 if record.ok else 1

    if args.command == "study":
        config = _config(args, args.study)
        kinds = args.penalty or list(PENALTY_KINDS)
        summary = run_study(config, kinds, args.seeds, args.jobs, config.out)
    else:
        summary = report(args.root)
    print(format_tables(summary))
    return 0 if summary["failed"] == 0 else 1


if __name__ == "__main__":
    sys.exit(main())

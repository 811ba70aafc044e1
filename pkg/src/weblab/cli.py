"""Command-line driver: ``weblab <command> --config <path> [--out <path>] [--seed N]``."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .errors import ConfigError, WebLabError
from .report import COMMANDS, ExperimentConfig, export_arcs, load_config, run, to_json


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weblab", description="Web geometry experiment suites.")
    p.add_argument("command", choices=COMMANDS + ("all",))
    p.add_argument("--config", help="YAML experiment config (defaults if omitted)")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--seed", type=int, help="override collocation.seed")
    p.add_argument("--arcs", help="write quartic arcs as CSV (quartic or all)")
    p.add_argument("--timing", action="store_true",
                   help="include wall-clock timings (makes the report run-dependent)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        report = run(args.command, cfg, timing=args.timing)
    except ConfigError as exc:
        print(f"weblab: configuration error: {exc}", file=sys.stderr)
        return 2
    text = to_json(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.arcs:
        try:
            export_arcs(report, args.arcs)
        except WebLabError as exc:
            print(f"weblab: {exc}", file=sys.stderr)
            return 2
    if report.errors:
        for name, msg in sorted(report.errors.items()):
            print(f"weblab: {name} failed: {msg}", file=sys.stderr)
        return 2
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())

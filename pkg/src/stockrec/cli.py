"""Command-line entry point: synth / run / report."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_run_config, load_synth_config
from .errors import StockrecError, ValidationError


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stockrec",
        description="Walk-forward stock recommendation and backtesting engine",
    )
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    p_synth.add_argument("--config", required=True)
    p_synth.add_argument("--out", required=True)

    p_run = sub.add_parser("run", help="run the full pipeline")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)

    p_report = sub.add_parser("report", help="summarize a completed run")
    p_report.add_argument("--run", required=True)
    p_report.add_argument("--benchmark", default=None, help="benchmark csv (date,value)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            from .synth import generate

            cfg = load_synth_config(args.config, seed_override=args.seed)
            generate(cfg, args.out)
        elif args.command == "run":
            from .pipeline import run

            cfg = load_run_config(args.config, seed_override=args.seed)
            run(cfg, args.out)
        else:
            from .report import generate_report

            generate_report(args.run, benchmark_csv=args.benchmark)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except StockrecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

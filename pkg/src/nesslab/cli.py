"""Command-line entry point: ``nesslab {ness,evolve,dsmc,entropy,validate}``."""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, parse_config, parse_override
from .errors import ConfigError
from .runner import run_experiment

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nesslab", description="Reservoir-driven Boltzmann NESS laboratory.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", metavar="PATH", help="JSON run configuration")
    parser.add_argument("--seed", type=int, metavar="U64", help="master random seed")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (dotted path; value parsed as JSON when possible)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = dict(parse_override(s) for s in args.overrides)
        overrides["experiment"] = args.experiment
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["output_dir"] = args.out
        cfg = parse_config(args.config, overrides)
        return run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: fiolab <experiment> --config <file> [options]."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigInvalid, FiolabError
from .experiments import EXPERIMENTS, load_config, run, write_outputs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

log = logging.getLogger("fiolab")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fiolab", description="Run a matrix-element experiment.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="JSON config file")
    ap.add_argument("--out", help="output directory (default: config 'out' or current directory)")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--plot", action="store_true", default=None, help="also write an SVG summary plot")
    ap.add_argument("--jobs", type=int, help="worker processes for the sweep")
    ap.add_argument("--seed", type=int)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    overrides = {"out": args.out, "format": args.format, "plot": args.plot, "jobs": args.jobs, "seed": args.seed}
    try:
        cfg = load_config(args.config, args.experiment, overrides)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        result = run(cfg)
    except FiolabError as exc:
        print(f"FAILED ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ArithmeticError as exc:
        print(f"FAILED: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    try:
        written = write_outputs(result, cfg, cfg.out or ".")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

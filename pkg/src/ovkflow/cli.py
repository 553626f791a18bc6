"""ovk: benchmark and model CLI.

    ovk exp1|exp2|exp3|fit|forecast --config <path> [--out <dir>] [--seed <int>] [--parallel]

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .bench import EXPERIMENTS, load_config, run_cli_experiment
from .errors import InputError, NumericalError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ovk", description="operator-valued kernel benchmark experiments"
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="experiment config file (INI)")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--parallel", action="store_true", help="run sweep entries in parallel")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits on --help (0) and bad usage
        return 0 if exc.code in (0, None) else 1
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG)
    try:
        cfg = load_config(
            args.config,
            experiment=args.command,
            out=args.out,
            seed=args.seed,
            parallel=args.parallel,
        )
        written = run_cli_experiment(cfg)
    except InputError as exc:
        print(f"ovk: input error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"ovk: numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ovk: input error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: one subcommand per experiment.

Exit code 0 only when no result row carries an error annotation.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import EXPERIMENTS, load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvworkbench",
        description="Reproduce the workbench's figure data series and tables.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for experiment in EXPERIMENTS:
        p = sub.add_parser(experiment, help=f"run the {experiment} experiment")
        p.add_argument("--config", default=None, help="path to a key = value config file")
        p.add_argument("--seed", type=int, default=None, help="RNG seed override")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument(
            "--override", action="append", default=[], metavar="KEY=VALUE",
            help="override any config key (repeatable)",
        )
        if experiment.startswith("table_"):
            p.add_argument("--mode", choices=("verify", "reproduce"), default=None,
                           help="verify printed rows or reproduce them by optimization")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    for item in args.override:
        if "=" not in item:
            print(f"error: --override expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return 2
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.out is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "mode", None):
        overrides["mode"] = args.mode

    try:
        config = load_config(args.config, args.experiment, overrides)
        result = run_experiment(config)
        path = result.write(config.out_dir)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    errors = result.error_count()
    print(f"{config.experiment}: {len(result.rows)} rows -> {path}"
          + (f" ({errors} rows with errors)" if errors else ""))
    return 0 if errors == 0 else 1


if __name__ == "__main__":
    sys.exit(main())

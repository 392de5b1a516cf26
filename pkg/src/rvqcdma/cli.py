"""Command-line entry point: ``rvq-lab {analyze,simulate,compare,required-feedback}``."""

from __future__ import annotations

import argparse
import sys
import traceback

from .errors import ConfigError
from .runner import FEEDBACK_COLUMNS, Mode, parse_config, run_required_feedback, run_sweep, with_mode

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_INTERNAL = 0, 2, 3, 4


def build_parser():
    parser = argparse.ArgumentParser(prog="rvq-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("analyze", "large-system SINR on the configured grid"),
        ("simulate", "Monte Carlo SINR on the configured grid"),
        ("compare", "both, with finite-size flags"),
        ("required-feedback", "smallest bbar within target_db of single-user SINR"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--seed", type=int, help="master seed (overrides [simulation] seed)")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
        p.add_argument("--out", help="CSV output path ('-' for stdout)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key; repeatable")
    return parser


def _load(args):
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from None
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.trials is not None:
        overrides.append(f"trials={args.trials}")
    if args.out is not None:
        overrides.append(f"path={args.out}")
    return parse_config(text, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _load(args)
        if args.command == "required-feedback":
            result = run_required_feedback(spec)
            text = result.to_csv(FEEDBACK_COLUMNS)
        else:
            result = run_sweep(with_mode(spec, Mode(args.command)))
            text = result.to_csv()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL

    if spec.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(spec.out, "w", newline="") as fh:
            fh.write(text)
    if result.failures:
        print(f"{result.failures} of {len(result.rows)} rows failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

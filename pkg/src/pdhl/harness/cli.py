"""Command-line front end: one subcommand per experiment kind.

::

    pdhl scaling --config sweep.cfg --out runs/a4 --seed 7 --threads 4

The subcommand must agree with the config's ``experiment`` key (or the
key may be omitted).  ``--out``, ``--seed``, and ``--threads`` override
their config keys; the PDHL_THREADS environment variable supplies the
default for ``--threads``.  Exit codes: 0 when every row succeeded, 2
when some rows carry an error status, 1 for configuration or output
problems (including bad command lines).
"""

import argparse
import os
import sys

from ..errors import ConfigInvalid, OutputUnwritable
from .config import KINDS, load_config
from .experiments import run_experiment

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """Argparse that reports usage problems as ConfigInvalid."""

    def error(self, message):
        raise ConfigInvalid(message)


def _build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, metavar="FILE",
                        help="experiment config file")
    common.add_argument("--out", metavar="DIR",
                        help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, metavar="N",
                        help="base RNG seed (overrides the config)")
    common.add_argument("--threads", type=int, metavar="K",
                        help="worker pool size (default: PDHL_THREADS, "
                             "then the config, then 1)")
    parser = _Parser(prog="pdhl",
                     description="perforated-domain experiment runner")
    sub = parser.add_subparsers(dest="command", metavar="kind")
    for kind in KINDS:
        sub.add_parser(kind, parents=[common],
                       help=f"run a {kind} experiment")
    return parser


def resolve_threads(flag, env, config_default=None):
    """Precedence for the pool size: flag, then PDHL_THREADS, then config."""
    if flag is not None:
        return flag
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigInvalid(
                f"PDHL_THREADS must be an integer, got {env!r}"
            ) from None
    return config_default


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise ConfigInvalid("missing experiment kind "
                                f"(expected one of: {', '.join(KINDS)})")
        threads = resolve_threads(args.threads, os.environ.get("PDHL_THREADS"))
        config = load_config(args.config, expected_kind=args.command,
                             out=args.out, seed=args.seed, threads=threads)
        report = run_experiment(config)
    except (ConfigInvalid, OutputUnwritable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    ok = report.manifest["ok_rows"]
    total = report.manifest["rows"]
    print(f"wrote {report.csv_path} ({ok}/{total} rows ok)")
    for label in sorted(report.fits):
        fit = report.fits[label]
        if fit is not None:
            print(f"fit {label}: slope = {fit.slope:.3f} "
                  f"(r^2 = {fit.r_squared:.3f})")
    failed = report.failed_rows
    if failed:
        print(f"{len(failed)} row(s) failed", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Command line entry point: ``effh-sim run | validate | kappa``."""
import argparse
import logging
import os
import sys

from . import __version__
from .exceptions import ConfigError, EffhError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SEED_ENV = "EFFH_SIM_SEED"  # reserved; no stochastic components yet


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="effh-sim",
        description="Effective-Hamiltonian, reaction-coordinate and weak-coupling "
                    "simulations of spins coupled to several bosonic baths.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("scenario", help="path to the scenario file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    sub.add_parser("validate", help="run the built-in invariant checks")

    kap = sub.add_parser("kappa", help="evaluate kappa_z and kappa_x for one point")
    kap.add_argument("--eps-z", type=float, required=True)
    kap.add_argument("--eps-x", type=float, required=True)
    return parser


def _cmd_run(args):
    from .scenario import parse_scenario
    from .tasks import run

    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    sc = parse_scenario(args.scenario)
    for path in run(sc, args.out, jobs=args.jobs):
        print(path)
    return EXIT_OK


def _cmd_validate(_args):
    from .validation import report_validation

    return EXIT_OK if report_validation() else EXIT_VALIDATION


def _cmd_kappa(args):
    from .effh.dressing import kappa_pair

    if args.eps_z < 0 or args.eps_x < 0:
        raise ConfigError("coupling ratios must be nonnegative")
    kz, kx = kappa_pair(args.eps_z, args.eps_x)
    print(f"kappa_z = {kz:.12g}")
    print(f"kappa_x = {kx:.12g}")
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if os.environ.get(SEED_ENV):
        logging.getLogger(__name__).debug("%s is set but unused", SEED_ENV)
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "kappa": _cmd_kappa}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"effh-sim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EffhError, ArithmeticError) as exc:
        print(f"effh-sim: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

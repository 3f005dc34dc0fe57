"""Command-line entry point: ``hofv study`` and ``hofv verify``."""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, NonConvergence, SingularSystem
from .study import SolverFailure, StudyConfig, format_markdown, parse_int_list, run_study

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="hofv", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("study", help="run a convergence study")
    s.add_argument("--config", help="JSON config file; flags override its keys")
    s.add_argument("--k", help="degrees, e.g. 3,4")
    s.add_argument("--levels", help="levels s (N = 2^s), e.g. 1..6 or 1,2,3")
    s.add_argument("--problem")
    s.add_argument("--solver", choices=("direct", "iterative"))
    s.add_argument("--tol", type=float)
    s.add_argument("--load-quad", type=int, dest="load_quad")
    s.add_argument("--out")
    s.add_argument("--format", help="comma list of csv, md, plot")
    s.add_argument("--grad-norm", dest="grad_norm", choices=("l1", "euclid", "max"))

    sub.add_parser("verify", help="run the structural property suite")
    return p


def _config(args):
    overrides = {
        "k": parse_int_list(args.k) if args.k else None,
        "levels": parse_int_list(args.levels) if args.levels else None,
        "problem": args.problem,
        "solver": args.solver,
        "tol": args.tol,
        "load_quad": args.load_quad,
        "out": args.out,
        "format": args.format.split(",") if args.format else None,
        "grad_norm": args.grad_norm,
    }
    if args.config:
        return StudyConfig.from_file(args.config, **overrides)
    return StudyConfig(**{k: v for k, v in overrides.items() if v is not None})


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        from .verify import run_all
        return EXIT_OK if run_all() else EXIT_NUMERICAL

    try:
        config = _config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        reports = run_study(config)
    except (SolverFailure, SingularSystem, NonConvergence) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for k, rep in reports.items():
        print(format_markdown(rep, config.problem))
    print(f"results written to {config.out}/")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

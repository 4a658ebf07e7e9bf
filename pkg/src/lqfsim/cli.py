"""Command-line interface.

    lqf run <spec.json> [--out DIR] [--workers N] [--seed S]
    lqf fluid --lambda L --K K --T T [--dt DT]
    lqf oracle --n N --d D --lambda L --t T [--max-tasks M]

Exit codes: 0 success, 2 configuration error, 3 numerical-domain error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from lqfsim import __version__
from lqfsim.errors import ConfigurationError, NumericalDomainError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lqf",
        description="Randomized longest-queue-first simulator and "
                    "approximation toolkit")
    parser.add_argument("--version", action="version",
                        version=f"lqfsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment spec")
    run_p.add_argument("spec", help="path to a JSON experiment spec")
    run_p.add_argument("--out", default=None,
                       help="output directory (default: spec's output_dir)")
    run_p.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes (default 1)")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the spec's master_seed")

    fluid_p = sub.add_parser("fluid", help="print the fluid solution as CSV")
    fluid_p.add_argument("--lambda", dest="lam", type=float, required=True)
    fluid_p.add_argument("--K", type=int, required=True)
    fluid_p.add_argument("--T", type=float, required=True)
    fluid_p.add_argument("--dt", type=float, default=1e-3)

    oracle_p = sub.add_parser(
        "oracle", help="print the exact transient distribution as CSV")
    oracle_p.add_argument("--n", type=int, required=True)
    oracle_p.add_argument("--d", type=int, required=True)
    oracle_p.add_argument("--lambda", dest="lam", type=float, required=True)
    oracle_p.add_argument("--t", type=float, required=True)
    oracle_p.add_argument("--max-tasks", type=int, default=20)

    return parser


def _cmd_run(args) -> int:
    from lqfsim import experiments

    spec = experiments.load_spec(args.spec)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigurationError("--seed must be a 64-bit integer")
        spec = dataclasses.replace(spec, master_seed=args.seed)
    written = experiments.run(spec, out_dir=args.out, workers=args.workers)
    for path in written:
        print(path)
    return 0


def _cmd_fluid(args) -> int:
    from lqfsim.fluid import FluidConfig, solve_fluid

    config = FluidConfig(lam=args.lam, K=args.K, v=(0.0,) * args.K,
                         T=args.T, dt=args.dt)
    resolved = json.dumps({"lambda": args.lam, "K": args.K, "T": args.T,
                           "dt": args.dt}, sort_keys=True,
                          separators=(",", ":"))
    solve_fluid(config).to_csv(
        sys.stdout, comment=f"lqfsim {__version__} spec={resolved}")
    return 0


def _cmd_oracle(args) -> int:
    from lqfsim.engine import SystemConfig
    from lqfsim.oracle import uniformization_oracle

    config = SystemConfig(n=args.n, d=args.d, lam=args.lam,
                          horizon=args.t, seed=0)
    result = uniformization_oracle(config, args.t,
                                   max_total_tasks=args.max_tasks)
    resolved = json.dumps(
        {"n": args.n, "d": args.d, "lambda": args.lam, "t": args.t,
         "max_tasks": args.max_tasks}, sort_keys=True, separators=(",", ":"))
    result.to_csv(sys.stdout,
                  comment=f"lqfsim {__version__} spec={resolved} "
                          f"truncation_error_bound="
                          f"{result.truncation_error_bound:.3e}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "fluid": _cmd_fluid, "oracle": _cmd_oracle}
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalDomainError as exc:
        print(f"numerical-domain error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Subcommands::

    fdsic budget   --scenario table1-baseline --out out/
    fdsic sweep-tx --realizations 100 --seed 1 --out out/
    fdsic sweep-mn --realizations 100 --out out/
    fdsic bias     --realizations 500 --out out/

Each writes fixed-header CSV (or JSON-lines) results, a standalone plot
script next to them, and a manifest capturing the resolved configuration.
"""

from __future__ import annotations

import argparse

from .harness import (SCENARIOS, load_config, run_bias, run_budget,
                      run_sweep_mn, run_sweep_tx)

_COMMANDS = {
    "budget": run_budget,
    "sweep-tx": run_sweep_tx,
    "sweep-mn": run_sweep_mn,
    "bias": run_bias,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdsic",
        description="Full-duplex self-interference cancellation experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", default=None,
                       help="YAML config file overriding the scenario preset")
        p.add_argument("--scenario", default=None, choices=sorted(SCENARIOS))
        p.add_argument("--seed", type=int, default=None, help="base seed")
        p.add_argument("--realizations", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--canceller", default=None,
                       choices=["linear", "widely-linear", "both"])
        p.add_argument("--jobs", type=int, default=None,
                       help="parallel workers over sweep points")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config,
                      scenario=args.scenario,
                      base_seed=args.seed,
                      n_realizations=args.realizations,
                      out_dir=args.out,
                      canceller=args.canceller,
                      jobs=args.jobs)
    path = _COMMANDS[args.command](cfg)
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

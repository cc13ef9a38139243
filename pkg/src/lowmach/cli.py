"""Command-line surface: run-compressible, run-incompressible, sweep,
check-identities.

Failures exit nonzero and print a machine-readable JSON error object to
stderr.  Worker count for sweeps comes from the LOWMACH_WORKERS environment
variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import harness


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lowmach",
        description=(
            "Numerical laboratory for the low-Mach-number limit of "
            "non-isentropic ideal MHD on a periodic box"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="YAML config file (defaults apply if omitted)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="global seed (overrides config)")
        p.add_argument(
            "--eps-override",
            help="comma-separated Mach numbers replacing eps_list, e.g. 0.2,0.1",
        )

    for name, description in (
        ("run-compressible", "integrate the scaled system for a single eps"),
        ("run-incompressible", "integrate the limit system (sweep reference)"),
        ("sweep", "run all eps plus the reference and fit convergence orders"),
    ):
        add_common(sub.add_parser(name, help=description))

    check = sub.add_parser(
        "check-identities", help="residuals of the discrete structural identities"
    )
    check.add_argument("--config", help="YAML config file (grid/seed source)")
    check.add_argument("--seed", type=int, help="seed for the random fields")
    check.add_argument("--fields", type=int, default=100, help="number of field draws")
    check.add_argument(
        "--threshold", type=float, default=1e-10, help="pass/fail residual threshold"
    )
    return parser


def _resolve_config(args: argparse.Namespace) -> harness.RunConfig:
    config = (
        harness.load_config(args.config) if args.config else harness.default_config()
    )
    updates = {}
    if getattr(args, "out", None):
        updates["out_dir"] = args.out
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
        updates["recipe"] = dataclasses.replace(config.recipe, seed=args.seed)
    if getattr(args, "eps_override", None):
        updates["eps_list"] = tuple(
            float(tok) for tok in args.eps_override.split(",") if tok.strip()
        )
    return dataclasses.replace(config, **updates) if updates else config


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "check-identities":
            config = (
                harness.load_config(args.config)
                if args.config
                else harness.default_config()
            )
            seed = args.seed if args.seed is not None else config.seed
            report = harness.cmd_check_identities(
                grid=config.grid,
                seed=seed,
                n_fields=args.fields,
                threshold=args.threshold,
            )
            print(json.dumps(report, indent=2))
            return 0 if report["all_passed"] else 1

        config = _resolve_config(args)
        if args.command == "run-compressible":
            out = harness.cmd_run_compressible(config)
            print(f"wrote {out}")
        elif args.command == "run-incompressible":
            out = harness.cmd_run_incompressible(config)
            print(f"wrote {out}")
        elif args.command == "sweep":
            result = harness.cmd_sweep(config)
            print(json.dumps(harness.sweep_result_to_dict(result), indent=2))
            if not result.completed:
                return 1
        return 0
    except Exception as err:  # noqa: BLE001 - CLI boundary
        json.dump(
            {"error": type(err).__name__, "message": str(err)},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

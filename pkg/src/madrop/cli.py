"""Command-line experiment driver.

Commands:
  optimize  anneal one configuration, print a JSON result record
  sweep     optimize a parameter grid, print CSV rows
  validate  optimize, then Monte Carlo the thresholds and compare

Flag values override the config file, which overrides built-in defaults.
Exit codes: 0 success, 2 configuration error, 3 infeasible problem,
4 validation tolerance failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from .anneal import InfeasibleError
from .config import ConfigError, load_config
from .runner import SWEEP_COLUMNS, run_optimize, run_sweep, run_validate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_VALIDATION = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="madrop",
        description="Energy-minimal packet scheduling: optimize, sweep, validate.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (("optimize", "optimize a single configuration"),
                        ("sweep", "optimize a parameter grid, emit CSV"),
                        ("validate", "cross-check optimizer against Monte Carlo")):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument("--out", metavar="PATH", help="also write output here")
        p.add_argument("--seed", type=int)
        p.add_argument("--scheme", choices=["best", "ooa", "sse"])
        p.add_argument("--B", type=int)
        p.add_argument("--N", type=int)
        p.add_argument("--theta-tar", type=float, dest="theta_tar")
        p.add_argument("--eps", type=float)
        p.add_argument("--workers", type=int,
                       help="worker processes (default: MADROP_WORKERS or 1)")
        p.add_argument("--theta-lim", action="store_true", default=None,
                       dest="theta_lim",
                       help="also estimate the limiting drop rate")
    return parser


def _resolve_workers(flag_value: int | None) -> int | None:
    if flag_value is not None:
        return flag_value
    env = os.environ.get("MADROP_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"MADROP_WORKERS is not an integer: {env!r}") from exc
    return None


def _emit(text: str, out_path: str | None) -> None:
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = cfg.override(seed=args.seed, scheme=args.scheme, B=args.B,
                           N=args.N, theta_tar=args.theta_tar, eps=args.eps,
                           theta_lim=args.theta_lim,
                           workers=_resolve_workers(args.workers))
        if args.command == "optimize":
            record = run_optimize(cfg)
            _emit(json.dumps(record, indent=2, sort_keys=True) + "\n", args.out)
            return EXIT_OK
        if args.command == "sweep":
            rows = run_sweep(cfg)
            _emit(_rows_to_csv(rows), args.out)
            return EXIT_OK
        record = run_validate(cfg)
        _emit(json.dumps(record, indent=2, sort_keys=True) + "\n", args.out)
        return EXIT_OK if record["passed"] else EXIT_VALIDATION
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())

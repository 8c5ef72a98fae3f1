"""Command-line entry point: madrop-plot <kind> --in results.csv --out fig.png"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, render
from .io import SchemaError, read_sweep


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="madrop-plot",
        description="Render madrop sweep CSVs into publication-style figures.")
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="input", required=True, metavar="CSV")
    parser.add_argument("--out", dest="output", required=True, metavar="FIG")
    args = parser.parse_args(argv)
    try:
        rows = read_sweep(args.input)
        render(args.kind, rows, args.output)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

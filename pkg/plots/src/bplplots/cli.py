"""Command line: ``plots render --kind KIND --in CSV --out PNG``."""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .render import PLOT_KINDS, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plots", description=__doc__)
    parser.add_argument("--version", action="version", version=f"plots {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one CSV artifact into a figure")
    p.add_argument("--kind", required=True, choices=PLOT_KINDS)
    p.add_argument("--in", dest="csv_path", required=True, help="input CSV path")
    p.add_argument("--out", dest="out_path", required=True, help="output image path")
    p.add_argument("--title", default=None)
    p.add_argument("--xlabel", default=None)
    p.add_argument("--ylabel", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        csv_path=args.csv_path,
        kind=args.kind,
        out_path=args.out_path,
        title=args.title,
        xlabel=args.xlabel,
        ylabel=args.ylabel,
    )
    try:
        out = render(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 2
    print(f"rendered {args.kind} figure -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

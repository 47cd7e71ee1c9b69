"""Command-line entry: gnsch-plot <kind> <inputs...> -o out.png"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, PlotInputError, plot


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gnsch-plot",
        description="Render figures from gnsch CSV outputs.")
    parser.add_argument("kind", choices=KINDS, help="figure kind")
    parser.add_argument("inputs", nargs="+", help="input CSV file(s)")
    parser.add_argument("-o", "--output", required=True, help="output image path")
    parser.add_argument("--title", default="", help="figure title")
    parser.add_argument("--time-label", default="", help="time annotation, e.g. 't = 0.3'")
    return parser


def cli_main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    spec = FigureSpec(kind=args.kind, inputs=args.inputs, output=args.output,
                      title=args.title, time_label=args.time_label)
    try:
        path = plot(spec)
    except PlotInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


def main():
    raise SystemExit(cli_main())

"""Command-line entry point: figplot <in.csv> <out_image> [options]."""

from __future__ import annotations

import argparse
import sys

from . import FigplotError, PlotConfig, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figplot",
        description="Render the strategy-comparison figure from a sweep CSV.")
    parser.add_argument("input_csv", help="sweep CSV produced by `qiphase sweep`")
    parser.add_argument("output_image", help="image path (.png, .pdf, .svg, ...)")
    parser.add_argument("--linear-y", action="store_true",
                        help="use a linear instead of logarithmic y axis")
    parser.add_argument("--group-col", default="T",
                        help="column whose values define the series (default T)")
    args = parser.parse_args(argv)

    config = PlotConfig(input_csv=args.input_csv, output_image=args.output_image,
                        y_log=not args.linear_y, group_col=args.group_col)
    try:
        render(config)
    except (FigplotError, OSError) as exc:
        print(f"figplot: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

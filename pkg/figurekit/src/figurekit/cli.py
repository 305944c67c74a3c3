"""figurekit <spec.json> [...]: render scenario CSVs into SVG figures."""

from __future__ import annotations

import argparse
import sys

from .render import RenderError, render
from .spec import FigureSpecError, load_spec


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figurekit",
                                     description="Render forkbound scenario CSVs as figures")
    parser.add_argument("specs", nargs="+", help="figure spec JSON files")
    parser.add_argument("--output", default=None,
                        help="override the output path (single spec only)")
    args = parser.parse_args(argv)
    if args.output and len(args.specs) != 1:
        print("--output needs exactly one spec", file=sys.stderr)
        return 2
    status = 0
    for path in args.specs:
        try:
            spec = load_spec(path)
            if args.output:
                spec = type(spec)(**{**spec.__dict__, "output": args.output})
            out = render(spec)
            print(f"{path} -> {out}")
        except (FigureSpecError, RenderError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())

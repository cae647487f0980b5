"""Figure rendering CLI: one FigureSpec per invocation, via flags or a file."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .figures import FIGURE_KINDS, EmptyInputError, FigureSpec, MissingColumnError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="skewevt-plot",
        description="Render figures from skewevt experiment CSV outputs")
    parser.add_argument("--spec", help="JSON file holding a figure spec "
                                       "(inputs, kind, output, labels)")
    parser.add_argument("--kind", choices=FIGURE_KINDS)
    parser.add_argument("--csv", action="append", default=[],
                        help="input CSV (repeatable)")
    parser.add_argument("--out", help="output image path (.png or .svg)")
    parser.add_argument("--title")
    parser.add_argument("--xlabel")
    parser.add_argument("--ylabel")
    parser.add_argument("--summary", help="experiment JSON summary; supplies "
                                          "fitted slopes for decay plots")
    parser.add_argument("--version", action="version", version=__version__)
    args = parser.parse_args(argv)

    try:
        if args.spec:
            blob = json.loads(Path(args.spec).read_text())
            spec = FigureSpec(
                inputs=tuple(blob["inputs"]),
                kind=blob["kind"],
                output=blob["output"],
                title=blob.get("title"),
                xlabel=blob.get("xlabel"),
                ylabel=blob.get("ylabel"),
                summary=blob.get("summary"),
            )
        else:
            if not (args.kind and args.csv and args.out):
                parser.error("need --spec or all of --kind/--csv/--out")
            spec = FigureSpec(inputs=tuple(args.csv), kind=args.kind,
                              output=args.out, title=args.title,
                              xlabel=args.xlabel, ylabel=args.ylabel,
                              summary=args.summary)
        result = render(spec)
    except (MissingColumnError, EmptyInputError, ValueError, OSError,
            KeyError, json.JSONDecodeError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    print(f"wrote {result.path}")
    for key, val in result.annotations.items():
        print(f"  {key}: {val}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

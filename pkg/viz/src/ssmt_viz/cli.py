"""Command-line interface: ssmt-viz render --spec FILE --out IMG

The spec file names a figure kind and the exported files it reads:

    {"kind": "convergence", "inputs": {"report": "out/report.json"}}

Checksums of the plotted arrays are written next to the image as
IMG.checksums.json for provenance assertions.
"""
from __future__ import annotations

import argparse
import json
import sys

from .render import render
from .spec import FigureSpec, SchemaError


def build_parser():
    p = argparse.ArgumentParser(prog="ssmt-viz", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    pr = sub.add_parser("render", help="render one figure from exports")
    pr.add_argument("--spec", required=True, help="figure spec JSON")
    pr.add_argument("--out", required=True, help="output image path")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec.load(args.spec)
        result = render(spec, args.out)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    sidecar = args.out + ".checksums.json"
    with open(sidecar, "w") as fp:
        json.dump(result["checksums"], fp, indent=2, sort_keys=True)
    print(f"wrote {result['path']} and {sidecar}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

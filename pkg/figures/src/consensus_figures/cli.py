"""Command-line renderer: figures <kind> --in <paths> --out <png> [--slope S]."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .jobs import KINDS, FigureJob, SchemaMismatch, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures", description="Deterministic plots from consensus-clock outputs")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="summary JSONs (curves) or a tail CSV")
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.add_argument("--slope", type=float, default=None,
                        help="analytic decay rate for the tail overlay (negative)")
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        job = FigureJob(kind=ns.kind, inputs=tuple(ns.inputs),
                        out=Path(ns.out), slope=ns.slope)
        render(job)
    except (SchemaMismatch, ValueError) as exc:
        print(f"figures: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

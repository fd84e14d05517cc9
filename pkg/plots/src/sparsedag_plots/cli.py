"""Figure toolkit CLI.

    plots --kind throughput --in results.csv --out fig1a.svg
    plots --kind latency --in results.csv --out fig1b.svg
    plots --kind inclusion --in incl_35.csv,incl_70.csv --labels D=35,D=70 \
          --out fig2.svg
    plots --kind egress-table --in egress_model.csv --out table1.txt
"""

from __future__ import annotations

import argparse

from .render import KINDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render harness CSVs into figures with data sidecars.")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="inputs", required=True,
                        help="comma-separated input CSV paths")
    parser.add_argument("--out", required=True, help="output file (.svg/.png "
                                                     "for figures, .txt for "
                                                     "the egress table)")
    parser.add_argument("--labels", default=None,
                        help="comma-separated series labels (inclusion kind)")
    parser.add_argument("--xlabel", default="")
    parser.add_argument("--ylabel", default="")
    parser.add_argument("--title", default="")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        inputs=[p.strip() for p in args.inputs.split(",") if p.strip()],
        output=args.out,
        labels=[s.strip() for s in args.labels.split(",")] if args.labels else [],
        xlabel=args.xlabel, ylabel=args.ylabel, title=args.title)
    out = render(spec)
    print(f"wrote {out} (+ {out}.txt)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

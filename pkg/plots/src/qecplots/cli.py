"""Command line entry point: ``plots <kind> --in <csv> --out <png>``."""

import argparse
import sys

from qecplots.render import KINDS, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="plots",
        description="Render sweep CSV/JSON outputs into figures",
    )
    ap.add_argument("kind", choices=KINDS, help="figure kind")
    ap.add_argument("--in", dest="infile", required=True, help="input CSV/JSON path")
    ap.add_argument("--out", dest="out", required=True, help="output image path")
    ap.add_argument("--basis", default="combined", choices=("Z", "X", "combined"),
                    help="which failure-rate column to plot (curve kinds)")
    ap.add_argument("--defect-rate", type=float, default=1e-3,
                    help="per-transmon defect rate for the yield gradient")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        kind=args.kind,
        infile=args.infile,
        out=args.out,
        basis=args.basis,
        defect_rate=args.defect_rate,
    )
    try:
        path = render(spec)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    except SchemaError as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

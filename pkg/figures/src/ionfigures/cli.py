"""Command-line entry point: render one figure from a simulator output directory."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .io import SchemaError
from .plots import plot_noise_scan, plot_probe_scan, plot_tracking


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render static figures from ionmon output directories",
    )
    parser.add_argument(
        "figure", choices=("tracking", "probe-scan", "noise-scan"),
        help="which figure to render",
    )
    parser.add_argument(
        "--in", dest="in_dir", type=Path, required=True,
        help="ionmon output directory",
    )
    parser.add_argument(
        "--out", type=Path, required=True, help="output image path (.png)"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.figure == "tracking":
            plot_tracking(args.in_dir / "track" / "run.csv", args.out)
        elif args.figure == "probe-scan":
            plot_probe_scan(args.in_dir / "scan", args.out)
        else:
            plot_noise_scan(args.in_dir / "scan" / "ratios.csv", args.out)
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

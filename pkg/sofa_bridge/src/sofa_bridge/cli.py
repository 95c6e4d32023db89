"""Command-line entry point: sofa2hrtf."""

from __future__ import annotations

import argparse
import sys

from .convert import SofaFormatError, SofaImportSpec, sofa_to_portable


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sofa2hrtf",
        description="Convert a SimpleFreeFieldHRIR SOFA file to hrtf-json/1")
    parser.add_argument("--in", dest="input_path", required=True,
                        help="input .sofa file")
    parser.add_argument("--bins", type=int, default=96,
                        help="number of uniform frequency bins")
    parser.add_argument("--fmax", type=float, default=18000.0,
                        help="highest frequency in Hz (<= Nyquist)")
    parser.add_argument("--window-len", type=int, default=None,
                        help="truncate impulse responses before the DFT")
    parser.add_argument("--out", required=True, help="output .json file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = SofaImportSpec(args.input_path, bins=args.bins,
                              fmax_hz=args.fmax, window_len=args.window_len)
        sofa_to_portable(spec, args.out)
    except (SofaFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

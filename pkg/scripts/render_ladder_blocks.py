#!/usr/bin/env python3
"""Run the scripted ladder instance for row 3 and draw its block evolution."""
import argparse
import sys
from pathlib import Path

from mineps.scenarios import LADDER_BLOCKS_ROW, golden_text, ladder_blocks_run
from mineps.trace import render_blocks, render_svg


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--svg", help="also write an SVG drawing here")
    ap.add_argument("--diff", action="store_true", help="compare against the packaged golden file")
    args = ap.parse_args()
    _, trace = ladder_blocks_run()
    text = render_blocks(trace, LADDER_BLOCKS_ROW)
    sys.stdout.write(text)
    if args.svg:
        Path(args.svg).write_text(render_svg(trace, LADDER_BLOCKS_ROW))
    if args.diff:
        same = text == golden_text("ladder_blocks.txt")
        print("matches golden file" if same else "DIFFERS from golden file", file=sys.stderr)
        return 0 if same else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

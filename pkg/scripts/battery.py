#!/usr/bin/env python3
"""Run each variant against the mixed adversary set and check every invariant suite."""
import argparse
import sys
import time

from mineps.scenarios import battery_run
from mineps.trace import check


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", type=int, default=10_000)
    ap.add_argument("--variant", action="append", choices=("grid", "ladder", "grown"),
                    help="repeatable; default all three")
    args = ap.parse_args()
    ok = True
    for variant in args.variant or ["grid", "ladder", "grown"]:
        start = time.perf_counter()
        eng, trace = battery_run(variant, args.horizon)
        ran = time.perf_counter() - start
        report = check(trace, "all", phi=eng.phi)
        fired = sum(r.fired for r in trace.records)
        print(f"{variant}: {trace.horizon} stages, {fired} fired, run {ran:.1f}s, "
              f"check {time.perf_counter() - start - ran:.1f}s")
        for line in report.lines():
            print(f"  {line}")
        ok &= report.ok
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Run every built-in scenario and print its report.

Exits 1 if any expectation fails.
"""
import argparse
import sys
import time

from mineps.scenarios import SCENARIOS, run_scenario


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="scenarios to run (default: all)")
    ap.add_argument("--quiet", action="store_true", help="one line per scenario")
    args = ap.parse_args()
    failed = []
    for name in args.names or list(SCENARIOS):
        start = time.perf_counter()
        res = run_scenario(name)
        took = time.perf_counter() - start
        if args.quiet:
            print(f"{'PASS' if res.ok else 'FAIL'} {name} ({took:.1f}s)")
        else:
            sys.stdout.write(res.report())
            print(f"  ({took:.1f}s)")
        if not res.ok:
            failed.append(name)
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())

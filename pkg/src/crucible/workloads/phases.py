"""Configurable sleep workload.

Usage: python -m crucible.workloads.phases assemble=0.05 solve=0.1

Sleeps for each requested phase and reports the measured (not the
requested) durations, so the timing pipeline is exercised end to end
with real clock readings.
"""

from __future__ import annotations

import sys
import time


def main(argv: list[str]) -> int:
    if not argv:
        print("usage: phases NAME=SECONDS [NAME=SECONDS...]", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    for arg in argv:
        name, _, value = arg.partition("=")
        if not name or not value:
            print(f"bad phase argument {arg!r}", file=sys.stderr)
            return 2
        start = time.perf_counter()
        time.sleep(float(value))
        print(f"TIMING {name} {time.perf_counter() - start:.6f}")
    print(f"TOTAL {time.perf_counter() - t0:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))

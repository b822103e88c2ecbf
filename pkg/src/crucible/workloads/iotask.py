"""File write/read workload.

Usage: python -m crucible.workloads.iotask [mebibytes]

Writes a buffer to a temporary file, fsyncs, reads it back and checks
the length. Reports write/read phases.
"""

from __future__ import annotations

import os
import sys
import tempfile
import time


def main(argv: list[str]) -> int:
    mib = int(argv[0]) if argv else 8
    payload = os.urandom(1024 * 1024)
    t0 = time.perf_counter()
    with tempfile.NamedTemporaryFile(delete=True) as tmp:
        start = time.perf_counter()
        for _ in range(mib):
            tmp.write(payload)
        tmp.flush()
        os.fsync(tmp.fileno())
        print(f"TIMING write {time.perf_counter() - start:.6f}")

        start = time.perf_counter()
        tmp.seek(0)
        size = 0
        while chunk := tmp.read(1024 * 1024):
            size += len(chunk)
        print(f"TIMING read {time.perf_counter() - start:.6f}")
    if size != mib * 1024 * 1024:
        print("read size mismatch", file=sys.stderr)
        return 1
    print(f"TOTAL {time.perf_counter() - t0:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))

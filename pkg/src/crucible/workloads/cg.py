"""Small structured-grid Poisson solve.

Usage: python -m crucible.workloads.cg [grid_size]

Assembles the usual five-point stencil operator on an n-by-n grid and
runs unpreconditioned conjugate gradients to a fixed tolerance. Tiny,
but it has the assemble/solve split real solver benchmarks report.
"""

from __future__ import annotations

import sys
import time

import numpy as np


def _apply_stencil(u: np.ndarray) -> np.ndarray:
    out = 4.0 * u
    out[1:, :] -= u[:-1, :]
    out[:-1, :] -= u[1:, :]
    out[:, 1:] -= u[:, :-1]
    out[:, :-1] -= u[:, 1:]
    return out


def solve(n: int) -> tuple[int, float]:
    b = np.ones((n, n))
    x = np.zeros_like(b)
    r = b - _apply_stencil(x)
    p = r.copy()
    rs = float((r * r).sum())
    iterations = 0
    while rs > 1e-10 and iterations < 10 * n:
        ap = _apply_stencil(p)
        alpha = rs / float((p * ap).sum())
        x += alpha * p
        r -= alpha * ap
        rs_next = float((r * r).sum())
        p = r + (rs_next / rs) * p
        rs = rs_next
        iterations += 1
    return iterations, rs


def main(argv: list[str]) -> int:
    n = int(argv[0]) if argv else 64
    t0 = time.perf_counter()

    start = time.perf_counter()
    # "assembly" here is building the right-hand side and a warm stencil pass
    b = np.ones((n, n))
    _apply_stencil(b)
    print(f"TIMING assemble {time.perf_counter() - start:.6f}")

    start = time.perf_counter()
    iterations, residual = solve(n)
    print(f"TIMING solve {time.perf_counter() - start:.6f}")

    print(f"iterations {iterations} residual {residual:.3e}")
    print(f"TOTAL {time.perf_counter() - t0:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))

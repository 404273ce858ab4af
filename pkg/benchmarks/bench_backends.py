"""Benchmark the compiled quadrature core against the NumPy reference.

Times ``xmax_quad`` on the call mix the boundary solver actually issues:
banded and one-sided source expectations over a sweep of lookaheads,
states, and band edges, plus the terminal second moment.  Reports
per-call time for each available backend and the speedup.

Run from the repository root::

    python3 benchmarks/bench_backends.py [--repeats 5] [--order 32]
"""
from __future__ import annotations

import argparse
import math
import statistics
import time

import numpy as np

from maxstop.backends import available_backends, get_backend
from maxstop.gain import gl_nodes
from maxstop.quadrature import MODE_J, MODE_K, MODE_L


def build_workload(t_grid: int = 24) -> list[tuple]:
    """(mu, u, x, y, z, tau_eval, mode) tuples shaped like solver calls."""
    calls = []
    for mu in (0.0, 1.0, -0.5):
        for k in range(1, t_grid):
            u = k / t_grid
            tau_eval = max(1.0 - u - 0.01, 0.0)
            for x in (0.0, 0.3, 0.9):
                y = 0.2 + 0.1 * x
                z = y + 0.25
                calls.append((mu, u, x, y, z, tau_eval, MODE_K))
                calls.append((mu, u, x, y, math.inf, tau_eval, MODE_L))
            calls.append((mu, u, 0.5, 0.0, math.inf, 0.0, MODE_J))
    return calls


def time_backend(name: str, calls: list[tuple], order: int, repeats: int) -> tuple[float, float]:
    """Median wall time per sweep and a checksum over all call values."""
    backend = get_backend(name)
    glx, glw = gl_nodes(order)
    checksum = 0.0
    laps = []
    for rep in range(repeats + 1):  # first lap is warmup
        start = time.perf_counter()
        acc = 0.0
        for mu, u, x, y, z, tau_eval, mode in calls:
            acc += backend.xmax_quad(mu, u, x, y, z, tau_eval, mode, 1, glx, glw)
        laps.append(time.perf_counter() - start)
        checksum = acc
    return statistics.median(laps[1:]), checksum


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="timed sweeps per backend")
    parser.add_argument("--order", type=int, default=32, help="Gauss-Legendre order")
    args = parser.parse_args()

    calls = build_workload()
    names = available_backends()
    print(f"workload: {len(calls)} kernel calls, order {args.order}, "
          f"median of {args.repeats} sweeps")

    results = {}
    for name in names:
        seconds, checksum = time_backend(name, calls, args.order, args.repeats)
        results[name] = (seconds, checksum)
        per_call = seconds / len(calls) * 1e6
        print(f"  {name:<10} {seconds * 1e3:9.2f} ms/sweep   {per_call:8.2f} us/call"
              f"   checksum {checksum:+.12e}")

    if len(results) == 2:
        ref_s, ref_sum = results["reference"]
        core_s, core_sum = results["compiled"]
        drift = abs(core_sum - ref_sum) / max(abs(ref_sum), 1.0)
        print(f"  speedup (reference/compiled): {ref_s / core_s:.2f}x")
        print(f"  checksum relative drift:      {drift:.3e}")
        if drift > 1e-12:
            raise SystemExit("backends disagree beyond 1e-12 -- investigate before trusting timings")
    elif "compiled" not in results:
        print("  compiled core unavailable in this build; timed the reference only")


if __name__ == "__main__":
    main()

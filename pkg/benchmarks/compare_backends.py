#!/usr/bin/env python3
"""Throughput comparison of the compiled and pure-Python kernels.

Runs the event loop and the fluid RK4 integrator on a few representative
workloads and reports events (or steps) per second for each backend, plus a
bit-identity check on a shared seed.

Usage: python benchmarks/compare_backends.py [--quick]
"""

import argparse
import time

import numpy as np

from lqfsim import _kernel_py
from lqfsim._backend import load_compiled

EVENT_CASES = [
    # (n, d, lam, horizon)
    (100, 5, 0.7, 50.0),
    (1000, 15, 0.7, 20.0),
    (10000, 40, 0.7, 2.0),
    (1000, 20, 0.98, 10.0),
]


def time_events(kern, n, d, lam, horizon, repeats):
    tail0 = np.array([n, 0], dtype=np.int64)
    no_records = np.empty(0)
    best = float("inf")
    for rep in range(repeats):
        rng = np.random.default_rng(rep)
        start = time.perf_counter()
        kern.simulate_events(rng, n, d, lam, tail0, horizon, no_records, 0, False)
        best = min(best, time.perf_counter() - start)
    events = (1.0 + lam) * n * horizon
    return events / best


def time_rk4(kern, nsteps, repeats):
    v = np.zeros(3)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        kern.rk4_fluid(0.7, v, 1e-3, nsteps, 1e-3)
        best = min(best, time.perf_counter() - start)
    return nsteps / best


def check_identical(compiled):
    tail0 = np.array([64, 0], dtype=np.int64)
    rec = np.linspace(0.0, 3.0, 11)
    f_py, t_py = _kernel_py.simulate_events(
        np.random.default_rng(123), 64, 8, 0.8, tail0, 3.0, rec, 2, False)
    f_c, t_c = compiled.simulate_events(
        np.random.default_rng(123), 64, 8, 0.8, tail0, 3.0, rec, 2, False)
    assert f_py.tobytes() == f_c.tobytes() and np.array_equal(t_py, t_c), \
        "backends diverged; this is a bug"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="fewer repeats, smaller workloads")
    args = parser.parse_args()
    repeats = 2 if args.quick else 4

    compiled = load_compiled()
    if compiled is None:
        print("compiled kernel not built; showing pure-Python numbers only")
    else:
        check_identical(compiled)
        print("bit-identity check passed")

    print(f"{'workload':>34} {'python':>14} {'compiled':>14} {'speedup':>9}")
    for n, d, lam, horizon in EVENT_CASES:
        if args.quick:
            horizon = horizon / 5.0
        py = time_events(_kernel_py, n, d, lam, horizon, repeats)
        label = f"events n={n} d={d} lam={lam}"
        if compiled is None:
            print(f"{label:>34} {py:>12.2e}/s {'-':>14} {'-':>9}")
        else:
            cc = time_events(compiled, n, d, lam, horizon, repeats)
            print(f"{label:>34} {py:>12.2e}/s {cc:>12.2e}/s {cc / py:>8.1f}x")

    nsteps = 20000 if args.quick else 200000
    py = time_rk4(_kernel_py, nsteps, repeats)
    label = "fluid RK4 steps (K=3)"
    if compiled is None:
        print(f"{label:>34} {py:>12.2e}/s {'-':>14} {'-':>9}")
    else:
        cc = time_rk4(compiled, nsteps, repeats)
        print(f"{label:>34} {py:>12.2e}/s {cc:>12.2e}/s {cc / py:>8.1f}x")


if __name__ == "__main__":
    main()

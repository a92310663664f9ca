#!/usr/bin/env python3
"""Benchmark the numba and numpy kernel backends against each other.

Runs each hot kernel on a realistic workload, reports throughput for
both backends, and checks that they agree (paths bit-identical, float
reductions to 1e-10).

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from corrbern import _kernels
from corrbern.rng import make_stream


def _time(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_advance(impls, reps, horizon):
    print(f"\npath advance: {reps} replicates x {horizon} steps")
    gens = [make_stream(0, i) for i in range(reps)]
    u = np.empty((reps, horizon))
    for i, g in enumerate(gens):
        u[i] = g.random(horizon)
    inv = _kernels.inv_steps(0, horizon)
    cap = np.array([horizon - 1], dtype=np.int64)
    results = {}
    for name, impl in impls.items():
        def job():
            s = np.zeros(reps)
            out = np.empty((reps, 1))
            impl["advance_chunk"](s, 0, u, inv, 0.25, 0.225, 0.3, cap, out)
            results[name] = s
        impl["advance_chunk"](np.zeros(reps), 0, u[:1], inv, 0.25, 0.225, 0.3,
                              np.empty(0, dtype=np.int64), np.empty((1, 0)))  # warm JIT
        dt = _time(job)
        print(f"  {name:6s}: {reps * horizon / dt / 1e6:8.1f} M steps/s")
    names = list(results)
    if len(names) == 2:
        match = np.array_equal(results[names[0]], results[names[1]])
        print(f"  agreement: bit-identical final states = {match}")
        assert match


def bench_pmf(impls, n):
    print(f"\nexact pmf DP: n = {n}")
    snaps = np.array([n], dtype=np.int64)
    results = {}
    for name, impl in impls.items():
        out = np.zeros((1, n + 1))
        impl["pmf_evolve"](0.5, 0.25, 0.5, 64, np.array([64], dtype=np.int64),
                           np.zeros((1, 65)))  # warm JIT
        dt = _time(lambda: impl["pmf_evolve"](0.5, 0.25, 0.5, n, snaps, out))
        results[name] = out.copy()
        print(f"  {name:6s}: {dt * 1e3:8.1f} ms")
    names = list(results)
    if len(names) == 2:
        err = np.max(np.abs(results[names[0]] - results[names[1]]))
        print(f"  agreement: max abs row difference = {err:.2e}")
        assert err < 1e-12


def bench_moments(impls, n):
    print(f"\nmoment recursion: n = {n}")
    idx = np.array([n], dtype=np.int64)
    results = {}
    for name, impl in impls.items():
        es = np.empty(1)
        es2 = np.empty(1)
        impl["moment_recursion"](0.75, 0.125, 0.5, np.array([10], dtype=np.int64),
                                 np.empty(1), np.empty(1))  # warm JIT
        dt = _time(lambda: impl["moment_recursion"](0.75, 0.125, 0.5, idx, es, es2))
        results[name] = float(es2[0])
        print(f"  {name:6s}: {dt * 1e3:8.1f} ms")
    vals = list(results.values())
    if len(vals) == 2:
        rel = abs(vals[0] / vals[1] - 1.0)
        print(f"  agreement: rel difference = {rel:.2e}")
        assert rel < 1e-10


def bench_table(impls, n):
    print(f"\nweight table: n = {n}")
    results = {}
    for name, impl in impls.items():
        impl["gamma_table"](0.3, 100)  # warm JIT
        dt = _time(lambda: impl["gamma_table"](0.3, n))
        results[name] = impl["gamma_table"](0.3, n)[2][-1]
        print(f"  {name:6s}: {dt * 1e3:8.1f} ms")
    vals = list(results.values())
    if len(vals) == 2:
        rel = abs(vals[0] / vals[1] - 1.0)
        print(f"  agreement: rel difference on v_n = {rel:.2e}")
        assert rel < 1e-10


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()
    impls = _kernels.IMPLEMENTATIONS
    print(f"available backends: {sorted(impls)}; active: {_kernels.BACKEND}")
    scale = 10 if args.quick else 1
    bench_advance(impls, 256, 200_000 // scale)
    bench_pmf(impls, 2000 // scale)
    bench_moments(impls, 1_000_000 // scale)
    bench_table(impls, 1_000_000 // scale)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Runs both implementations of each hot kernel on production-sized inputs and
prints a timing table.  Select what the package itself uses at import time
with FCINET_BACKEND=numba|numpy; this script always times both.

Usage: python3 benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from fcinet import _kernels


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_als(n, t, impls, repeats):
    rng = np.random.default_rng(0)
    ret = np.ascontiguousarray(rng.uniform(0.9, 1.1, size=(n, t)))
    inv_ret = np.ascontiguousarray(1.0 / ret)
    a2 = float((ret ** 2).sum(axis=0) @ (inv_ret ** 2).sum(axis=0))
    rows = {}
    for name, (sweep, init, _, _) in impls.items():
        x, y, z = init(ret, inv_ret)
        sweep(ret, inv_ret, x, y, z, a2)  # warm (JIT compile)
        rows[name] = best_of(lambda: sweep(ret, inv_ret, x, y, z, a2), repeats)
    return f"als_sweep        N={n:<4d} T={t:<6d}", rows


def bench_residual(n, t, impls, repeats):
    rng = np.random.default_rng(1)
    ret = np.ascontiguousarray(rng.uniform(0.9, 1.1, size=(n, t)))
    inv_ret = np.ascontiguousarray(1.0 / ret)
    x = np.full(n, 1.0 / np.sqrt(n))
    y = x.copy()
    z = np.full(t, float(n))
    rows = {}
    for name, (_, _, residual, _) in impls.items():
        residual(ret, inv_ret, x, y, z)
        rows[name] = best_of(lambda: residual(ret, inv_ret, x, y, z), repeats)
    return f"residual_sq      N={n:<4d} T={t:<6d}", rows


def bench_var(k, p, t, impls, repeats):
    rng = np.random.default_rng(2)
    lagged = np.zeros((p, k, k))
    for lag in range(p):
        np.fill_diagonal(lagged[lag], 0.3 / (lag + 1))
    lag0 = np.zeros((k, k))
    innov = rng.standard_normal((t, k))
    rows = {}
    for name, (_, _, _, recursion) in impls.items():
        out = np.zeros_like(innov)
        recursion(lagged, lag0, innov, out)
        rows[name] = best_of(
            lambda: recursion(lagged, lag0, innov, np.zeros_like(innov)),
            repeats)
    return f"var_recursion    K={k:<3d} p={p} T={t:<6d}", rows


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="smaller problem sizes")
    args = parser.parse_args()

    impls = {"numpy": _kernels._NUMPY_IMPLS, "numba": _kernels._build_numba()}

    if args.quick:
        cases = [
            bench_als(100, 1000, impls, 3),
            bench_residual(100, 200, impls, 3),
            bench_var(15, 2, 10_000, impls, 3),
        ]
    else:
        cases = [
            bench_als(811, 8264, impls, 3),
            bench_residual(811, 2000, impls, 3),
            bench_var(15, 2, 100_000, impls, 3),
            bench_var(5, 1, 100_000, impls, 3),
        ]

    print(f"{'kernel / size':<38s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for label, rows in cases:
        ratio = rows["numpy"] / rows["numba"]
        print(f"{label:<38s} {rows['numpy'] * 1e3:>8.2f}ms "
              f"{rows['numba'] * 1e3:>8.2f}ms {ratio:>7.1f}x")


if __name__ == "__main__":
    main()

"""Benchmark the compiled path-scan kernels against the pure-Python mirror.

Usage:  python benchmarks/bench_kernels.py [n_paths]

Both backends consume identical pre-drawn inputs, so the comparison isolates
the scan cost (the random draws themselves are shared numpy work).
"""

import sys
import time

import numpy as np

from pssmax.montecarlo import backend
from pssmax.montecarlo.backend import python_kernels


def fv_batch(rng, n):
    e = rng.exponential(1.0, n) + 0.02
    counts = rng.poisson(1.0, n)
    offs = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offs[1:])
    jt = (np.concatenate([np.sort(rng.random(c)) * e[i] for i, c in enumerate(counts)])
          if counts.sum() else np.empty(0))
    js = rng.exponential(1.0, int(counts.sum()))
    return e, jt, js, offs


def iv_batch(rng, n, steps=1000):
    offs = np.arange(0, (n + 1) * steps, steps, dtype=np.int64)
    dt = np.full(n * steps, 1.0 / steps)
    dw = rng.standard_normal(n * steps)
    jump = np.zeros(n * steps)
    return dt, dw, jump, offs


def run(label, fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    print(f"  {label:28s} {best * 1e3:10.1f} ms")
    return best


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 100_000
    rng = np.random.default_rng(0)
    print(f"compiled extension available: {backend.USING_COMPILED}")
    print(f"== exact-scheme scan, {n} paths")
    e, jt, js, offs = fv_batch(rng, n)
    outs = [np.empty(n) for _ in range(5)]

    t_c = run("compiled fv_scan", lambda: backend.fv_scan(0.0, 1.0, 2.0, e, jt, js, offs, *outs)) \
        if backend.USING_COMPILED else None
    t_p = run("python fv_scan", lambda: python_kernels.fv_scan(0.0, 1.0, 2.0, e, jt, js, offs, *outs))
    if t_c:
        print(f"  speedup: {t_p / t_c:.1f}x")

    n_iv = max(n // 20, 100)
    print(f"== Euler scan, {n_iv} paths x 1000 steps")
    dt, dw, jump, offs_iv = iv_batch(rng, n_iv)
    outs_iv = [np.empty(n_iv) for _ in range(5)]
    t_c = run("compiled euler_scan",
              lambda: backend.euler_scan(0.0, 0.0, 1.4, 2.0, dt, dw, jump, offs_iv, *outs_iv)) \
        if backend.USING_COMPILED else None
    t_p = run("python euler_scan",
              lambda: python_kernels.euler_scan(0.0, 0.0, 1.4, 2.0, dt, dw, jump, offs_iv, *outs_iv))
    if t_c:
        print(f"  speedup: {t_p / t_c:.1f}x")

    print(f"== moment scan, {n // 10} paths x 801-point grid")
    n_m = n // 10
    e, jt, js, offs = fv_batch(rng, n_m)
    vgrid = np.linspace(0.0, 1.0, 801)
    wsimp = np.ones(801)
    wsimp[1:-1:2] = 4.0
    wsimp[2:-1:2] = 2.0
    wsimp *= (1.0 / 800) / 3.0
    lhs, quad = np.empty(n_m), np.empty(n_m)
    t_c = run("compiled fv_moment",
              lambda: backend.fv_moment(0.0, 1.0, 2.0, e, jt, js, offs, vgrid, wsimp, 2.0, 0.0, lhs, quad)) \
        if backend.USING_COMPILED else None
    t_p = run("python fv_moment",
              lambda: python_kernels.fv_moment(0.0, 1.0, 2.0, e, jt, js, offs, vgrid, wsimp, 2.0, 0.0, lhs, quad))
    if t_c:
        print(f"  speedup: {t_p / t_c:.1f}x")


if __name__ == "__main__":
    main()

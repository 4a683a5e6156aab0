"""Benchmark the compiled kernels against their pure-Python twins.

Run from the repo root after building the extension in place:

    python setup.py build_ext --inplace
    python benchmarks/bench_kernels.py

Covers the three hot paths: per-bar candle splits, windowed sums, extremum
scanning, and the full six-rule detector fold, at both fixture-sized and
bulk series lengths.
"""

from __future__ import annotations

import time

import numpy as np

from esmkit import _kernels_py as kpy

try:
    from esmkit import _kernels_cy as kcy
except ImportError:
    kcy = None


def timeit(fn, *args, repeat=5, number=1):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def bench(name, py_call, cy_call):
    t_py = py_call()
    if cy_call is None:
        print(f"{name:34s} python {t_py * 1e3:9.3f} ms   (no compiled twin)")
        return
    t_cy = cy_call()
    print(
        f"{name:34s} python {t_py * 1e3:9.3f} ms   cython {t_cy * 1e3:9.3f} ms"
        f"   speedup {t_py / t_cy:6.1f}x"
    )


def main() -> None:
    rng = np.random.default_rng(7)

    n = 1_000_000
    lo = rng.uniform(90, 100, n)
    hi = lo + rng.uniform(0, 5, n)
    close = lo + (hi - lo) * rng.uniform(0, 1, n)
    vol = rng.uniform(0, 1000, n)
    bench(
        f"candle_splits    ({n:>9,d} bars)",
        lambda: timeit(kpy.candle_splits, hi, lo, close, vol),
        (lambda: timeit(kcy.candle_splits, hi, lo, close, vol)) if kcy else None,
    )

    vals = rng.uniform(-1, 1, n)
    bounds = np.arange(0, n + 1, 10, dtype=np.int64)
    bench(
        f"window_sums      ({n:>9,d} vals)",
        lambda: timeit(kpy.window_sums, vals, bounds, repeat=3),
        (lambda: timeit(kcy.window_sums, vals, bounds, repeat=3)) if kcy else None,
    )

    series = rng.uniform(90, 110, 100_000)
    bench(
        "find_extrema     (  100,000 vals)",
        lambda: timeit(kpy.find_extrema, series, 2, repeat=3),
        (lambda: timeit(kcy.find_extrema, series, 2, repeat=3)) if kcy else None,
    )

    prices = rng.choice([99.0, 100.0, 101.0], 10_000)
    neds = rng.choice([-0.5, 0.0, 0.5], 10_000)
    bench(
        "detect_fold      (   10,000 bars)",
        lambda: timeit(kpy.detect_fold, prices, prices, neds, 2, 5e-4, 0.02, 2, 20, repeat=3),
        (lambda: timeit(kcy.detect_fold, prices, prices, neds, 2, 5e-4, 0.02, 2, 20, repeat=3))
        if kcy
        else None,
    )

    small_p = rng.choice([99.0, 100.0, 101.0], (20_000, 6))
    small_x = rng.choice([-0.5, 0.0, 0.5], (20_000, 6))

    def fold_many(mod):
        for i in range(len(small_p)):
            mod.detect_fold(small_p[i], small_p[i], small_x[i], 1, 5e-4, 0.02, 1, 3)

    bench(
        "detect_fold      (20,000 x 6 bars)",
        lambda: timeit(fold_many, kpy, repeat=2),
        (lambda: timeit(fold_many, kcy, repeat=2)) if kcy else None,
    )


if __name__ == "__main__":
    main()

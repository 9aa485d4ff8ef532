#!/usr/bin/env python3
"""Compare the numba and pure-numpy kernel backends.

Run from the repository root::

    python3 benchmarks/bench_kernels.py --sizes 100 500 2000

Each kernel is warmed up once (numba compiles on first call), outputs of the
two backends are cross-checked, then the median of ``--repeat`` timings is
reported in microseconds.
"""

import argparse
import timeit

import numpy as np

from pcdeval.kernels import numba_backend, numpy_backend
from pcdeval.spline_fit import SplineConfig, make_knots

GRID = np.round(np.arange(1, 10) * 0.1, 10)


def _cases(n, rng):
    x = np.sort(rng.uniform(0, 250, n))
    knots = make_knots(0.0, 250.0, SplineConfig())
    resid = rng.standard_normal(n) * np.where(np.arange(n) < n // 2, 0.02, 0.2)
    mu = np.clip(0.9 - 0.003 * x, 0, 1)
    sigma = np.repeat([0.05, 0.0, 0.1], [n // 3, n // 3, n - 2 * (n // 3)])
    return {
        "basis_matrix": (x, knots, 3, 10),
        "split_profile": (resid, 5),
        "exceedance": (mu, sigma, 0.5),
        "pcd_surface": (x, mu, sigma, GRID, GRID),
    }


def _median_us(func, args, repeat):
    number = max(1, int(0.02 / max(timeit.timeit(lambda: func(*args), number=1), 1e-7)))
    runs = timeit.repeat(lambda: func(*args), number=number, repeat=repeat)
    return 1e6 * float(np.median(runs)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 500, 2000])
    parser.add_argument("--repeat", type=int, default=7)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if numba_backend is None:
        parser.exit(1, "numba is not importable; install the 'numba' extra\n")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<14} {'n':>6} {'numpy us':>12} {'numba us':>12} {'speedup':>8}")
    for n in args.sizes:
        for name, call_args in _cases(n, rng).items():
            slow, fast = getattr(numpy_backend, name), getattr(numba_backend, name)
            a, b = slow(*call_args), fast(*call_args)  # warm-up and compile
            if not np.allclose(a, b, rtol=1e-12, atol=1e-12, equal_nan=True):
                raise SystemExit(f"backends disagree on {name} at n={n}")
            t_np = _median_us(slow, call_args, args.repeat)
            t_nb = _median_us(fast, call_args, args.repeat)
            print(f"{name:<14} {n:>6} {t_np:>12.1f} {t_nb:>12.1f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()

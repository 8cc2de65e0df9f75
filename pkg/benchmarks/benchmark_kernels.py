#!/usr/bin/env python3
"""Benchmark the numba Birkhoff kernels against the pure-numpy fallbacks.

Usage:
    python benchmarks/benchmark_kernels.py
    python benchmarks/benchmark_kernels.py --orbit-len 2000000 --seeds 64
    python benchmarks/benchmark_kernels.py --output results.json

The numpy fallback performs the identical per-seed operation sequence, so
this also cross-checks that both backends agree to rounding.
"""

import argparse
import json
import time

import numpy as np

from respondyn.kernels import (
    BACKEND,
    NUMBA_ENABLED,
    _py_birkhoff_logistic,
    _py_birkhoff_tent,
    birkhoff_logistic,
    birkhoff_tent,
)

CASES = [
    ("logistic t=3.99", birkhoff_logistic, _py_birkhoff_logistic, (3.99,)),
    ("tent u=0.414 v=1.414", birkhoff_tent, _py_birkhoff_tent,
     (0.41421356237309515, 1.4142135623730951)),
]


def run_case(fn, params, x0s, burn, n, coeffs, repeats):
    fn(*params, x0s[:2], 10, 64, coeffs)  # warm-up / JIT
    best = np.inf
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*params, x0s, burn, n, coeffs)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--orbit-len", type=int, default=1_000_000)
    ap.add_argument("--seeds", type=int, default=64)
    ap.add_argument("--burn", type=int, default=1000)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--output", type=str, default=None, help="write JSON results")
    args = ap.parse_args()

    rng = np.random.default_rng(12345)
    coeffs = np.array([0.0, 1.0])
    rows = []
    total = args.seeds * args.orbit_len
    print(f"backend={BACKEND}  seeds={args.seeds}  orbit_len={args.orbit_len}")
    print(f"{'case':<24} {'numba (s)':>10} {'numpy (s)':>10} {'speedup':>8} {'max dev':>10}")
    print("-" * 68)
    for name, nb_fn, py_fn, params in CASES:
        lo = 0.05 if name.startswith("logistic") else -0.9
        hi = 0.95 if name.startswith("logistic") else 0.9
        x0s = rng.uniform(lo, hi, args.seeds)
        t_nb, r_nb = run_case(nb_fn, params, x0s, args.burn, args.orbit_len,
                              coeffs, args.repeats)
        t_py, r_py = run_case(py_fn, params, x0s, args.burn, args.orbit_len,
                              coeffs, args.repeats)
        dev = max(float(np.abs(r_nb[0] - r_py[0]).max()),
                  float(np.abs(r_nb[1] - r_py[1]).max()))
        speed = t_py / t_nb if t_nb > 0 else float("inf")
        print(f"{name:<24} {t_nb:>10.3f} {t_py:>10.3f} {speed:>7.1f}x {dev:>10.2e}")
        rows.append({"case": name, "numba_s": t_nb, "numpy_s": t_py,
                     "speedup": speed, "max_dev": dev,
                     "iters_per_s_numba": total / t_nb})
    if not NUMBA_ENABLED:
        print("note: numba unavailable or disabled; both columns ran the fallback")
    if args.output:
        with open(args.output, "w", encoding="ascii") as fh:
            json.dump({"backend": BACKEND, "results": rows}, fh, indent=2)
        print(f"wrote {args.output}")


if __name__ == "__main__":
    main()

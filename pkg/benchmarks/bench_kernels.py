"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run: python benchmarks/bench_kernels.py --j 100000 --m 8 --repeats 50

The numba path must be enabled (do not set ENTROPOOL_NUMBA=0) or only the
numpy timings are reported.
"""

import argparse
import time

import numpy as np

from entropool import _kernels as kernels


def time_call(func, *args, repeats):
    func(*args)  # warm-up (and JIT compile on the numba path)
    start = time.perf_counter()
    for _ in range(repeats):
        func(*args)
    return (time.perf_counter() - start) / repeats * 1e3


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--j", type=int, default=100_000)
    parser.add_argument("--m", type=int, default=8)
    parser.add_argument("--repeats", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    log_p = np.log(rng.uniform(0.5, 1.5, args.j) / args.j)
    coeffs_t = np.ascontiguousarray(rng.standard_normal((args.j, args.m)))
    multipliers = rng.uniform(-1, 1, args.m)
    spot = rng.uniform(50, 150, args.j)
    vol = rng.uniform(0.05, 0.8, args.j)
    column = rng.standard_normal(args.j)
    weights = rng.uniform(0.5, 1.5, args.j)
    weights /= weights.sum()

    cases = [
        ("exp_primal", kernels.exp_primal_numpy, kernels.exp_primal_numba,
         (log_p, coeffs_t, multipliers)),
        ("straddle_price", kernels.straddle_price_numpy,
         kernels.straddle_price_numba, (spot, vol, 100.0, 0.5, 0.02)),
        ("weighted_mean_var", kernels.weighted_mean_var_numpy,
         kernels.weighted_mean_var_numba, (column, weights)),
    ]

    print(f"J={args.j} M={args.m} repeats={args.repeats} "
          f"(numba available: {kernels.USING_NUMBA})")
    print(f"{'kernel':<20}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, numpy_impl, numba_impl, call_args in cases:
        t_np = time_call(numpy_impl, *call_args, repeats=args.repeats)
        if numba_impl is None:
            print(f"{name:<20}{t_np:>12.3f}{'n/a':>12}{'n/a':>10}")
            continue
        t_nb = time_call(numba_impl, *call_args, repeats=args.repeats)
        print(f"{name:<20}{t_np:>12.3f}{t_nb:>12.3f}{t_np / t_nb:>10.2f}x")


if __name__ == "__main__":
    main()

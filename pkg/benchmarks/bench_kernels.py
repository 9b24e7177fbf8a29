#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy reference backend.

Usage: python benchmarks/bench_kernels.py [--n 40000] [--k 12] [--repeats 5]
"""

import argparse
import time

import numpy as np

from clusterinit.kernels import _reference

try:
    from clusterinit.kernels import _fast
except ImportError:
    _fast = None


def best_of(fn, repeats, *args):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=40000)
    parser.add_argument("--n-pairwise", type=int, default=4000,
                        help="points for the O(n^2) kernels")
    parser.add_argument("--k", type=int, default=12)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    points = np.ascontiguousarray(rng.normal(size=(args.n, 2)) * 10)
    centroids = np.ascontiguousarray(rng.normal(size=(args.k, 2)) * 10)
    labels = np.ascontiguousarray(rng.integers(0, args.k, size=args.n), dtype=np.int64)
    small = points[:args.n_pairwise]
    small_labels = labels[:args.n_pairwise]
    cols = rng.integers(0, 640, size=args.n)
    rows = rng.integers(0, 640, size=args.n)

    cases = [
        ("assign_points", (points, centroids), "n=%d k=%d" % (args.n, args.k)),
        ("fcm_memberships", (points, centroids, 2.0), "n=%d k=%d" % (args.n, args.k)),
        ("label_distance_sums", (small, small_labels, args.k),
         "n=%d (O(n^2))" % args.n_pairwise),
        ("pair_extremes", (small, small_labels), "n=%d (O(n^2))" % args.n_pairwise),
        ("bin_counts", (cols, rows, 640, 640), "n=%d" % args.n),
    ]

    print(f"{'kernel':<22} {'size':<18} {'reference':>12} {'compiled':>12} {'speedup':>9}")
    for name, call_args, size in cases:
        t_ref = best_of(getattr(_reference, name), args.repeats, *call_args)
        if _fast is None:
            print(f"{name:<22} {size:<18} {t_ref * 1e3:>10.2f}ms {'n/a':>12} {'n/a':>9}")
            continue
        t_fast = best_of(getattr(_fast, name), args.repeats, *call_args)
        print(f"{name:<22} {size:<18} {t_ref * 1e3:>10.2f}ms {t_fast * 1e3:>10.2f}ms "
              f"{t_ref / t_fast:>8.1f}x")
    if _fast is None:
        print("\ncompiled extension not built; only the reference backend was timed")


if __name__ == "__main__":
    main()

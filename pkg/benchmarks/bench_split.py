"""Benchmark the compiled split-search kernel against the numpy fallback.

Usage: python3 benchmarks/bench_split.py [--rows N] [--cols P] [--repeats K]

Times best_split over random regression nodes at several node sizes and
verifies that both implementations return bit-identical answers.
"""

import argparse
import timeit

import numpy as np

from stockrec.kernels import USING_COMPILED_KERNEL, best_split_cy, best_split_py


def bench(rows, cols, repeats, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, cols))
    y = X[:, 0] + 0.5 * np.sin(X[:, 1]) + rng.normal(0, 0.5, rows)
    features = np.arange(cols, dtype=np.intp)

    print(f"compiled extension available: {USING_COMPILED_KERNEL}")
    print(f"{'node size':>10} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8}")
    for node in (64, 256, 1024, rows):
        node = min(node, rows)
        idx = np.sort(rng.choice(rows, size=node, replace=False)).astype(np.intp)

        py = best_split_py(X, y, idx, features, 5)
        t_py = min(
            timeit.repeat(lambda: best_split_py(X, y, idx, features, 5), number=repeats)
        ) / repeats * 1e3

        if best_split_cy is None:
            print(f"{node:>10} {t_py:>12.3f} {'n/a':>12} {'n/a':>8}")
            continue

        cy = best_split_cy(X, y, idx, features, 5)
        assert py == cy, f"kernel mismatch at node size {node}: {py} vs {cy}"
        t_cy = min(
            timeit.repeat(lambda: best_split_cy(X, y, idx, features, 5), number=repeats)
        ) / repeats * 1e3
        print(f"{node:>10} {t_py:>12.3f} {t_cy:>12.3f} {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=4096)
    ap.add_argument("--cols", type=int, default=20)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()
    bench(args.rows, args.cols, args.repeats)

"""Timing comparison of the numba kernels against the pure-numpy path.

Both backends are bit-identical (the test suite proves it); this script
quantifies what the JIT buys. Run:

    python3 benchmarks/bench_kernels.py [--rows 4000] [--features 12] [--repeats 5]

The numba numbers exclude the first call so JIT compilation does not
pollute them.
"""

import argparse
import time

import numpy as np

import rankstab._kernels_numba as nb
import rankstab._kernels_numpy as pure


def _case(rows, features, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(rows, features))
    logits = x @ rng.normal(size=features)
    y = (logits + rng.normal(scale=0.5, size=rows) > 0.3).astype(np.int64)
    return np.ascontiguousarray(x), y


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=4000)
    parser.add_argument("--features", type=int, default=12)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    x, y = _case(args.rows, args.features, seed=7)
    grad = y.astype(np.float64) - 0.5
    hess = np.full(args.rows, 0.25)
    tree = nb.grow_gini_tree(x, y, 8, 4, args.features, False, 1234)

    tasks = {
        "grow_gini_tree(depth=8)": lambda mod: mod.grow_gini_tree(
            x, y, 8, 4, args.features, False, 1234
        ),
        "grow_gini_tree(unlimited)": lambda mod: mod.grow_gini_tree(
            x, y, 0, 1, args.features, False, 1234
        ),
        "grow_gini_tree(bootstrap)": lambda mod: mod.grow_gini_tree(
            x, y, 8, 4, max(1, args.features // 3), True, 99
        ),
        "grow_mse_tree(depth=8)": lambda mod: mod.grow_mse_tree(
            x, grad, hess, 8, 4
        ),
        "predict_tree": lambda mod: mod.predict_tree(*tree, x),
    }

    print(f"rows={args.rows} features={args.features} "
          f"(best of {args.repeats}, numba warm)")
    print(f"{'kernel':<28}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, call in tasks.items():
        call(nb)  # warm the JIT cache before timing
        numba_time = _time(lambda: call(nb), args.repeats)
        numpy_time = _time(lambda: call(pure), args.repeats)
        ratio = numpy_time / numba_time if numba_time else float("inf")
        print(f"{name:<28}{numpy_time:>11.4f}s{numba_time:>11.4f}s{ratio:>9.1f}x")


if __name__ == "__main__":
    main()

"""Compare the compiled and pure-Python kernels on the same inputs.

Usage::

    python benchmarks/bench_kernels.py [--nodes 300] [--rows 5000] [--repeat 3]

Prints the best-of-``repeat`` wall time per kernel and backend, the speedup,
and whether the outputs are bit-identical.
"""
import argparse
import time

import numpy as np

from metalp import kernels
from metalp.graph import Graph
from metalp.stacking.binning import Binner


def best_time(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if a is None or b is None:
        return a is b
    return np.array_equal(a, b)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=300)
    ap.add_argument("--rows", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    fast, slow = kernels.compiled_backend, kernels.python_backend
    if fast is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1
    rng = np.random.default_rng(0)

    n = args.nodes
    edges = rng.integers(0, n, size=(4 * n, 2))
    g = Graph(n, np.vstack([edges, np.c_[np.arange(n - 1), np.arange(1, n)]]))
    X = rng.normal(size=(args.rows, 20))
    y = (X[:, 0] + 0.5 * X[:, 1] ** 2 + rng.normal(scale=0.5, size=args.rows) > 0.5).astype(float)
    binner = Binner().fit(X)
    codes = binner.transform(X)
    tree_args = (codes, y, np.ones(args.rows), np.arange(args.rows), np.arange(20), binner.n_bins,
                 8, 4, 1, 0.0, 0.0, 0.0, 7)

    cases = {
        f"graph_paths (n={n}, m={g.m})": lambda b: b.graph_paths(g.indptr, g.indices, n),
        f"build_tree (rows={args.rows}, depth 8)": lambda b: b.build_tree(*tree_args),
    }
    tree = fast.build_tree(*tree_args)
    thr = binner.threshold(tree[0], tree[1])
    cases[f"predict_tree (rows={args.rows})"] = lambda b: b.predict_tree(X, tree[0], thr, tree[2], tree[3], tree[4])

    print(f"{'kernel':<40} {'python s':>10} {'cython s':>10} {'speedup':>8}  identical")
    for name, fn in cases.items():
        ts, a = best_time(lambda: fn(slow), args.repeat)
        tf, b = best_time(lambda: fn(fast), args.repeat)
        print(f"{name:<40} {ts:10.4f} {tf:10.4f} {ts / tf:8.1f}  {same(a, b)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

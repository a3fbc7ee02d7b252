"""Compare the numba kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--rows 2000] [--cols 48] [--repeat 5]

Inputs are random computation rows (seeded, ``-1`` for undefined).  Each
kernel is run once per backend to check both agree and to warm the JIT, then
timed with ``timeit``.
"""

import argparse
import timeit

import numpy as np

from lowspeed import _kernels


def inputs(rows, cols, seed):
    rng = np.random.default_rng(seed)
    V = rng.integers(-1, 2, size=(rows, cols)).astype(np.int64)
    # most pairs agree on most columns, as on real trees
    V[:, : cols // 2] = np.where(V[:, : cols // 2] >= 0, 0, -1)
    group = np.arange(rows) // 4
    # rows are the leaves of a complete binary tree; a node's id is its index
    # among the nodes of its level, and a step is main for half the nodes
    depth = max(1, (rows - 1).bit_length())
    r = np.arange(rows)
    anc = np.stack([(r >> (depth - l)) + (1 << l) for l in range(depth + 1)], axis=1)
    node_main = rng.random(2 << depth) < 0.5
    main = node_main[anc]
    main[:, 0] = False
    return V, group, anc, main


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--cols", type=int, default=48)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=7)
    a = ap.parse_args()
    V, group, anc, main_ = inputs(a.rows, a.cols, a.seed)
    ks = {name: _kernels.with_backend(name) for name in ("numba", "numpy")}
    cases = {
        "nonsplit_pairs": lambda k: k.nonsplit_pairs(V, group, None, 16)[0],
        "lifted_nonsplit": lambda k: k.lifted_nonsplit(V, anc, main_, 16)[:2],
        "splits_all": lambda k: k.splits_all(V, len(V), V[-1]),
    }
    print(f"rows={a.rows} cols={a.cols} repeat={a.repeat}")
    print(f"{'kernel':18} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name, f in cases.items():
        ref = [f(k) for k in ks.values()]
        assert ref[0] == ref[1], f"{name}: backends disagree {ref}"
        t = {b: min(timeit.repeat(lambda: f(k), number=1, repeat=a.repeat)) * 1e3
             for b, k in ks.items()}
        print(f"{name:18} {t['numba']:10.2f} {t['numpy']:10.2f} {t['numpy'] / t['numba']:8.1f}x")


if __name__ == "__main__":
    main()

"""Benchmark the compiled kernels against the pure-numpy fallback.

Simulates the per-trial hot path at desk scale: matching a population of
condition nets and reinforcing a match set of prediction nets.

    python3 benchmarks/bench_kernels.py [--features 256] [--pop 500]
                                        [--match 400] [--hidden 16]
                                        [--repeats 50]
"""

import argparse
import importlib
import time

import numpy as np


def build_state(rng, n, pop_size, match_size, hidden):
    conds = []
    for _ in range(pop_size):
        w1 = rng.standard_normal((2, n)) * 0.1
        b1 = np.zeros(2)
        w2 = rng.standard_normal((1, 2)) * 0.1
        b2 = np.zeros(1)
        conds.append((w1, b1, w2, b2))
    preds = []
    for _ in range(match_size):
        w1 = rng.standard_normal((hidden, n)) * 0.1
        b1 = np.zeros(hidden)
        m1 = np.ones((hidden, n), dtype=np.uint8)
        w2 = rng.standard_normal((n, hidden)) * 0.1
        b2 = np.zeros(n)
        m2 = np.ones((n, hidden), dtype=np.uint8)
        preds.append((w1, b1, m1, np.zeros_like(w1), np.zeros_like(b1), 0.005,
                      w2, b2, m2, np.zeros_like(w2), np.zeros_like(b2), 0.005))
    return conds, preds


def bench(mod, conds, preds, xs, repeats):
    n = xs.shape[1]
    flags = np.empty(len(conds), dtype=np.uint8)
    ys = np.empty((len(preds), n))
    start = time.perf_counter()
    for r in range(repeats):
        x = xs[r % xs.shape[0]]
        mod.match_batch(conds, x, 0.5, flags)
        mod.reinforce_batch(preds, x, 0.9, ys)
    return (time.perf_counter() - start) / repeats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--features", type=int, default=256)
    parser.add_argument("--pop", type=int, default=500)
    parser.add_argument("--match", type=int, default=400)
    parser.add_argument("--hidden", type=int, default=16)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    xs = rng.random((32, args.features))

    backends = {}
    backends["python"] = importlib.import_module("lcsae._kernels_py")
    try:
        backends["cython"] = importlib.import_module("lcsae._kernels")
    except ImportError:
        print("compiled kernels unavailable; benchmarking the fallback only")

    print(f"features={args.features} pop={args.pop} match={args.match} "
          f"hidden={args.hidden} repeats={args.repeats}")
    times = {}
    for name, mod in backends.items():
        conds, preds = build_state(np.random.default_rng(1), args.features,
                                   args.pop, args.match, args.hidden)
        bench(mod, conds, preds, xs, 3)  # warm up
        times[name] = bench(mod, conds, preds, xs, args.repeats)
        print(f"{name:>7}: {times[name] * 1e3:8.3f} ms/trial "
              f"({1.0 / times[name]:8.1f} trials/s)")
    if len(times) == 2:
        print(f"speedup: {times['python'] / times['cython']:.1f}x")


if __name__ == "__main__":
    main()

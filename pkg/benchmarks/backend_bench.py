"""Timing comparison of the two kernel backends.

Run:  python3 benchmarks/backend_bench.py [--reps 5]

Both backends implement the same counter-based draws, so integer
results are identical; this script only reports wall time for the hot
paths (graph sampling, per-step statistics, full ARL replicates).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dcsbm_monitor import rng
from dcsbm_monitor import _kernels_numba as kb
from dcsbm_monitor import _kernels_numpy as kp


def bench(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--n", type=int, default=100)
    args = ap.parse_args()

    print("compiling numba kernels (cached after first run) ...")
    t0 = time.perf_counter()
    kb.warmup()
    print(f"  warmup: {time.perf_counter() - t0:.2f}s\n")

    n = args.n
    half = n // 2
    labels0 = np.repeat(np.array([0, 1], np.int64), [half, n - half])
    sizes = np.bincount(labels0, minlength=2).astype(np.int64)
    delta = np.array([0.5, 0.5])
    P = np.array([[0.2, 0.1], [0.1, 0.2]])
    Pstar = np.array([[0.3, 0.1], [0.1, 0.2]])
    key = rng.derive(rng.key_from_seed(0), 1)
    theta = kb.draw_theta(key, labels0, sizes, delta)

    cases = [
        (f"sample_dense (one graph, n={n})",
         lambda k: k.sample_dense(key, theta, labels0, P), 100),
        (f"step_stats (graph + statistics, n={n})",
         lambda k: k.step_stats(key, labels0, sizes, delta, P,
                                labels0, sizes, theta, False), 100),
        (f"run_replicate (m=200, shifted, n={n})",
         lambda k: k.run_replicate(key, 200, 25, 5000,
                                   labels0, sizes, delta, P,
                                   labels0, sizes, delta, Pstar,
                                   labels0, sizes, True), 1),
    ]
    header = f"{'case':44s}  {'numba':>10s}  {'numpy':>10s}  {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name, call, inner in cases:
        def run_numba():
            for _ in range(inner):
                call(kb)

        def run_numpy():
            for _ in range(inner):
                call(kp)

        tb = bench(run_numba, args.reps) / inner
        tp = bench(run_numpy, args.reps) / inner
        print(f"{name:44s}  {tb * 1e3:8.3f}ms  {tp * 1e3:8.3f}ms  {tp / tb:7.1f}x")

    # spot parity check while we are here
    wa = kb.sample_dense(key, theta, labels0, P)
    wb = kp.sample_dense(key, theta, labels0, P)
    assert np.array_equal(wa, wb), "backend draws diverged"
    print("\ninteger parity verified on the benchmark inputs")


if __name__ == "__main__":
    main()

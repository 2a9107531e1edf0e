#!/usr/bin/env python3
"""Throughput comparison of the numba kernels against the numpy fallback.

Each hot kernel runs on a realistic workload (window lengths and feature
widths taken from a stride-50 Scenario 2 run) under both backends; the
numba pass includes a warm-up call so JIT compilation is not timed.  Run:

    python3 bench/bench_kernels.py [--number N] [--repeat R]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from apustream import _kernels_numpy as np_impl

W = 117  # largest calibrated window seen on the synthetic stream
N_SIGNALS = 16
N_FEATURES = 336  # Scenario 2 width
N_CLASSES = 4


def _ring_workload(rng):
    ring = np.sort(rng.normal(size=(N_SIGNALS, W)), axis=1)
    ring = np.ascontiguousarray(rng.permutation(ring, axis=1))
    sorted_vals = np.sort(ring, axis=1)
    stream = rng.normal(size=(256, N_SIGNALS))
    return ring, sorted_vals, stream


def _bench_push(impl, rng):
    ring, sorted_vals, stream = _ring_workload(rng)

    def job():
        for i in range(stream.shape[0]):
            impl.push_full(ring, sorted_vals, i % W, stream[i])

    return job, stream.shape[0]


def _bench_bank_stats(impl, rng):
    sorted_vals = np.sort(rng.normal(size=(N_SIGNALS, W)), axis=1)

    def job():
        for _ in range(64):
            impl.bank_stats(sorted_vals, W // 4, W // 2, (3 * W) // 4)

    return job, 64


def _bench_welford(impl, rng):
    xs = rng.normal(size=(256, N_FEATURES))
    mean = np.zeros(N_FEATURES)
    m2 = np.zeros(N_FEATURES)

    def job():
        count = 0.0
        for i in range(xs.shape[0]):
            count = impl.welford_vec(count, mean, m2, xs[i], 1.0)

    return job, 256


def _bench_leaf_update(impl, rng):
    xs = rng.normal(size=(256, N_FEATURES))
    ys = rng.integers(0, N_CLASSES, size=256)
    counts = np.zeros(N_CLASSES)
    means = np.zeros((N_FEATURES, N_CLASSES))
    m2s = np.zeros((N_FEATURES, N_CLASSES))
    mins = np.full(N_FEATURES, np.inf)
    maxs = np.full(N_FEATURES, -np.inf)

    def job():
        for i in range(xs.shape[0]):
            impl.leaf_update(counts, means, m2s, mins, maxs, xs[i], int(ys[i]), 3.0)

    return job, 256


def _bench_best_splits(impl, rng):
    counts = rng.uniform(10, 400, size=N_CLASSES)
    means = rng.normal(size=(N_FEATURES, N_CLASSES))
    m2s = rng.uniform(1, 50, size=(N_FEATURES, N_CLASSES))
    mins = means.min(axis=1) - 3.0
    maxs = means.max(axis=1) + 3.0

    def job():
        impl.best_splits(counts, means, m2s, mins, maxs, 10)

    return job, 1


def _bench_hysteresis(impl, rng):
    demand = np.clip(rng.normal(0.02, 0.01, size=86_400), 0.001, None)

    def job():
        impl.simulate_hysteresis(demand, 9.0, 8.0, 10.0, 0.04)

    return job, 86_400


BENCHES = {
    "push_full": _bench_push,
    "bank_stats": _bench_bank_stats,
    "welford_vec": _bench_welford,
    "leaf_update": _bench_leaf_update,
    "best_splits": _bench_best_splits,
    "simulate_hysteresis": _bench_hysteresis,
}


def _rate(impl, maker, number: int, repeat: int) -> float:
    rng = np.random.default_rng(7)
    job, ops = maker(impl, rng)
    job()  # warm-up: triggers JIT on the numba side
    best = min(timeit.repeat(job, number=number, repeat=repeat))
    return ops * number / best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--number", type=int, default=5, help="calls per timing")
    parser.add_argument("--repeat", type=int, default=3, help="timings (min wins)")
    args = parser.parse_args()

    try:
        from apustream import _kernels_numba as nb_impl
    except ImportError as exc:
        print(f"numba backend unavailable ({exc}); nothing to compare")
        return 0

    print(f"{'kernel':<20} {'numpy ops/s':>14} {'numba ops/s':>14} {'speedup':>9}")
    for name, maker in BENCHES.items():
        r_np = _rate(np_impl, maker, args.number, args.repeat)
        r_nb = _rate(nb_impl, maker, args.number, args.repeat)
        print(f"{name:<20} {r_np:>14.0f} {r_nb:>14.0f} {r_nb / r_np:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

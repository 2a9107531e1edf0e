"""Numba-jitted twins of the hot kernels.

Same contracts as ``_kernels_numpy``; loop bodies are written for LLVM.
Elementwise updates are bit-identical to the numpy twins; reductions
(means, stds) agree within floating-point round-off and both meet the
1e-12 relative tolerance the oracle tests demand.  Compilation is cached
on disk, so the first call per process pays the JIT cost once.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_SQRT2 = math.sqrt(2.0)


@njit(cache=True)
def push_full(ring, sorted_vals, head, new):  # pragma: no cover - jitted
    n_signals = ring.shape[0]
    for s in range(n_signals):
        old = ring[s, head]
        x = new[s]
        ring[s, head] = x
        row = sorted_vals[s]
        i = np.searchsorted(row, old, side="left")
        j = np.searchsorted(row, x, side="left")
        if j > i:
            for k in range(i, j - 1):
                row[k] = row[k + 1]
            row[j - 1] = x
        else:
            for k in range(i, j, -1):
                row[k] = row[k - 1]
            row[j] = x


@njit(cache=True)
def bank_stats(sorted_vals, q1i, q2i, q3i):  # pragma: no cover - jitted
    n_signals, w = sorted_vals.shape
    mean = np.empty(n_signals, dtype=np.float64)
    std = np.empty(n_signals, dtype=np.float64)
    q1 = np.empty(n_signals, dtype=np.float64)
    q2 = np.empty(n_signals, dtype=np.float64)
    q3 = np.empty(n_signals, dtype=np.float64)
    buf = np.empty(w, dtype=np.float64)
    for s in range(n_signals):
        # pairwise-halving sums, same addition order as the numpy backend
        for k in range(w):
            buf[k] = sorted_vals[s, k]
        n = w
        while n > 1:
            h = n // 2
            for k in range(h):
                buf[k] = buf[k] + buf[k + h]
            if n % 2 == 1:
                buf[h] = buf[n - 1]
                n = h + 1
            else:
                n = h
        m = buf[0] / w
        for k in range(w):
            d = sorted_vals[s, k] - m
            buf[k] = d * d
        n = w
        while n > 1:
            h = n // 2
            for k in range(h):
                buf[k] = buf[k] + buf[k + h]
            if n % 2 == 1:
                buf[h] = buf[n - 1]
                n = h + 1
            else:
                n = h
        v = buf[0] / w
        if v < 0.0:
            v = 0.0
        mean[s] = m
        std[s] = math.sqrt(v)
        q1[s] = sorted_vals[s, q1i]
        q2[s] = sorted_vals[s, q2i]
        q3[s] = sorted_vals[s, q3i]
    return mean, std, q1, q2, q3


@njit(cache=True)
def welford_vec(count, mean, m2, x, weight):  # pragma: no cover - jitted
    new_count = count + weight
    ratio = weight / new_count
    for f in range(mean.shape[0]):
        delta = x[f] - mean[f]
        mean[f] += delta * ratio
        m2[f] += weight * delta * (x[f] - mean[f])
    return new_count


@njit(cache=True)
def leaf_update(counts, means, m2s, mins, maxs, x, y, weight):  # pragma: no cover
    counts[y] += weight
    c = counts[y]
    ratio = weight / c
    for f in range(means.shape[0]):
        delta = x[f] - means[f, y]
        means[f, y] += delta * ratio
        m2s[f, y] += weight * delta * (x[f] - means[f, y])
        if x[f] < mins[f]:
            mins[f] = x[f]
        if x[f] > maxs[f]:
            maxs[f] = x[f]


@njit(cache=True)
def _entropy(dist, total):  # pragma: no cover - jitted
    if total <= 0.0:
        return 0.0
    h = 0.0
    for i in range(dist.shape[0]):
        v = dist[i]
        if v > 0.0:
            p = v / total
            h -= p * math.log2(p)
    return h


@njit(cache=True)
def best_splits(counts, means, m2s, mins, maxs, n_thresholds):  # pragma: no cover
    n_features, n_classes = means.shape
    gains = np.zeros(n_features, dtype=np.float64)
    thresholds = np.zeros(n_features, dtype=np.float64)

    total = 0.0
    for c in range(n_classes):
        total += counts[c]
    h_parent = _entropy(counts, total)
    if total <= 0.0 or h_parent == 0.0:
        return gains, thresholds

    sigma = np.empty((n_features, n_classes), dtype=np.float64)
    for f in range(n_features):
        for c in range(n_classes):
            if counts[c] > 0.0:
                v = m2s[f, c] / counts[c]
            else:
                v = 0.0
            if v < 1e-9:
                v = 1e-9
            sigma[f, c] = math.sqrt(v)

    left = np.empty(n_classes, dtype=np.float64)
    right = np.empty(n_classes, dtype=np.float64)
    for f in range(n_features):
        lo = mins[f]
        hi = maxs[f]
        if not hi > lo:
            continue
        best_gain = 0.0
        best_t = lo
        for k in range(1, n_thresholds + 1):
            t = lo + (hi - lo) * k / (n_thresholds + 1)
            left_total = 0.0
            for c in range(n_classes):
                if counts[c] > 0.0:
                    z = (t - means[f, c]) / (sigma[f, c] * _SQRT2)
                    left[c] = counts[c] * 0.5 * (1.0 + math.erf(z))
                else:
                    left[c] = 0.0
                left_total += left[c]
            right_total = total - left_total
            for c in range(n_classes):
                right[c] = counts[c] - left[c]
            gain = (
                h_parent
                - (left_total / total) * _entropy(left, left_total)
                - (right_total / total) * _entropy(right, right_total)
            )
            if gain > best_gain:
                best_gain = gain
                best_t = t
        gains[f] = best_gain
        thresholds[f] = best_t
    return gains, thresholds


@njit(cache=True)
def simulate_hysteresis(demand, p0, p_low, p_high, charge_rate):  # pragma: no cover
    n = demand.shape[0]
    pressure = np.empty(n, dtype=np.float64)
    comp_on = np.empty(n, dtype=np.uint8)
    p = p0
    on = p < p_low
    for i in range(n):
        if on:
            p += charge_rate - demand[i]
            if p >= p_high:
                on = False
        else:
            p -= demand[i]
            if p <= p_low:
                on = True
        pressure[i] = p
        comp_on[i] = 1 if on else 0
    return pressure, comp_on

"""Pure-numpy reference implementations of the hot kernels.

These are the semantics of record: the numba twins in ``_kernels_numba``
must produce bit-identical results.  Selection between the two happens in
``kernels`` based on the ``APUSTREAM_NUMBA`` environment flag.
"""

from __future__ import annotations

import math

import numpy as np

_SQRT2 = math.sqrt(2.0)


def push_full(
    ring: np.ndarray,
    sorted_vals: np.ndarray,
    head: int,
    new: np.ndarray,
) -> None:
    """Replace the oldest value of every full ring row and keep rows sorted.

    ``ring`` and ``sorted_vals`` are (signals, w); ``head`` is the slot the
    oldest value occupies in every ring row; ``new`` is one value per signal.
    """
    n_signals = ring.shape[0]
    for s in range(n_signals):
        old = ring[s, head]
        x = new[s]
        ring[s, head] = x
        row = sorted_vals[s]
        i = int(np.searchsorted(row, old, side="left"))
        j = int(np.searchsorted(row, x, side="left"))
        if j > i:
            # new value sits to the right of the removed one: shift left
            row[i : j - 1] = row[i + 1 : j]
            row[j - 1] = x
        else:
            row[j + 1 : i + 1] = row[j:i]
            row[j] = x


def _tree_sum_rows(rows: np.ndarray) -> np.ndarray:
    """Row sums with a fixed pairwise-halving order.

    The addition order is part of the backend contract: the jitted twin
    replays exactly this sequence, so results match bit for bit.  Plain
    ``ndarray.sum`` would not, its pairwise blocking is an implementation
    detail.
    """
    acc = rows.copy()
    n = acc.shape[1]
    while n > 1:
        h = n // 2
        acc[:, :h] += acc[:, h : 2 * h]
        if n % 2:
            acc[:, h] = acc[:, n - 1]
            n = h + 1
        else:
            n = h
    return acc[:, 0].copy()


def bank_stats(
    sorted_vals: np.ndarray, q1i: int, q2i: int, q3i: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Mean, population std and the three nearest-rank quartiles per row."""
    w = sorted_vals.shape[1]
    mean = _tree_sum_rows(sorted_vals) / w
    centered = sorted_vals - mean[:, None]
    std = np.sqrt(np.maximum(_tree_sum_rows(centered * centered) / w, 0.0))
    return (
        mean,
        std,
        sorted_vals[:, q1i].copy(),
        sorted_vals[:, q2i].copy(),
        sorted_vals[:, q3i].copy(),
    )


def welford_vec(
    count: float, mean: np.ndarray, m2: np.ndarray, x: np.ndarray, weight: float
) -> float:
    """Weighted Welford update of per-feature mean/M2 rows, in place."""
    new_count = count + weight
    delta = x - mean
    mean += delta * (weight / new_count)
    m2 += weight * delta * (x - mean)
    return new_count


def leaf_update(
    counts: np.ndarray,
    means: np.ndarray,
    m2s: np.ndarray,
    mins: np.ndarray,
    maxs: np.ndarray,
    x: np.ndarray,
    y: int,
    weight: float,
) -> None:
    """Fold one observation into a leaf's per-class Gaussian summaries."""
    counts[y] += weight
    c = counts[y]
    col_mean = means[:, y]
    delta = x - col_mean
    col_mean += delta * (weight / c)
    m2s[:, y] += weight * delta * (x - col_mean)
    np.minimum(mins, x, out=mins)
    np.maximum(maxs, x, out=maxs)


def _entropy(dist: np.ndarray, total: float) -> float:
    if total <= 0.0:
        return 0.0
    h = 0.0
    for v in dist:
        if v > 0.0:
            p = v / total
            h -= p * math.log2(p)
    return h


def best_splits(
    counts: np.ndarray,
    means: np.ndarray,
    m2s: np.ndarray,
    mins: np.ndarray,
    maxs: np.ndarray,
    n_thresholds: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Best information gain and threshold per candidate feature.

    Class-conditional distributions are summarised as Gaussians; candidate
    thresholds are evenly spaced strictly inside each feature's observed
    [min, max] range.  Gains are measured in bits against the parent class
    entropy.
    """
    n_features, n_classes = means.shape
    gains = np.zeros(n_features, dtype=np.float64)
    thresholds = np.zeros(n_features, dtype=np.float64)

    total = float(counts.sum())
    h_parent = _entropy(counts, total)
    if total <= 0.0 or h_parent == 0.0:
        return gains, thresholds

    sigma = np.sqrt(
        np.maximum(np.divide(m2s, counts, out=np.zeros_like(m2s), where=counts > 0.0), 1e-9)
    )

    left = np.empty(n_classes, dtype=np.float64)
    for f in range(n_features):
        lo, hi = mins[f], maxs[f]
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
            right = counts - left
            right_total = total - left_total
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


def simulate_hysteresis(
    demand: np.ndarray,
    p0: float,
    p_low: float,
    p_high: float,
    charge_rate: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Reservoir pressure under on/off compressor control with hysteresis.

    The compressor switches on when pressure drops below ``p_low`` and off
    above ``p_high``; between switch points pressure integrates
    ``charge_rate`` (when on) minus the instantaneous ``demand``.
    """
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

"""ADWIN adaptive-windowing drift detector.

Keeps an exponential histogram of the recent stream: rows of buckets where
row r holds summaries of 2^r elements, at most ``max_buckets`` buckets per
row.  Every ``clock`` insertions the window is scanned over all bucket
boundaries; if two sub-windows' means differ beyond the cut threshold at
confidence ``delta_drift`` the older sub-window is dropped (drift).  The
same scan at the looser ``delta_warn`` raises a warning without shrinking.

One structure serves both confidences, so a warning is always at least as
early as the drift it precedes.
"""

from __future__ import annotations

import math
from typing import List

STABLE = "stable"
WARNING = "warning"
DRIFT = "drift"

_MIN_SUBWINDOW = 5  # smallest sub-window length considered at a boundary


class Adwin:
    """Drift detector over a numeric (typically 0/1 error) stream."""

    def __init__(
        self,
        delta_drift: float = 0.002,
        delta_warn: float = 0.01,
        max_buckets: int = 5,
        clock: int = 32,
        min_window: int = 10,
    ):
        for name, d in (("delta_drift", delta_drift), ("delta_warn", delta_warn)):
            if not 0.0 < d < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {d}")
        if delta_warn < delta_drift:
            raise ValueError("delta_warn must be >= delta_drift (looser confidence)")
        self.delta_drift = delta_drift
        self.delta_warn = delta_warn
        self.max_buckets = max_buckets
        self.clock = clock
        self.min_window = min_window
        self.n_detections = 0
        self._ticks = 0
        self.reset()

    def reset(self) -> None:
        # rows[r]: list of (total, variance) buckets of 2^r items, oldest first
        self._rows: List[List[tuple[float, float]]] = [[]]
        self.width = 0
        self.total = 0.0
        self._variance_acc = 0.0

    @property
    def mean(self) -> float:
        return self.total / self.width if self.width else 0.0

    @property
    def variance(self) -> float:
        return self._variance_acc / self.width if self.width else 0.0

    def update(self, value: float) -> str:
        """Insert one observation; report ``stable``, ``warning`` or ``drift``."""
        self._insert(float(value))
        self._ticks += 1
        if self.width < self.min_window or self._ticks % self.clock != 0:
            return STABLE
        if self._reduce(self.delta_drift):
            self.n_detections += 1
            return DRIFT
        if self._check_only(self.delta_warn):
            return WARNING
        return STABLE

    # -- exponential histogram ------------------------------------------------

    def _insert(self, value: float) -> None:
        if self.width > 0:
            mean = self.total / self.width
            self._variance_acc += (
                self.width * (value - mean) ** 2 / (self.width + 1)
            )
        self.width += 1
        self.total += value
        self._rows[0].append((value, 0.0))
        self._compress()

    def _compress(self) -> None:
        r = 0
        while r < len(self._rows):
            row = self._rows[r]
            if len(row) <= self.max_buckets:
                break
            t1, v1 = row.pop(0)
            t2, v2 = row.pop(0)
            n = float(1 << r)
            u1, u2 = t1 / n, t2 / n
            merged_var = v1 + v2 + (n * n / (2  * n)) * (u1 - u2) ** 2
            if r + 1 == len(self._rows):
                self._rows.append([])
            # the merged pair is newer than everything already in row r+1
            self._rows[r + 1].append((t1 + t2, merged_var))
            r += 1

    def _drop_oldest_bucket(self) -> None:
        for r in range(len(self._rows) - 1, -1, -1):
            row = self._rows[r]
            if row:
                total, var = row.pop(0)
                n1 = float(1 << r)
                self.width -= int(n1)
                self.total -= total
                if self.width > 0:
                    u1 = total / n1
                    rest_mean = self.total / self.width
                    self._variance_acc -= var + (
                        n1 * self.width / (n1 + self.width)
                    ) * (u1 - rest_mean) ** 2
                    if self._variance_acc < 0.0:
                        self._variance_acc = 0.0
                else:
                    self._variance_acc = 0.0
                return
        raise RuntimeError("drop from an empty window")  # pragma: no cover

    # -- cut detection --------------------------------------------------------

    def _boundaries(self):
        """Prefix (n0, sum0) at every bucket boundary, oldest side first."""
        n0 = 0.0
        s0 = 0.0
        for r in range(len(self._rows) - 1, -1, -1):
            count = float(1 << r)
            for total, _ in self._rows[r]:
                n0 += count
                s0 += total
                yield n0, s0

    def _cut_found(self, delta: float) -> bool:
        n = float(self.width)
        if n < 2 * _MIN_SUBWINDOW:
            return False
        var = self.variance
        log_term = math.log(2.0 * math.log(n) / delta)
        last = None
        for n0, s0 in self._boundaries():
            last_boundary = n0 >= n  # the full window is not a cut point
            if last_boundary:
                break
            n1 = n - n0
            if n0 < _MIN_SUBWINDOW or n1 < _MIN_SUBWINDOW:
                last = (n0, s0)
                continue
            m = 1.0 / (n0 - _MIN_SUBWINDOW + 1) + 1.0 / (n1 - _MIN_SUBWINDOW + 1)
            eps = math.sqrt(2.0 * m * var * log_term) + (2.0 / 3.0) * m * log_term
            mean0 = s0 / n0
            mean1 = (self.total - s0) / n1
            if abs(mean0 - mean1) > eps:
                return True
            last = (n0, s0)
        return False

    def _check_only(self, delta: float) -> bool:
        return self._cut_found(delta)

    def _reduce(self, delta: float) -> bool:
        """Shrink the window while a significant cut exists; True if any cut."""
        detected = False
        while self._cut_found(delta):
            detected = True
            self._drop_oldest_bucket()
        return detected

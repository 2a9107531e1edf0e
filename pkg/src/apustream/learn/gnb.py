"""Incremental Gaussian naive Bayes.

Per class: a prior count plus per-feature running mean and M2 maintained by
the same numerically stable single-pass scheme the selection module uses.
Prediction scores are log-joints, log prior + sum of log Gaussian
densities, with every variance floored at 1e-9 so point-mass features never
produce singular densities.  Ties resolve to the lowest class ordinal.
"""

from __future__ import annotations

import math

import numpy as np

from .. import kernels
from ..errors import NotReadyError
from .base import as_values, check_width

_VAR_FLOOR = 1e-9
_LOG_2PI = math.log(2.0 * math.pi)


class GaussianNaiveBayes:
    def __init__(self, n_classes: int = 4):
        if n_classes < 2:
            raise ValueError(f"need at least 2 classes, got {n_classes}")
        self.n_classes = n_classes
        self.n_features: int | None = None
        self.counts = np.zeros(n_classes, dtype=np.float64)
        self._means: np.ndarray | None = None
        self._m2s: np.ndarray | None = None

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def learn_one(self, x, y: int, weight: float = 1.0) -> None:
        arr = as_values(x)
        if self.n_features is None:
            self.n_features = check_width(None, arr)
            self._means = np.zeros((self.n_classes, self.n_features))
            self._m2s = np.zeros((self.n_classes, self.n_features))
        else:
            check_width(self.n_features, arr)
        y = int(y)
        if not 0 <= y < self.n_classes:
            raise ValueError(f"label {y} outside 0..{self.n_classes - 1}")
        kernels.welford_vec(
            float(self.counts[y]), self._means[y], self._m2s[y], arr, float(weight)
        )
        self.counts[y] += weight

    def class_stats(self, y: int) -> tuple[float, np.ndarray, np.ndarray]:
        """(count, means, variances) for one class, variance floored."""
        if self._means is None:
            raise NotReadyError("no observations yet")
        count = float(self.counts[y])
        if count <= 0.0:
            return 0.0, self._means[y].copy(), np.full(self.n_features, _VAR_FLOOR)
        var = np.maximum(self._m2s[y] / count, _VAR_FLOOR)
        return count, self._means[y].copy(), var

    def predict_one(self, x) -> tuple[int, np.ndarray]:
        total = self.total
        if total <= 0.0 or self.n_features is None:
            # test-then-train asks before the first learn; no evidence yet
            return 0, np.full(self.n_classes, -np.inf, dtype=np.float64)
        arr = as_values(x)
        check_width(self.n_features, arr)

        scores = np.full(self.n_classes, -np.inf, dtype=np.float64)
        for c in range(self.n_classes):
            count = float(self.counts[c])
            if count <= 0.0:
                continue
            var = np.maximum(self._m2s[c] / count, _VAR_FLOOR)
            diff = arr - self._means[c]
            log_like = -0.5 * np.sum(_LOG_2PI + np.log(var) + diff * diff / var)
            scores[c] = math.log(count / total) + log_like
        return int(np.argmax(scores)), scores

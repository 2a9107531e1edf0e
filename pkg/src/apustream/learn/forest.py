"""Adaptive random forest classifier.

An ensemble of Hoeffding trees made diverse two ways: every tree trains on
each sample with a Poisson(lambda) weight (online bootstrap, weight 0 skips
the sample), and every leaf evaluates splits over its own uniform random
feature subset of size m.  Each tree carries an ADWIN detector on its
test-then-train error: a warning starts a background tree on the same
samples; a drift replaces the tree with its background (or a fresh leaf)
and resets its vote weight.

Votes are weighted by per-tree test-then-train accuracy, tracked either as
an exponentially fading ratio (default, decay 0.999) or as a lifetime
ratio (``weight_mode="lifetime"``).  Per-tree RNGs are independent streams
spawned from the forest seed, so the prediction sequence is a pure function
of (seed, hyperparameters, input sequence).
"""

from __future__ import annotations

import numpy as np

from .adwin import Adwin, DRIFT, STABLE
from .base import as_values
from .htree import HoeffdingTreeClassifier

_WEIGHT_MODES = ("fading", "lifetime")


class _Slot:
    """One ensemble member: tree, detector, vote-weight statistics."""

    __slots__ = ("tree", "bg_tree", "detector", "correct_w", "total_w", "rng")

    def __init__(self, tree: HoeffdingTreeClassifier, detector: Adwin,
                 rng: np.random.Generator):
        self.tree = tree
        self.bg_tree: HoeffdingTreeClassifier | None = None
        self.detector = detector
        self.correct_w = 0.0
        self.total_w = 0.0
        self.rng = rng

    def weight(self) -> float:
        return self.correct_w / self.total_w if self.total_w > 0.0 else 0.0


class AdaptiveRandomForestClassifier:
    def __init__(
        self,
        n_models: int = 50,
        subspace_size: int = 50,
        lambda_: float = 50.0,
        n_classes: int = 4,
        seed: int = 1,
        weight_mode: str = "fading",
        weight_decay: float = 0.999,
        delta_drift: float = 0.002,
        delta_warn: float = 0.01,
        tree_params: dict | None = None,
    ):
        if n_models < 1:
            raise ValueError(f"n_models must be >= 1, got {n_models}")
        if lambda_ <= 0:
            raise ValueError(f"lambda must be positive, got {lambda_}")
        if weight_mode not in _WEIGHT_MODES:
            raise ValueError(f"weight_mode must be one of {_WEIGHT_MODES}")
        self.n_models = n_models
        self.subspace_size = subspace_size
        self.lambda_ = float(lambda_)
        self.n_classes = n_classes
        self.seed = seed
        self.weight_mode = weight_mode
        self.weight_decay = weight_decay
        self.delta_drift = delta_drift
        self.delta_warn = delta_warn
        self.tree_params = dict(tree_params or {})
        self.n_drifts = 0
        self.n_warnings = 0
        self.samples_seen = 0

        children = np.random.SeedSequence(seed).spawn(n_models)
        self._slots: list[_Slot] = []
        for child in children:
            rng = np.random.default_rng(child)
            self._slots.append(_Slot(self._new_tree(rng), self._new_detector(), rng))

    def _new_tree(self, rng: np.random.Generator) -> HoeffdingTreeClassifier:
        return HoeffdingTreeClassifier(
            n_classes=self.n_classes,
            subspace_size=self.subspace_size,
            rng=rng,
            **self.tree_params,
        )

    def _new_detector(self) -> Adwin:
        return Adwin(self.delta_drift, self.delta_warn)

    @property
    def trees(self) -> list[HoeffdingTreeClassifier]:
        """Foreground trees, in slot order (background trees do not vote)."""
        return [slot.tree for slot in self._slots]

    def tree_weights(self) -> np.ndarray:
        return np.array([slot.weight() for slot in self._slots])

    def learn_one(self, x, y: int, weight: float = 1.0) -> None:
        arr = as_values(x)
        y = int(y)
        if not 0 <= y < self.n_classes:
            raise ValueError(f"label {y} outside 0..{self.n_classes - 1}")
        self.samples_seen += 1

        for slot in self._slots:
            pred, _ = slot.tree.predict_one(arr)
            correct = 1.0 if pred == y else 0.0

            if self.weight_mode == "fading":
                slot.correct_w = slot.correct_w * self.weight_decay + correct
                slot.total_w = slot.total_w * self.weight_decay + 1.0
            else:
                slot.correct_w += correct
                slot.total_w += 1.0

            status = slot.detector.update(1.0 - correct)
            if status == DRIFT:
                self.n_drifts += 1
                slot.tree = (
                    slot.bg_tree if slot.bg_tree is not None else self._new_tree(slot.rng)
                )
                slot.bg_tree = None
                slot.detector = self._new_detector()
                slot.correct_w = 0.0
                slot.total_w = 0.0
            elif status != STABLE and slot.bg_tree is None:
                self.n_warnings += 1
                slot.bg_tree = self._new_tree(slot.rng)

            k = float(slot.rng.poisson(self.lambda_ * weight))
            if k > 0.0:
                slot.tree.learn_one(arr, y, weight=k)
                if slot.bg_tree is not None:
                    slot.bg_tree.learn_one(arr, y, weight=k)

    def predict_one(self, x) -> tuple[int, np.ndarray]:
        arr = as_values(x)
        scores = np.zeros(self.n_classes, dtype=np.float64)
        for slot in self._slots:
            w = slot.weight()
            if w <= 0.0:
                continue
            pred, _ = slot.tree.predict_one(arr)
            scores[pred] += w
        return int(np.argmax(scores)), scores

"""Hoeffding adaptive tree: per-node drift monitoring with background subtrees.

Every internal node carries an ADWIN detector fed the 0/1 error of the
sample's final leaf prediction (the node's subtree error).  When a node's
detector leaves the stable state, the node starts a background subtree that
trains on the same routed samples and is monitored by its own detector.
The background replaces the node's subtree once its estimated error is
lower - immediately on a drift signal, or as soon as the error gap clears
a confidence bound - and is pruned if it proves significantly worse.

Prediction always uses the foreground tree only.
"""

from __future__ import annotations

import math

import numpy as np

from .adwin import Adwin, DRIFT, STABLE
from .base import as_values
from .htree import HoeffdingTreeClassifier, _Leaf, _Split

_PROMOTE_DELTA = 0.05  # confidence for the continuous error-gap comparison
_MIN_BG_SAMPLES = 64  # background must see this much before judgments


class _AdaptiveSplit(_Split):
    __slots__ = ("detector", "bg", "bg_detector")

    def __init__(self, feature: int, threshold: float, depth: int,
                 delta_drift: float, delta_warn: float):
        super().__init__(feature, threshold, depth)
        self.detector = Adwin(delta_drift, delta_warn)
        self.bg: object | None = None
        self.bg_detector: Adwin | None = None


class HoeffdingAdaptiveTreeClassifier(HoeffdingTreeClassifier):
    def __init__(
        self,
        n_classes: int = 4,
        depth_limit: int = 50,
        tie_threshold: float = 0.5,
        max_size: float = 100.0,
        grace_period: int = 200,
        split_confidence: float = 1e-7,
        n_thresholds: int = 10,
        subspace_size: int | None = None,
        rng: np.random.Generator | None = None,
        delta_drift: float = 0.002,
        delta_warn: float = 0.01,
    ):
        super().__init__(
            n_classes=n_classes,
            depth_limit=depth_limit,
            tie_threshold=tie_threshold,
            max_size=max_size,
            grace_period=grace_period,
            split_confidence=split_confidence,
            n_thresholds=n_thresholds,
            subspace_size=subspace_size,
            rng=rng,
        )
        self.delta_drift = delta_drift
        self.delta_warn = delta_warn
        self.n_replacements = 0
        self.n_prunes = 0

    def _make_split(self, feature: int, threshold: float, depth: int) -> _AdaptiveSplit:
        return _AdaptiveSplit(
            feature, threshold, depth, self.delta_drift, self.delta_warn
        )

    # -- subtree bookkeeping ----------------------------------------------------

    def _discard_subtree(self, node) -> None:
        """Release leaf statistics of a subtree (and its background trees)."""
        stack = [node]
        while stack:
            cur = stack.pop()
            if isinstance(cur, _Leaf):
                self._retire_leaf(cur)
            elif isinstance(cur, _Split):
                stack.append(cur.left)
                stack.append(cur.right)
                if isinstance(cur, _AdaptiveSplit) and cur.bg is not None:
                    stack.append(cur.bg)

    def _learn_into_bg(self, node: _AdaptiveSplit, arr: np.ndarray, y: int,
                       weight: float) -> float:
        """Train the background subtree; returns its 0/1 prediction error."""
        bg_leaf, bg_path = self.subtree_route(node.bg, arr)
        bg_pred = int(np.argmax(self._leaf_prediction(bg_leaf)))
        bg_err = 0.0 if bg_pred == y else 1.0
        self._update_leaf(bg_leaf, arr, y, weight)

        if bg_path:
            parent, went_right = bg_path[-1]

            def attach(split, parent=parent, went_right=went_right):
                if went_right:
                    parent.right = split
                else:
                    parent.left = split

        else:

            def attach(split, node=node):
                node.bg = split

        self._maybe_split(bg_leaf, attach)
        return bg_err

    @staticmethod
    def _error_gap_bound(e_main: float, n_main: float, n_bg: float) -> float:
        spread = max(e_main * (1.0 - e_main), 1e-12)
        m = 1.0 / n_main + 1.0 / n_bg
        return math.sqrt(2.0 * spread * math.log(2.0 / _PROMOTE_DELTA) * m)

    def _replace_subtree(self, node: _AdaptiveSplit, replace) -> None:
        promoted = node.bg
        node.bg = None
        node.bg_detector = None
        self._discard_subtree(node)
        replace(promoted)
        self.n_replacements += 1

    # -- learning -----------------------------------------------------------------

    def learn_one(self, x, y: int, weight: float = 1.0) -> None:
        arr = as_values(x)
        self._ensure_init(arr)
        y = int(y)
        if not 0 <= y < self.n_classes:
            raise ValueError(f"label {y} outside 0..{self.n_classes - 1}")
        self.class_totals[y] += weight

        leaf, path = self._route(arr)
        main_pred = int(np.argmax(self._leaf_prediction(leaf)))
        err = 0.0 if main_pred == y else 1.0

        self._update_leaf(leaf, arr, y, weight)
        if path:
            parent, went_right = path[-1]

            def attach(split, parent=parent, went_right=went_right):
                if went_right:
                    parent.right = split
                else:
                    parent.left = split

        else:

            def attach(split):
                self._root = split

        self._maybe_split(leaf, attach)

        # Drift handling, root-first; a replacement invalidates deeper nodes.
        for i, (node, _) in enumerate(path):
            if not isinstance(node, _AdaptiveSplit):
                continue
            status = node.detector.update(err)
            if node.bg is None:
                if status != STABLE:
                    node.bg = self._new_leaf(node.depth)
                    node.bg_detector = Adwin(self.delta_drift, self.delta_warn)
                continue

            bg_err = self._learn_into_bg(node, arr, y, weight)
            node.bg_detector.update(bg_err)

            n_bg = node.bg_detector.width
            n_main = node.detector.width
            if n_bg < _MIN_BG_SAMPLES or n_main < _MIN_BG_SAMPLES:
                continue
            e_main = node.detector.mean
            e_bg = node.bg_detector.mean

            if i == 0:
                def replace(subtree):
                    self._root = subtree
            else:
                parent, went_right = path[i - 1]

                def replace(subtree, parent=parent, went_right=went_right):
                    if went_right:
                        parent.right = subtree
                    else:
                        parent.left = subtree

            bound = self._error_gap_bound(e_main, n_main, n_bg)
            if (status == DRIFT and e_bg <= e_main) or (e_main - e_bg > bound):
                self._replace_subtree(node, replace)
                break
            if e_bg - e_main > bound:
                self._discard_subtree(node.bg)
                node.bg = None
                node.bg_detector = None
                self.n_prunes += 1

    # -- introspection ---------------------------------------------------------

    @property
    def n_background(self) -> int:
        return sum(
            1
            for n in self.iter_nodes()
            if isinstance(n, _AdaptiveSplit) and n.bg is not None
        )

"""Incremental Hoeffding tree classifier.

Leaves accumulate per-class Gaussian summaries (count, mean, M2) plus the
observed min/max per candidate feature.  Every ``grace_period`` of
accumulated sample weight (so boosted samples mature a leaf faster) a
leaf evaluates candidate binary splits: per feature, the best of
``n_thresholds`` evenly spaced thresholds by information gain; the leaf
splits when the gain gap between the best and second-best feature exceeds
the Hoeffding bound, or when the bound has shrunk below the tie threshold.

Memory is bounded: ``max_size`` (units of 10^6 bytes) caps the split
statistics held by active leaves; when exceeded, the least promising
leaves are deactivated (they keep predicting from class counts but stop
growing).  An optional per-leaf random feature subspace of size
``subspace_size`` supports random-forest base trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from .base import as_values, check_width

_LEAF_OVERHEAD_BYTES = 128


def hoeffding_bound(value_range: float, delta: float, n: float) -> float:
    """eps = sqrt(R^2 * ln(1/delta) / (2n))."""
    if value_range <= 0.0:
        raise ValueError(f"value range must be positive, got {value_range}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if n < 1:
        raise ValueError(f"need n >= 1 observations, got {n}")
    return math.sqrt(value_range * value_range * math.log(1.0 / delta) / (2.0 * n))


@dataclass(frozen=True)
class SplitEvent:
    """Instrumentation record captured at the moment a leaf splits."""

    depth: int
    feature: int
    threshold: float
    gain_best: float
    gain_second: float
    epsilon: float
    tie: bool
    weight_seen: float


class _Leaf:
    __slots__ = (
        "depth",
        "cand",
        "active",
        "counts",
        "means",
        "m2s",
        "mins",
        "maxs",
        "n_samples",
        "weight",
        "last_eval",
    )

    def __init__(self, depth: int, n_classes: int, cand: np.ndarray | None):
        self.depth = depth
        self.cand = cand
        self.active = True
        self.counts = np.zeros(n_classes, dtype=np.float64)
        n_cand = 0 if cand is None else len(cand)
        self.means: np.ndarray | None = None
        self.m2s: np.ndarray | None = None
        self.mins: np.ndarray | None = None
        self.maxs: np.ndarray | None = None
        self.n_samples = 0
        self.weight = 0.0
        self.last_eval = 0

    def alloc(self, n_cand: int, n_classes: int) -> None:
        self.means = np.zeros((n_cand, n_classes), dtype=np.float64)
        self.m2s = np.zeros((n_cand, n_classes), dtype=np.float64)
        self.mins = np.full(n_cand, np.inf, dtype=np.float64)
        self.maxs = np.full(n_cand, -np.inf, dtype=np.float64)

    def deactivate(self) -> None:
        self.active = False
        self.means = self.m2s = self.mins = self.maxs = None

    def promise(self) -> float:
        """How much error could still be removed by splitting this leaf."""
        return self.weight - (self.counts.max() if self.weight > 0 else 0.0)


class _Split:
    __slots__ = ("feature", "threshold", "left", "right", "depth")

    def __init__(self, feature: int, threshold: float, depth: int):
        self.feature = feature
        self.threshold = threshold
        self.depth = depth
        self.left: object | None = None
        self.right: object | None = None


class HoeffdingTreeClassifier:
    """Single incremental decision tree; anytime predict, bounded memory."""

    def __init__(
        self,
        n_classes: int = 4,
        depth_limit: int = 50,
        tie_threshold: float = 0.5,
        max_size: float = 50.0,
        grace_period: int = 200,
        split_confidence: float = 1e-7,
        n_thresholds: int = 10,
        subspace_size: int | None = None,
        rng: np.random.Generator | None = None,
    ):
        if depth_limit < 1:
            raise ValueError(f"depth_limit must be >= 1, got {depth_limit}")
        if grace_period < 1:
            raise ValueError(f"grace_period must be >= 1, got {grace_period}")
        if max_size <= 0:
            raise ValueError(f"max_size must be positive, got {max_size}")
        if subspace_size is not None and subspace_size < 1:
            raise ValueError(f"subspace_size must be >= 1, got {subspace_size}")
        self.n_classes = n_classes
        self.depth_limit = depth_limit
        self.tie_threshold = tie_threshold
        self.max_size = max_size
        self.grace_period = grace_period
        self.split_confidence = split_confidence
        self.n_thresholds = n_thresholds
        self.subspace_size = subspace_size
        self.rng = rng if rng is not None else np.random.default_rng(0)

        self.n_features: int | None = None
        self.class_totals = np.zeros(n_classes, dtype=np.float64)
        self.split_events: list[SplitEvent] = []
        self.n_splits = 0
        self.n_deactivated = 0
        self._range = math.log2(n_classes)
        self._root: _Leaf | _Split | None = None
        self._active_leaves: set[_Leaf] = set()
        self._active_bytes = 0

    # -- structure ------------------------------------------------------------

    def _leaf_bytes(self, n_cand: int) -> int:
        return (
            8 * self.n_classes
            + 16 * n_cand * self.n_classes
            + 16 * n_cand
            + _LEAF_OVERHEAD_BYTES
        )

    def _cand_width(self) -> int:
        if self.subspace_size is None:
            return self.n_features
        return min(self.subspace_size, self.n_features)

    def _new_leaf(self, depth: int) -> _Leaf:
        if self.subspace_size is None:
            cand = None
            n_cand = self.n_features
        else:
            n_cand = self._cand_width()
            cand = np.sort(self.rng.choice(self.n_features, size=n_cand, replace=False))
        leaf = _Leaf(depth, self.n_classes, cand)
        leaf.alloc(n_cand, self.n_classes)
        self._active_leaves.add(leaf)
        self._active_bytes += self._leaf_bytes(n_cand)
        return leaf

    def _make_split(self, feature: int, threshold: float, depth: int) -> _Split:
        return _Split(feature, threshold, depth)

    def _retire_leaf(self, leaf: _Leaf) -> None:
        if leaf in self._active_leaves:
            self._active_leaves.discard(leaf)
            n_cand = self._cand_width() if leaf.cand is None else len(leaf.cand)
            self._active_bytes -= self._leaf_bytes(n_cand)

    def _enforce_budget(self) -> None:
        budget = self.max_size * 1e6
        while self._active_bytes > budget and len(self._active_leaves) > 1:
            victim = min(
                self._active_leaves, key=lambda lf: (lf.promise(), lf.depth, id(lf))
            )
            self._retire_leaf(victim)
            victim.deactivate()
            self.n_deactivated += 1

    @property
    def memory_bytes(self) -> int:
        return self._active_bytes

    # -- routing --------------------------------------------------------------

    def _route(self, arr: np.ndarray):
        """Follow split tests to a leaf; returns (leaf, [(split, went_right)])."""
        node = self._root
        path: list[tuple[_Split, bool]] = []
        while isinstance(node, _Split):
            went_right = arr[node.feature] > node.threshold
            path.append((node, went_right))
            node = node.right if went_right else node.left
        return node, path

    @staticmethod
    def subtree_route(node, arr: np.ndarray):
        """Route within an arbitrary subtree (used by adaptive variants)."""
        path: list[tuple[_Split, bool]] = []
        while isinstance(node, _Split):
            went_right = arr[node.feature] > node.threshold
            path.append((node, went_right))
            node = node.right if went_right else node.left
        return node, path

    def decision_path(self, x) -> list[tuple[int, float, bool]]:
        """(feature, threshold, went_right) along the prediction routing."""
        if self._root is None or self.n_features is None:
            return []
        arr = as_values(x)
        check_width(self.n_features, arr)
        _, path = self._route(arr)
        return [(n.feature, n.threshold, right) for n, right in path]

    # -- learning -------------------------------------------------------------

    def _ensure_init(self, arr: np.ndarray) -> None:
        if self.n_features is None:
            self.n_features = check_width(None, arr)
            self._root = self._new_leaf(0)
        else:
            check_width(self.n_features, arr)

    def _update_leaf(self, leaf: _Leaf, arr: np.ndarray, y: int, weight: float) -> None:
        leaf.n_samples += 1
        leaf.weight += weight
        if leaf.active:
            x_cand = arr if leaf.cand is None else arr[leaf.cand]
            kernels.leaf_update(
                leaf.counts, leaf.means, leaf.m2s, leaf.mins, leaf.maxs,
                x_cand, y, float(weight),
            )
        else:
            leaf.counts[y] += weight

    def _leaf_prediction(self, leaf: _Leaf | None) -> np.ndarray:
        if leaf is not None and leaf.counts.sum() > 0.0:
            return leaf.counts.copy()
        return self.class_totals.copy()

    def _maybe_split(self, leaf: _Leaf, attach) -> bool:
        """Evaluate a split for ``leaf``; ``attach(new_split)`` mounts it."""
        if (
            not leaf.active
            or leaf.depth >= self.depth_limit
            or leaf.weight - leaf.last_eval < self.grace_period
        ):
            return False
        leaf.last_eval = leaf.weight
        if np.count_nonzero(leaf.counts) < 2:
            return False

        gains, thresholds = kernels.best_splits(
            leaf.counts, leaf.means, leaf.m2s, leaf.mins, leaf.maxs, self.n_thresholds
        )
        i1 = int(np.argmax(gains))
        g1 = float(gains[i1])
        if g1 <= 0.0:
            return False
        if gains.shape[0] > 1:
            rest = np.delete(gains, i1)
            g2 = float(rest.max())
        else:
            g2 = 0.0
        eps = hoeffding_bound(self._range, self.split_confidence, leaf.weight)
        tie = eps < self.tie_threshold
        if not (g1 - g2 > eps or tie):
            return False

        feature = i1 if leaf.cand is None else int(leaf.cand[i1])
        split = self._make_split(feature, float(thresholds[i1]), leaf.depth)
        split.left = self._new_leaf(leaf.depth + 1)
        split.right = self._new_leaf(leaf.depth + 1)
        self._retire_leaf(leaf)
        attach(split)
        self.n_splits += 1
        self.split_events.append(
            SplitEvent(
                depth=leaf.depth,
                feature=feature,
                threshold=float(thresholds[i1]),
                gain_best=g1,
                gain_second=g2,
                epsilon=eps,
                tie=tie,
                weight_seen=leaf.weight,
            )
        )
        self._enforce_budget()
        return True

    def learn_one(self, x, y: int, weight: float = 1.0) -> None:
        arr = as_values(x)
        self._ensure_init(arr)
        y = int(y)  # IntEnum labels would break typed kernel indexing
        if not 0 <= y < self.n_classes:
            raise ValueError(f"label {y} outside 0..{self.n_classes - 1}")
        self.class_totals[y] += weight

        leaf, path = self._route(arr)
        self._update_leaf(leaf, arr, y, weight)

        if path:
            parent, went_right = path[-1]

            def attach(split: _Split, parent=parent, went_right=went_right):
                if went_right:
                    parent.right = split
                else:
                    parent.left = split

        else:

            def attach(split: _Split):
                self._root = split

        self._maybe_split(leaf, attach)

    # -- prediction -----------------------------------------------------------

    def predict_one(self, x) -> tuple[int, np.ndarray]:
        if self._root is None or self.n_features is None:
            return 0, np.zeros(self.n_classes, dtype=np.float64)
        arr = as_values(x)
        check_width(self.n_features, arr)
        leaf, _ = self._route(arr)
        scores = self._leaf_prediction(leaf)
        return int(np.argmax(scores)), scores

    # -- introspection --------------------------------------------------------

    @property
    def root(self):
        return self._root

    def iter_nodes(self):
        stack = [self._root] if self._root is not None else []
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, _Split):
                stack.append(node.left)
                stack.append(node.right)

    @property
    def n_nodes(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self.iter_nodes() if isinstance(n, _Leaf))

    @property
    def height(self) -> int:
        return max(
            (n.depth for n in self.iter_nodes() if isinstance(n, _Leaf)), default=0
        )

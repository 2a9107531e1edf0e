"""Prequential evaluation, classification metrics, and grid search.

Protocol: for every labeled sample the model predicts first, then trains on
the same sample (test-then-train).  The confusion matrix, macro/micro
F-measure and wall-clock throughput accumulate over the run; per-sample
records stream out for reporting and replay.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import MetricsError
from .schema import CLASS_LABELS, ClassLabel

N_CLASSES = len(CLASS_LABELS)


@dataclass
class ConfusionMatrix:
    """Counts indexed (true class, predicted class) in class-ordinal order."""

    counts: np.ndarray = field(
        default_factory=lambda: np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    )

    def add(self, true: int, pred: int) -> None:
        self.counts[true, pred] += 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        total = self.total
        if total == 0:
            raise MetricsError("no samples")
        return float(np.trace(self.counts)) / total

    def copy(self) -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts.copy())


def compute_fmeasure(cm: ConfusionMatrix) -> tuple[float, float, tuple[float, ...]]:
    """(macro F, micro F, per-class F); classes with P+R = 0 score 0."""
    counts = cm.counts
    total = counts.sum()
    if total == 0:
        raise ValueError("confusion matrix is empty")
    per_class: list[float] = []
    for c in range(counts.shape[0]):
        tp = float(counts[c, c])
        fp = float(counts[:, c].sum() - tp)
        fn = float(counts[c, :].sum() - tp)
        denom = 2 * tp + fp + fn
        per_class.append(2 * tp / denom if denom > 0 else 0.0)
    macro = float(np.mean(per_class))
    # micro: pooled TP equals the diagonal; FP and FN pools are equal, so
    # micro F collapses to accuracy for single-label classification.
    micro = float(np.trace(counts)) / float(total)
    return macro, micro, tuple(per_class)


@dataclass(frozen=True)
class PredictionRecord:
    seq_id: int
    timestamp: int
    true: ClassLabel
    predicted: ClassLabel
    scores: tuple[float, ...]
    latency_s: float

    def __post_init__(self) -> None:
        if self.latency_s < 0:
            raise ValueError("latency cannot be negative")


@dataclass(frozen=True)
class PrequentialMetrics:
    accuracy: float
    macro_f: float
    micro_f: float
    per_class_f: tuple[float, ...]
    n_samples: int
    wall_seconds: float
    samples_per_second: float
    confusion: ConfusionMatrix

    def table_row(self, name: str = "model") -> str:
        cells = [
            name,
            f"{self.accuracy * 100:7.2f}",
            f"{self.macro_f * 100:7.2f}",
            *(f"{f * 100:7.2f}" for f in self.per_class_f),
            f"{self.wall_seconds:9.2f}",
        ]
        return " | ".join(cells)


def prequential_run(
    model,
    stream: Iterable[tuple[object, ClassLabel | int]],
    on_record: Callable[[PredictionRecord, object], None] | None = None,
    on_predict: Callable[[object, int], None] | None = None,
) -> tuple[PrequentialMetrics, list[PredictionRecord]]:
    """Test-then-train over ``(feature vector, label)`` pairs.

    ``on_predict`` fires between the prediction and the train step, while
    the model still holds the exact state that produced the prediction
    (decision-path explanations hook in here).  ``on_record`` receives each
    record plus the feature vector right after the model trained on it.
    Hook time is excluded from latency and throughput.  Returns the metrics
    and the full record list.
    """
    cm = ConfusionMatrix()
    records: list[PredictionRecord] = []
    wall = 0.0
    for fv, label in stream:
        y = int(label)
        t0 = time.perf_counter()
        pred, scores = model.predict_one(fv)
        t1 = time.perf_counter()
        if on_predict is not None:
            on_predict(fv, pred)
        t2 = time.perf_counter()
        model.learn_one(fv, y)
        dt = (t1 - t0) + (time.perf_counter() - t2)
        wall += dt
        cm.add(y, pred)
        record = PredictionRecord(
            seq_id=getattr(fv, "seq_id", len(records)),
            timestamp=getattr(fv, "timestamp", 0),
            true=ClassLabel(y),
            predicted=ClassLabel(pred),
            scores=tuple(float(s) for s in scores),
            latency_s=dt,
        )
        records.append(record)
        if on_record is not None:
            on_record(record, fv)
    if not records:
        raise MetricsError("no samples")
    macro, micro, per_class = compute_fmeasure(cm)
    return (
        PrequentialMetrics(
            accuracy=cm.accuracy(),
            macro_f=macro,
            micro_f=micro,
            per_class_f=per_class,
            n_samples=len(records),
            wall_seconds=wall,
            samples_per_second=len(records) / wall if wall > 0 else float("inf"),
            confusion=cm,
        ),
        records,
    )


def metrics_from_records(records: Sequence[PredictionRecord]) -> PrequentialMetrics:
    """Recompute metrics from records alone (replay reproducibility)."""
    if not records:
        raise MetricsError("no samples")
    cm = ConfusionMatrix()
    for r in records:
        cm.add(int(r.true), int(r.predicted))
    macro, micro, per_class = compute_fmeasure(cm)
    wall = sum(r.latency_s for r in records)
    return PrequentialMetrics(
        accuracy=cm.accuracy(),
        macro_f=macro,
        micro_f=micro,
        per_class_f=per_class,
        n_samples=len(records),
        wall_seconds=wall,
        samples_per_second=len(records) / wall if wall > 0 else float("inf"),
        confusion=cm,
    )


# -- grid search ----------------------------------------------------------------

HTC_GRID: dict[str, list] = {
    "depth_limit": [50, 100, 200],
    "tie_threshold": [0.5, 0.05, 0.005],
    "max_size": [50, 100, 200],
}
HATC_GRID: dict[str, list] = {
    "depth_limit": [50, 100, 200],
    "tie_threshold": [0.5, 0.05, 0.005],
    "max_size": [50, 100, 200],
}
ARFC_GRID: dict[str, list] = {
    "n_models": [50, 100, 200],
    "subspace_size": [50, 100, 200],
    "lambda_": [50, 100, 200],
}
GRIDS: dict[str, dict[str, list]] = {
    "htc": HTC_GRID,
    "hatc": HATC_GRID,
    "arfc": ARFC_GRID,
    "gnb": {},
}


@dataclass(frozen=True)
class GridPoint:
    params: dict
    metrics: PrequentialMetrics


@dataclass(frozen=True)
class GridResult:
    best: GridPoint
    leaderboard: tuple[GridPoint, ...]  # ranked best-first


def expand_grid(grid: dict[str, list]) -> list[dict]:
    if not grid:
        raise ValueError("empty hyperparameter grid")
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*grid.values())]


def grid_search(
    model_factory: Callable[..., object],
    grid: dict[str, list],
    tuning_stream: Sequence[tuple[object, ClassLabel | int]],
) -> GridResult:
    """Evaluate every grid point on an identical replay of the tuning stream.

    Ranked by macro F-measure (descending), ties broken by wall-clock time
    (ascending), then by parameter order for stability.
    """
    points = expand_grid(grid)
    samples = list(tuning_stream)
    results: list[GridPoint] = []
    for i, params in enumerate(points):
        model = model_factory(**params)
        metrics, _ = prequential_run(model, samples)
        results.append(GridPoint(params=params, metrics=metrics))
    ranked = sorted(
        enumerate(results),
        key=lambda pair: (-pair[1].metrics.macro_f, pair[1].metrics.wall_seconds, pair[0]),
    )
    ordered = tuple(point for _, point in ranked)
    return GridResult(best=ordered[0], leaderboard=ordered)

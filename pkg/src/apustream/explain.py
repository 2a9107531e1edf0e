"""Explanations: decision-path relevance, model summaries, anomaly durations,
and natural-language rendering.

Relevance follows the decision paths of the tree models: walking root to
leaf, a feature scores one point each time its test is answered on the
greater-than side (right branch).  Frequencies aggregate across a
configurable number of forest members and, over a run, into a model-level
summary of the most used sensors, metrics and window sizes.

Anomaly durations track, per sensor, how long (consecutive seconds) the raw
signal has deviated from its own sliding-window statistics: a *pattern*
anomaly when |raw - avg| > 3 std, a *value* anomaly when the raw value
leaves [q1 - 3 IQR, q3 + 3 IQR], all over the mean-gap window.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    IntegrityError,
    NotReadyError,
    TemplateError,
    UnsupportedModelError,
)
from .features import FeatureName, FeatureSchema, FeatureVector
from .learn.forest import AdaptiveRandomForestClassifier
from .learn.gnb import GaussianNaiveBayes
from .learn.htree import HoeffdingTreeClassifier
from .schema import ClassLabel

TOP_K = 5
PATTERN_REPORT_FLOOR_S = 600.0  # patterns worth reporting: > 10 minutes
VALUE_REPORT_FLOOR_S = 120.0  # values worth reporting: > 2 minutes

METRIC_PHRASES = {
    "fft": "FFT",
    "avg": "average",
    "std": "standard deviation",
    "q1": "first quartile",
    "q2": "median",
    "q3": "third quartile",
    "raw": "raw value",
}
WINDOW_PHRASES = {
    "W_avg": "AVG-size",
    "W_q1": "Q1-size",
    "W_q2": "Q2-size",
    "W_q3": "Q3-size",
}
PREDICTION_PHRASES = {
    ClassLabel.NonFailure: "no failure is developing",
    ClassLabel.OilLeakCompressor: "there is an oil leak in the compressor",
    ClassLabel.AirLeakDryer: "there is an air leak in the air dryer",
    ClassLabel.AirLeakClient: "there is an air leak in a client system",
}


@dataclass(frozen=True)
class PathFeature:
    feature: FeatureName
    frequency: int

    def __post_init__(self) -> None:
        if self.frequency < 1:
            raise ValueError("path feature frequency must be >= 1")

    def phrase(self) -> str:
        metric = METRIC_PHRASES[self.feature.metric]
        if self.feature.window == "none":
            return f"{metric} of {self.feature.sensor}"
        window = WINDOW_PHRASES[self.feature.window]
        return f"{metric} of {self.feature.sensor} from {window} sliding window"


def _rank(counter: Counter) -> list:
    """Order by descending frequency, ties by name; a stable total order."""
    return sorted(counter.items(), key=lambda kv: (-kv[1], str(kv[0])))


def decision_path_features(tree: HoeffdingTreeClassifier, fv: FeatureVector) -> list[PathFeature]:
    """Features gating right-branch traversals on the routing path of ``fv``."""
    schema = fv.schema
    counts: Counter[FeatureName] = Counter()
    for feature_idx, _, went_right in tree.decision_path(fv):
        if feature_idx < 0 or feature_idx >= len(schema.names):
            raise IntegrityError(
                f"decision path references feature index {feature_idx} "
                f"outside the {len(schema.names)}-entry schema"
            )
        if went_right:
            counts[schema.names[feature_idx]] += 1
    return [
        PathFeature(feature=name, frequency=freq)
        for name, freq in sorted(
            counts.items(), key=lambda kv: (-kv[1], kv[0].serialize())
        )
    ]


def top_relevant_features(
    model, fv: FeatureVector, n_estimators: int | None = None, k: int = TOP_K
) -> list[PathFeature]:
    """Merge path features over the model's trees; top-``k`` by frequency."""
    if isinstance(model, GaussianNaiveBayes):
        raise UnsupportedModelError(
            "decision-path explanations need a tree model; Gaussian NB has no paths"
        )
    if isinstance(model, AdaptiveRandomForestClassifier):
        trees = model.trees
        if n_estimators is not None:
            trees = trees[: max(0, n_estimators)]
    elif isinstance(model, HoeffdingTreeClassifier):
        trees = [model]
    else:
        raise UnsupportedModelError(f"unsupported model type: {type(model).__name__}")

    merged: Counter[FeatureName] = Counter()
    for tree in trees:
        for pf in decision_path_features(tree, fv):
            merged[pf.feature] += pf.frequency
    ranked = sorted(merged.items(), key=lambda kv: (-kv[1], kv[0].serialize()))
    return [PathFeature(feature=n, frequency=f) for n, f in ranked[:k]]


@dataclass(frozen=True)
class ModelSummary:
    top_windows: tuple[tuple[str, int], ...]
    top_metrics: tuple[tuple[str, int], ...]
    top_sensors: tuple[tuple[str, int], ...]
    windows_equal: bool

    def as_dict(self) -> dict:
        return {
            "top_windows": [list(x) for x in self.top_windows],
            "top_metrics": [list(x) for x in self.top_metrics],
            "top_sensors": [list(x) for x in self.top_sensors],
            "windows_equal": self.windows_equal,
        }


class ExplanationAccumulator:
    """Run-level tally of path-feature frequencies (Algorithm 2 style)."""

    def __init__(self) -> None:
        self._features: Counter[FeatureName] = Counter()

    def add(self, path_features: Sequence[PathFeature]) -> None:
        for pf in path_features:
            self._features[pf.feature] += pf.frequency

    @property
    def total(self) -> int:
        return sum(self._features.values())

    def model_summary(self, k: int = TOP_K) -> ModelSummary:
        if not self._features:
            raise NotReadyError("no path features accumulated yet")
        windows: Counter[str] = Counter()
        metrics: Counter[str] = Counter()
        sensors: Counter[str] = Counter()
        for name, freq in self._features.items():
            try:
                name.validate()
            except ValueError as exc:
                raise IntegrityError(f"unparseable feature name in tally: {exc}") from exc
            if name.window != "none":
                windows[name.window] += freq
            metrics[name.metric] += freq
            sensors[name.sensor] += freq

        slot_counts = [windows.get(w, 0) for w in WINDOW_PHRASES]
        windows_equal = all(c > 0 for c in slot_counts) and len(set(slot_counts)) == 1
        return ModelSummary(
            top_windows=tuple(_rank(windows)[:k]),
            top_metrics=tuple(_rank(metrics)[:k]),
            top_sensors=tuple(_rank(sensors)[:k]),
            windows_equal=windows_equal,
        )


@dataclass(frozen=True)
class AnomalyReport:
    """Per-sensor ongoing anomaly durations in seconds, at one sample tick."""

    durations: dict[str, tuple[float, float]]  # sensor -> (pattern_s, value_s)

    def over_thresholds(
        self,
        pattern_floor_s: float = PATTERN_REPORT_FLOOR_S,
        value_floor_s: float = VALUE_REPORT_FLOOR_S,
    ) -> list[tuple[str, str, float]]:
        """(sensor, kind, seconds) entries above the reporting floors."""
        out: list[tuple[str, str, float]] = []
        for sensor in sorted(self.durations):
            pattern_s, value_s = self.durations[sensor]
            if pattern_s > pattern_floor_s:
                out.append((sensor, "pattern", pattern_s))
            if value_s > value_floor_s:
                out.append((sensor, "value", value_s))
        return out


class AnomalyTracker:
    """Streaming anomaly-duration state over the full (unprojected) schema."""

    def __init__(self, schema: FeatureSchema, std_floor: float = 1e-9):
        self.schema = schema
        self.std_floor = std_floor
        self.sensors = schema.signals
        self._raw_pos = schema.positions(
            [FeatureName(s, "raw", "none") for s in self.sensors]
        )
        self._avg_pos = schema.positions(
            [FeatureName(s, "avg", "W_avg") for s in self.sensors]
        )
        self._std_pos = schema.positions(
            [FeatureName(s, "std", "W_avg") for s in self.sensors]
        )
        self._q1_pos = schema.positions(
            [FeatureName(s, "q1", "W_avg") for s in self.sensors]
        )
        self._q3_pos = schema.positions(
            [FeatureName(s, "q3", "W_avg") for s in self.sensors]
        )
        n = len(self.sensors)
        self._pattern_start = np.full(n, -1, dtype=np.int64)
        self._value_start = np.full(n, -1, dtype=np.int64)
        self._started_ts: int | None = None
        self._last_ts: int | None = None

    def update(self, fv: FeatureVector) -> AnomalyReport:
        v = fv.values
        ts = fv.timestamp
        if self._started_ts is None:
            self._started_ts = ts
        self._last_ts = ts

        raw = v[self._raw_pos]
        avg = v[self._avg_pos]
        std = np.maximum(v[self._std_pos], self.std_floor)
        q1 = v[self._q1_pos]
        q3 = v[self._q3_pos]
        iqr = q3 - q1

        pattern = np.abs(raw - avg) > 3.0 * std
        value = (raw < q1 - 3.0 * iqr) | (raw > q3 + 3.0 * iqr)

        self._pattern_start[~pattern] = -1
        self._value_start[~value] = -1
        fresh_p = pattern & (self._pattern_start < 0)
        fresh_v = value & (self._value_start < 0)
        self._pattern_start[fresh_p] = ts
        self._value_start[fresh_v] = ts

        durations: dict[str, tuple[float, float]] = {}
        for i, sensor in enumerate(self.sensors):
            p = float(ts - self._pattern_start[i] + 1) if pattern[i] else 0.0
            w = float(ts - self._value_start[i] + 1) if value[i] else 0.0
            durations[sensor] = (p, w)
        return AnomalyReport(durations=durations)

    @property
    def stream_age_s(self) -> float:
        if self._started_ts is None or self._last_ts is None:
            return 0.0
        return float(self._last_ts - self._started_ts + 1)


@dataclass(frozen=True)
class Explanation:
    seq_id: int
    predicted: ClassLabel
    top_features: tuple[PathFeature, ...]
    summary: ModelSummary
    anomalies: AnomalyReport
    text: str


DEFAULT_TEMPLATE = """For sample {seq_id}, the five most representative features are:
{top_features}

The most representative parameters for the ML model are:
    Sliding windows: {summary_windows}
    Signal Pre-Processing Technique: {summary_metrics}
    Sensors: {summary_sensors}

{anomaly_section}
then the prediction is that
    {prediction_phrase}.
"""


def _render_top_features(top_features: Sequence[PathFeature]) -> str:
    if not top_features:
        return "    (no greater-than branch points on the decision path)"
    lines = []
    for i, pf in enumerate(top_features, start=1):
        phrase = pf.phrase()
        lines.append(f"    {i}. {phrase[0].upper() + phrase[1:]}.")
    return "\n".join(lines)


def _render_summary_windows(summary: ModelSummary) -> str:
    if summary.windows_equal:
        return "four sliding windows contribute equally."
    if not summary.top_windows:
        return "none traversed."
    parts = [f"{WINDOW_PHRASES[w]} ({c})" for w, c in summary.top_windows]
    return ", ".join(parts) + "."


def _render_names(pairs: Sequence[tuple[str, int]], phrases: dict | None = None) -> str:
    if not pairs:
        return "none traversed."
    names = [phrases[n] if phrases else n for n, _ in pairs]
    return ", ".join(names) + "."


def _render_anomaly_section(
    anomalies: AnomalyReport,
    pattern_floor_s: float,
    value_floor_s: float,
) -> str:
    entries = anomalies.over_thresholds(pattern_floor_s, value_floor_s)
    patterns = [(s, sec) for s, kind, sec in entries if kind == "pattern"]
    values = [(s, sec) for s, kind, sec in entries if kind == "value"]
    if not patterns and not values:
        return "Given no sensors with abnormal behavior,"
    lines = ["Given sensors with", "    abnormal patterns:"]
    if patterns:
        lines += [
            f"    -  {s} sensor ({int(sec // 60)} minutes with significant change)"
            for s, sec in patterns
        ]
    else:
        lines.append("    -  none")
    lines.append("and anomalous values:")
    if values:
        lines += [
            f"    -  {s} sensor ({int(sec // 60)} minutes outside the expected range)"
            for s, sec in values
        ]
    else:
        lines.append("    -  none")
    return "\n".join(lines)


def render_explanation(
    seq_id: int,
    predicted: ClassLabel,
    top_features: Sequence[PathFeature],
    summary: ModelSummary,
    anomalies: AnomalyReport,
    template: str = DEFAULT_TEMPLATE,
    pattern_floor_s: float = PATTERN_REPORT_FLOOR_S,
    value_floor_s: float = VALUE_REPORT_FLOOR_S,
) -> str:
    """Fill the explanation template; deterministic for identical inputs."""
    fields = {
        "seq_id": seq_id,
        "predicted": predicted.name,
        "top_features": _render_top_features(top_features),
        "summary_windows": _render_summary_windows(summary),
        "summary_metrics": _render_names(summary.top_metrics, METRIC_PHRASES),
        "summary_sensors": _render_names(summary.top_sensors),
        "anomaly_section": _render_anomaly_section(
            anomalies, pattern_floor_s, value_floor_s
        ),
        "prediction_phrase": PREDICTION_PHRASES[predicted],
    }
    try:
        return template.format_map(fields)
    except (KeyError, IndexError) as exc:
        raise TemplateError(f"template placeholder unmatched: {exc}") from exc


def build_explanation(
    model,
    fv: FeatureVector,
    predicted: ClassLabel,
    accumulator: ExplanationAccumulator,
    tracker_report: AnomalyReport,
    n_estimators: int | None = None,
    template: str = DEFAULT_TEMPLATE,
    pattern_floor_s: float = PATTERN_REPORT_FLOOR_S,
    value_floor_s: float = VALUE_REPORT_FLOOR_S,
) -> Explanation:
    """Assemble the per-sample explanation and fold it into the run tally."""
    top = top_relevant_features(model, fv, n_estimators=n_estimators)
    accumulator.add(top)
    # Before any tree splits, the tally is empty and there is no summary to
    # take; render the placeholder lines instead.
    if accumulator.total:
        summary = accumulator.model_summary()
    else:
        summary = ModelSummary((), (), (), windows_equal=False)
    text = render_explanation(
        fv.seq_id,
        predicted,
        top,
        summary,
        tracker_report,
        template=template,
        pattern_floor_s=pattern_floor_s,
        value_floor_s=value_floor_s,
    )
    return Explanation(
        seq_id=fv.seq_id,
        predicted=predicted,
        top_features=tuple(top),
        summary=summary,
        anomalies=tracker_report,
        text=text,
    )

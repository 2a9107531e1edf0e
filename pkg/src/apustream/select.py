"""Online variance-threshold feature selection.

A ``VarianceState`` folds feature vectors into per-feature running mean and
M2 (numerically stable single pass).  ``selected_features`` returns the
features whose population variance strictly exceeds the threshold.

Two scenario presets mirror the evaluated configurations: Scenario 1
considers mean/std features on the mean-gap window only; Scenario 2
considers all 24 engineered metrics per sensor.  Presets select at sensor
granularity - a sensor is kept when any of its candidate features clears
the threshold, and then all its candidate features are kept - because the
engineered features of one sensor travel together into the classifiers.

The selection is frozen after a burn-in (end of the calibration slice by
default) and persisted as a plain text file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .errors import NotReadyError, SchemaError, StreamSchemaError
from .features import ENGINEERED_METRICS, FeatureName, FeatureSchema, FeatureVector

DEFAULT_THRESHOLD = 0.5


class VarianceState:
    """Running per-feature variance over a stream of feature vectors."""

    def __init__(self, schema: FeatureSchema | None = None):
        self.schema = schema
        self.n = 0
        self._mean: np.ndarray | None = None
        self._m2: np.ndarray | None = None
        if schema is not None:
            self._alloc(len(schema))

    def _alloc(self, width: int) -> None:
        self._mean = np.zeros(width, dtype=np.float64)
        self._m2 = np.zeros(width, dtype=np.float64)

    def update(self, fv: FeatureVector) -> "VarianceState":
        if self.schema is None:
            self.schema = fv.schema
            self._alloc(len(fv.schema))
        elif fv.schema != self.schema:
            raise StreamSchemaError(
                "feature vector schema does not match the bound selection schema"
            )
        kernels.welford_vec(float(self.n), self._mean, self._m2, fv.values, 1.0)
        self.n += 1
        return self

    def variances(self) -> np.ndarray:
        """Population variances (M2/n); zeros before any data."""
        if self.n == 0 or self._m2 is None:
            raise NotReadyError("variance state has seen no vectors")
        return self._m2 / self.n

    def means(self) -> np.ndarray:
        if self.n == 0 or self._mean is None:
            raise NotReadyError("variance state has seen no vectors")
        return self._mean.copy()


@dataclass(frozen=True)
class SelectionResult:
    """A frozen selection: ordered features plus provenance counters."""

    features: tuple[FeatureName, ...]
    threshold: float
    sample_count: int
    scenario: int | None = None
    variances: dict[FeatureName, float] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.features)

    def __contains__(self, name: FeatureName) -> bool:
        return name in set(self.features)

    @property
    def sensors(self) -> tuple[str, ...]:
        seen: list[str] = []
        for f in self.features:
            if f.sensor not in seen:
                seen.append(f.sensor)
        return tuple(seen)


def selected_features(
    state: VarianceState,
    threshold: float = DEFAULT_THRESHOLD,
    candidates: Sequence[FeatureName] | None = None,
) -> SelectionResult:
    """Features with variance strictly above the threshold, schema-ordered."""
    if state.n < 2:
        raise NotReadyError(
            f"selection needs at least 2 vectors, state has seen {state.n}"
        )
    variances = state.variances()
    schema = state.schema
    if candidates is None:
        pool = schema.names
    else:
        pool = tuple(candidates)
    chosen = []
    var_map: dict[FeatureName, float] = {}
    for name in pool:
        v = float(variances[schema.position(name)])
        var_map[name] = v
        if v > threshold:
            chosen.append(name)
    chosen.sort(key=schema.position)
    return SelectionResult(
        features=tuple(chosen),
        threshold=threshold,
        sample_count=state.n,
        variances=var_map,
    )


@dataclass(frozen=True)
class ScenarioPreset:
    """Candidate-feature policy for one evaluation scenario."""

    number: int
    metrics: tuple[str, ...]
    windows: tuple[str, ...] | None  # None = all four window slots

    def candidate_features(self, schema: FeatureSchema) -> tuple[FeatureName, ...]:
        return tuple(
            name
            for name in schema.names
            if name.metric in self.metrics
            and (self.windows is None or name.window in self.windows)
        )


SCENARIOS: dict[int, ScenarioPreset] = {
    1: ScenarioPreset(number=1, metrics=("avg", "std"), windows=("W_avg",)),
    2: ScenarioPreset(number=2, metrics=ENGINEERED_METRICS, windows=None),
}


def scenario_preset(number: int) -> ScenarioPreset:
    try:
        return SCENARIOS[int(number)]
    except (KeyError, ValueError):
        raise ValueError(f"scenario must be 1 or 2, got {number!r}") from None


def scenario_selection(
    state: VarianceState,
    preset: ScenarioPreset | int,
    threshold: float = DEFAULT_THRESHOLD,
) -> SelectionResult:
    """Sensor-granular selection under a scenario preset.

    A sensor is selected when any of its candidate features has variance
    strictly above the threshold; the result then contains all candidate
    features of the selected sensors, in schema order.
    """
    if isinstance(preset, int):
        preset = scenario_preset(preset)
    if state.n < 2:
        raise NotReadyError(
            f"selection needs at least 2 vectors, state has seen {state.n}"
        )
    schema = state.schema
    variances = state.variances()
    candidates = preset.candidate_features(schema)

    passing_sensors = set()
    var_map: dict[FeatureName, float] = {}
    for name in candidates:
        v = float(variances[schema.position(name)])
        var_map[name] = v
        if v > threshold:
            passing_sensors.add(name.sensor)

    chosen = tuple(n for n in candidates if n.sensor in passing_sensors)
    return SelectionResult(
        features=chosen,
        threshold=threshold,
        sample_count=state.n,
        scenario=preset.number,
        variances=var_map,
    )


def apply_selection(
    fv: FeatureVector, selection: SelectionResult | Sequence[FeatureName]
) -> FeatureVector:
    """Project a feature vector onto the selected features, order preserved."""
    names = selection.features if isinstance(selection, SelectionResult) else tuple(selection)
    projected = _projected_schema(fv.schema, names)
    positions = fv.schema.positions(names)
    return FeatureVector(
        seq_id=fv.seq_id,
        timestamp=fv.timestamp,
        schema=projected,
        values=fv.values[positions],
    )


class _ProjectedSchema(FeatureSchema):
    """A sub-schema carrying an explicit feature subset."""

    def __init__(self, parent: FeatureSchema, names: tuple[FeatureName, ...]):
        self.windows = parent.windows
        self.signals = parent.signals
        self.names = names
        self.index = {n: i for i, n in enumerate(names)}


_PROJECTION_CACHE: dict[tuple[int, tuple[FeatureName, ...]], _ProjectedSchema] = {}


def _projected_schema(
    parent: FeatureSchema, names: tuple[FeatureName, ...]
) -> FeatureSchema:
    for name in names:
        if name not in parent.index:
            raise SchemaError(f"selected feature absent from vector: {name.serialize()}")
    if names == parent.names:
        return parent
    key = (id(parent), names)
    cached = _PROJECTION_CACHE.get(key)
    if cached is None:
        cached = _ProjectedSchema(parent, names)
        _PROJECTION_CACHE[key] = cached
    return cached


def save_selection(selection: SelectionResult, path: str | os.PathLike) -> None:
    """Persist one serialized FeatureName per line under a small header."""
    lines = [
        "# variance-threshold feature selection",
        f"# threshold={selection.threshold!r}",
        f"# burn_in_samples={selection.sample_count}",
        f"# scenario={selection.scenario if selection.scenario is not None else '-'}",
        f"# n_features={len(selection.features)}",
    ]
    lines.extend(name.serialize() for name in selection.features)
    Path(path).write_text("\n".join(lines) + "\n")


def load_selection(path: str | os.PathLike) -> SelectionResult:
    """Read back a selection written by :func:`save_selection`."""
    threshold = DEFAULT_THRESHOLD
    sample_count = 0
    scenario: int | None = None
    names: list[FeatureName] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if "=" in body:
                key, _, value = body.partition("=")
                key = key.strip()
                value = value.strip()
                if key == "threshold":
                    threshold = float(value)
                elif key == "burn_in_samples":
                    sample_count = int(value)
                elif key == "scenario" and value != "-":
                    scenario = int(value)
            continue
        names.append(FeatureName.parse(line))
    return SelectionResult(
        features=tuple(names),
        threshold=threshold,
        sample_count=sample_count,
        scenario=scenario,
    )

"""Sliding-window FIR feature engineering.

For every signal and every calibrated window length w, six features are
derived from the last w values X = {x[n-w+1], ..., x[n]} and their sorted
arrangement Y:

* ``avg``  arithmetic mean of X
* ``std``  population standard deviation of X
* ``q1/q2/q3``  nearest-rank quartiles of Y (index nint(k*w/4), clamped)
* ``fft``  the largest DFT magnitude over non-DC bins 1..floor(w/2)

Together with the 16 raw pass-through values, 4 windows x 6 metrics x 16
signals yields the fixed 400-entry feature vector.  Windows emit nothing
until the longest one has filled (cold start).

Implementation notes: each distinct window length keeps a ring buffer and
an incrementally maintained sorted arrangement per signal, so a push costs
O(w) memory moves instead of an O(w log w) re-sort.  The DFT magnitude is
invariant under circular rotation of the window, so the FFT runs directly
over the ring buffer without materialising time order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from . import kernels
from .calibrate import WINDOW_SLOTS, WindowSpec, quartile_index
from .errors import StreamSchemaError
from .schema import RawSample, SIGNAL_NAMES

RAW = "raw"
NO_WINDOW = "none"
ENGINEERED_METRICS = ("avg", "std", "q1", "q2", "q3", "fft")
METRICS = (RAW,) + ENGINEERED_METRICS


class FeatureName(NamedTuple):
    """Structured feature identity: (sensor, metric, window slot)."""

    sensor: str
    metric: str
    window: str

    def serialize(self) -> str:
        return f"{self.sensor}|{self.metric}|{self.window}"

    @classmethod
    def parse(cls, text: str) -> "FeatureName":
        parts = text.split("|")
        if len(parts) != 3:
            raise ValueError(f"feature name needs 3 '|'-separated parts: {text!r}")
        name = cls(*parts)
        name.validate()
        return name

    def validate(self) -> "FeatureName":
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r} in {self.serialize()}")
        if self.metric == RAW:
            if self.window != NO_WINDOW:
                raise ValueError(
                    f"raw features carry window 'none', got {self.serialize()}"
                )
        elif self.window not in WINDOW_SLOTS:
            raise ValueError(f"unknown window {self.window!r} in {self.serialize()}")
        return self


class FeatureSchema:
    """The fixed, ordered feature universe for one run.

    Order is sensor-major: for each signal, its raw value first, then the
    six engineered metrics for each window slot in ``WINDOW_SLOTS`` order.
    """

    def __init__(self, windows: WindowSpec, signals: Sequence[str] = SIGNAL_NAMES):
        self.windows = windows
        self.signals = tuple(signals)
        names: list[FeatureName] = []
        for sensor in self.signals:
            names.append(FeatureName(sensor, RAW, NO_WINDOW))
            for slot in WINDOW_SLOTS:
                for metric in ENGINEERED_METRICS:
                    names.append(FeatureName(sensor, metric, slot))
        self.names: tuple[FeatureName, ...] = tuple(names)
        self.index: dict[FeatureName, int] = {n: i for i, n in enumerate(self.names)}

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: FeatureName) -> bool:
        return name in self.index

    def position(self, name: FeatureName) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise StreamSchemaError(f"feature not in schema: {name.serialize()}") from None

    def positions(self, names: Sequence[FeatureName]) -> np.ndarray:
        return np.array([self.position(n) for n in names], dtype=np.intp)

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureSchema) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)


@dataclass(frozen=True)
class FeatureVector:
    """One emitted feature record; values are read-only and schema-ordered."""

    seq_id: int
    timestamp: int
    schema: FeatureSchema
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (len(self.schema),):
            raise StreamSchemaError(
                f"feature vector carries {arr.shape} values, schema has {len(self.schema)}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return len(self.schema)

    def __getitem__(self, name: FeatureName) -> float:
        return float(self.values[self.schema.position(name)])

    def items(self) -> Iterator[tuple[FeatureName, float]]:
        for name, value in zip(self.schema.names, self.values):
            yield name, float(value)

    def as_dict(self) -> dict[FeatureName, float]:
        return dict(self.items())


@dataclass(frozen=True)
class ColdStart:
    """Returned while windows are still filling; no features yet."""

    seen: int
    required: int


def window_stats(window: Sequence[float] | np.ndarray) -> tuple[float, float, float, float, float]:
    """(avg, std, q1, q2, q3) of one window; reference implementation."""
    x = np.asarray(window, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError(f"window must hold at least 2 values, got shape {x.shape}")
    w = x.size
    avg = float(np.mean(x))
    std = float(np.sqrt(np.mean((x - avg) ** 2)))
    y = np.sort(x)
    q1, q2, q3 = (float(y[quartile_index(w, k)]) for k in (1, 2, 3))
    return avg, std, q1, q2, q3


def fft_feature(window: Sequence[float] | np.ndarray) -> float:
    """Largest DFT magnitude over bins 1..floor(w/2); reference implementation."""
    x = np.asarray(window, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError(f"window must hold at least 2 values, got shape {x.shape}")
    spectrum = np.fft.rfft(x)
    return float(np.abs(spectrum[1:]).max())


class _Bank:
    """Ring buffer + sorted arrangement for one distinct window length."""

    __slots__ = ("w", "ring", "sorted", "head", "count", "q1i", "q2i", "q3i")

    def __init__(self, w: int, n_signals: int):
        self.w = w
        self.ring = np.zeros((n_signals, w), dtype=np.float64)
        self.sorted = np.zeros((n_signals, w), dtype=np.float64)
        self.head = 0
        self.count = 0
        self.q1i = quartile_index(w, 1)
        self.q2i = quartile_index(w, 2)
        self.q3i = quartile_index(w, 3)

    def push(self, values: np.ndarray) -> None:
        if self.count < self.w:
            k = self.count
            self.ring[:, k] = values
            for s in range(self.ring.shape[0]):
                row = self.sorted[s]
                x = values[s]
                j = int(np.searchsorted(row[:k], x))
                row[j + 1 : k + 1] = row[j:k]
                row[j] = x
            self.count += 1
        else:
            kernels.push_full(self.ring, self.sorted, self.head, values)
            self.head = (self.head + 1) % self.w

    @property
    def full(self) -> bool:
        return self.count >= self.w


class FeatureExtractor:
    """Stateful stream operator: RawSample in, FeatureVector (or ColdStart) out.

    Single-writer; one instance per stream.  Results are identical to
    recomputing every window from scratch at each step.
    """

    def __init__(self, windows: WindowSpec, signals: Sequence[str] = SIGNAL_NAMES):
        self.schema = FeatureSchema(windows, signals)
        self.windows = windows
        n = len(self.schema.signals)
        self._banks: dict[int, _Bank] = {}
        for slot in WINDOW_SLOTS:
            w = windows.length_of(slot)
            if w not in self._banks:
                self._banks[w] = _Bank(w, n)
        self._slot_bank = {
            slot: self._banks[windows.length_of(slot)] for slot in WINDOW_SLOTS
        }
        self.required = windows.max_length
        self.seen = 0

        self._raw_pos = self.schema.positions(
            [FeatureName(s, RAW, NO_WINDOW) for s in self.schema.signals]
        )
        self._metric_pos: dict[str, dict[str, np.ndarray]] = {
            slot: {
                metric: self.schema.positions(
                    [FeatureName(s, metric, slot) for s in self.schema.signals]
                )
                for metric in ENGINEERED_METRICS
            }
            for slot in WINDOW_SLOTS
        }

    def push(self, sample: RawSample) -> FeatureVector | ColdStart:
        values = np.asarray(sample.values, dtype=np.float64)
        for bank in self._banks.values():
            bank.push(values)
        self.seen += 1
        if self.seen < self.required:
            return ColdStart(seen=self.seen, required=self.required)

        out = np.empty(len(self.schema), dtype=np.float64)
        out[self._raw_pos] = values

        bank_results: dict[int, tuple] = {}
        for w, bank in self._banks.items():
            mean, std, q1, q2, q3 = kernels.bank_stats(
                bank.sorted, bank.q1i, bank.q2i, bank.q3i
            )
            # |DFT| is rotation-invariant, so transform the ring as-is.
            mags = np.abs(np.fft.rfft(bank.ring, axis=1))[:, 1:]
            fft = mags.max(axis=1)
            bank_results[w] = (mean, std, q1, q2, q3, fft)

        for slot in WINDOW_SLOTS:
            mean, std, q1, q2, q3, fft = bank_results[self.windows.length_of(slot)]
            pos = self._metric_pos[slot]
            out[pos["avg"]] = mean
            out[pos["std"]] = std
            out[pos["q1"]] = q1
            out[pos["q2"]] = q2
            out[pos["q3"]] = q3
            out[pos["fft"]] = fft

        return FeatureVector(
            seq_id=sample.seq_id,
            timestamp=sample.timestamp,
            schema=self.schema,
            values=out,
        )

"""Sliding-window length calibration from the duty cycle of the stream.

The air unit compresses in cycles, so analog signals oscillate; the spacing
between consecutive relative minima measures the cycle length in samples.
Calibration pools those spacings over every analog signal in a short slice
of the stream (two days by default) and derives four window lengths from
the pooled distribution: its mean and its three quartiles.  Those lengths
parameterize the FIR feature windows downstream.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import yaml

from .errors import CalibrationError, ConfigError
from .schema import ANALOG_NAMES, RawSample, SIGNAL_INDEX

WINDOW_SLOTS = ("W_avg", "W_q1", "W_q2", "W_q3")
CALIBRATION_DAYS = 2.0


def nint(x: float) -> int:
    """Round to nearest integer, halves away from zero."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def quartile_index(n: int, k: int) -> int:
    """Nearest-rank index of the k-th quartile in a sorted array of length n."""
    if n < 1:
        raise ValueError("quartile of an empty array")
    if k not in (1, 2, 3):
        raise ValueError(f"quartile k must be 1, 2 or 3, got {k}")
    return min(max(nint(k * n / 4), 0), n - 1)


def find_relative_minima(series: Sequence[float] | np.ndarray) -> np.ndarray:
    """Indices i with series[i] < series[i-1] and series[i] <= series[i+1].

    Endpoints are never minima.  On a plateau the asymmetric comparison
    keeps only the leading index.  Requires at least 3 points.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"series must be 1-D, got shape {x.shape}")
    if x.size < 3:
        raise ValueError(f"series too short for minima detection: {x.size} < 3")
    inner = (x[1:-1] < x[:-2]) & (x[1:-1] <= x[2:])
    return np.nonzero(inner)[0] + 1


def minima_gaps(series: Sequence[float] | np.ndarray) -> np.ndarray:
    """Distances (in samples) between consecutive relative minima."""
    return np.diff(find_relative_minima(series))


def merge_gap_lists(gap_lists: Iterable[np.ndarray]) -> np.ndarray:
    """Pool per-signal gap lists into one distribution."""
    parts = [np.asarray(g, dtype=np.int64) for g in gap_lists]
    parts = [g for g in parts if g.size]
    if not parts:
        raise CalibrationError(
            "no oscillation detected: no analog signal produced two relative minima"
        )
    return np.concatenate(parts)


@dataclass(frozen=True)
class WindowSpec:
    """The four calibrated sliding-window lengths, in samples."""

    w_avg: int
    w_q1: int
    w_q2: int
    w_q3: int

    def __post_init__(self) -> None:
        # check the raw fields; as_dict() would mask a float by coercing it
        fields = (("W_avg", self.w_avg), ("W_q1", self.w_q1),
                  ("W_q2", self.w_q2), ("W_q3", self.w_q3))
        for slot, w in fields:
            if not isinstance(w, (int, np.integer)) or isinstance(w, bool):
                raise ValueError(f"{slot} must be an integer, got {w!r}")
            if w < 2:
                raise ValueError(f"{slot} must be >= 2, got {w}")

    def as_dict(self) -> dict[str, int]:
        return {
            "W_avg": int(self.w_avg),
            "W_q1": int(self.w_q1),
            "W_q2": int(self.w_q2),
            "W_q3": int(self.w_q3),
        }

    def length_of(self, slot: str) -> int:
        try:
            return self.as_dict()[slot]
        except KeyError:
            raise ValueError(f"unknown window slot: {slot!r}") from None

    @property
    def max_length(self) -> int:
        return max(self.as_dict().values())

    @classmethod
    def from_dict(cls, mapping: dict) -> "WindowSpec":
        missing = [s for s in WINDOW_SLOTS if s not in mapping]
        if missing:
            raise ConfigError(f"window spec missing slot(s): {', '.join(missing)}")
        return cls(
            w_avg=int(mapping["W_avg"]),
            w_q1=int(mapping["W_q1"]),
            w_q2=int(mapping["W_q2"]),
            w_q3=int(mapping["W_q3"]),
        )


def windows_from_gaps(gaps: np.ndarray) -> WindowSpec:
    """Derive the four window lengths from a pooled gap distribution.

    W_avg is the rounded mean; W_q1/q2/q3 are nearest-rank quartiles of the
    sorted gaps.  Every length is clamped to at least 2 so a window can
    always hold a spread.
    """
    g = np.asarray(gaps, dtype=np.float64)
    if g.size == 0:
        raise CalibrationError("empty gap distribution")
    if np.any(g <= 0):
        raise CalibrationError("gap distribution contains non-positive spacings")
    ordered = np.sort(g)
    picks = [float(np.mean(g))] + [
        float(ordered[quartile_index(g.size, k)]) for k in (1, 2, 3)
    ]
    w = [max(2, nint(v)) for v in picks]
    return WindowSpec(w_avg=w[0], w_q1=w[1], w_q2=w[2], w_q3=w[3])


def calibration_slice(
    stream: Iterable[RawSample], days: float = CALIBRATION_DAYS
) -> Iterator[RawSample]:
    """Pass through samples from the first ``days`` of the stream."""
    if days <= 0:
        raise ConfigError(f"calibration span must be positive, got {days}")
    horizon: int | None = None
    for sample in stream:
        if horizon is None:
            horizon = sample.timestamp + int(days * 86_400)
        if sample.timestamp >= horizon:
            break
        yield sample


def calibrate_windows(
    samples: Iterable[RawSample],
    analog_names: Sequence[str] = ANALOG_NAMES,
) -> WindowSpec:
    """Run the full calibration procedure over an in-order sample slice."""
    cols = [SIGNAL_INDEX[name] for name in analog_names]
    if not cols:
        raise ConfigError("calibration needs at least one analog signal")
    rows = [s.values for s in samples]
    if len(rows) < 3:
        raise CalibrationError(
            f"calibration slice too short: {len(rows)} samples, need >= 3"
        )
    matrix = np.vstack(rows)
    gaps = merge_gap_lists(minima_gaps(matrix[:, c]) for c in cols)
    return windows_from_gaps(gaps)


def save_windows(spec: WindowSpec, path: str | os.PathLike) -> None:
    """Persist a window spec as YAML (the file ``cmd calibrate`` writes)."""
    Path(path).write_text(yaml.safe_dump({"windows": spec.as_dict()}, sort_keys=False))


def load_windows(path: str | os.PathLike) -> WindowSpec:
    """Read a window spec produced by :func:`save_windows`."""
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read window spec {path}: {exc}") from exc
    if not isinstance(doc, dict) or "windows" not in doc:
        raise ConfigError(f"window spec {path} lacks a 'windows' mapping")
    try:
        return WindowSpec.from_dict(doc["windows"])
    except ValueError as exc:
        raise ConfigError(f"invalid window spec {path}: {exc}") from exc

"""Signal schema, class labels, and the core record types of the stream.

The air production unit (APU) emits one record per second with 16 sensor
channels: 8 analog (pressures, temperature, motor current, air flow) and 8
digital (valve/control states, 0 or 1).  Records are identified by a dense
``seq_id`` assigned at parse time and carry an integer epoch-second
timestamp.  Naive wall-clock timestamps in the source data are interpreted
as UTC so arithmetic on them is reproducible everywhere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable

import numpy as np

from .errors import SchemaError

ANALOG = "analog"
DIGITAL = "digital"


@dataclass(frozen=True)
class SignalSpec:
    """One sensor channel: column name, analog/digital kind, catalog number."""

    name: str
    kind: str
    number: int


# Column order matches the data files; ``number`` is the sensor catalog
# ordering used by scenario presets (analog sensors 1-8, digital 9-16).
SIGNALS: tuple[SignalSpec, ...] = (
    SignalSpec("TP2", ANALOG, 7),
    SignalSpec("TP3", ANALOG, 8),
    SignalSpec("H1", ANALOG, 3),
    SignalSpec("DV pressure", ANALOG, 1),
    SignalSpec("Reservoirs", ANALOG, 6),
    SignalSpec("Oil temperature", ANALOG, 5),
    SignalSpec("Flowmeter", ANALOG, 2),
    SignalSpec("MC", ANALOG, 4),
    SignalSpec("COMP", DIGITAL, 10),
    SignalSpec("DV electric", DIGITAL, 11),
    SignalSpec("Towers", DIGITAL, 16),
    SignalSpec("MPG", DIGITAL, 13),
    SignalSpec("LPS", DIGITAL, 12),
    SignalSpec("Pressure switch", DIGITAL, 15),
    SignalSpec("Oil level", DIGITAL, 14),
    SignalSpec("Caudal impulses", DIGITAL, 9),
)

SIGNAL_NAMES: tuple[str, ...] = tuple(s.name for s in SIGNALS)
SIGNAL_INDEX: dict[str, int] = {s.name: i for i, s in enumerate(SIGNALS)}
ANALOG_NAMES: tuple[str, ...] = tuple(s.name for s in SIGNALS if s.kind == ANALOG)
DIGITAL_NAMES: tuple[str, ...] = tuple(s.name for s in SIGNALS if s.kind == DIGITAL)
N_SIGNALS = len(SIGNALS)

# Accepted aliases for column names seen in the wild (whitespace, case and
# unit suffixes vary between dataset exports).
_HEADER_ALIASES: dict[str, str] = {
    "tp2": "TP2",
    "tp3": "TP3",
    "h1": "H1",
    "dv_pressure": "DV pressure",
    "dv pressure": "DV pressure",
    "reservoirs": "Reservoirs",
    "oil_temperature": "Oil temperature",
    "oil temperature": "Oil temperature",
    "flowmeter": "Flowmeter",
    "motor_current": "MC",
    "motor current": "MC",
    "mc": "MC",
    "comp": "COMP",
    "dv_eletric": "DV electric",
    "dv eletric": "DV electric",
    "dv_electric": "DV electric",
    "dv electric": "DV electric",
    "towers": "Towers",
    "mpg": "MPG",
    "mgp": "MPG",
    "lps": "LPS",
    "pressure_switch": "Pressure switch",
    "pressure switch": "Pressure switch",
    "oil_level": "Oil level",
    "oil level": "Oil level",
    "caudal_impulses": "Caudal impulses",
    "caudal impulses": "Caudal impulses",
    "timestamp": "timestamp",
}


def canonical_column(raw: str) -> str | None:
    """Map a raw CSV header cell to its canonical signal name, or None."""
    return _HEADER_ALIASES.get(raw.strip().lower())


class ClassLabel(enum.IntEnum):
    """Target classes in fixed ordinal order; ties resolve to the lowest."""

    NonFailure = 0
    OilLeakCompressor = 1
    AirLeakDryer = 2
    AirLeakClient = 3


CLASS_LABELS: tuple[ClassLabel, ...] = tuple(ClassLabel)
N_CLASSES = len(CLASS_LABELS)

_TS_FORMATS = (
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S.%f",
    "%Y-%m-%dT%H:%M:%S.%f",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%d",
)


def parse_timestamp(text: str) -> int:
    """Parse a wall-clock timestamp string to integer epoch seconds (UTC).

    Fractional seconds are truncated; records are on a 1 Hz grid.
    """
    cleaned = text.strip()
    for fmt in _TS_FORMATS:
        try:
            dt = datetime.strptime(cleaned, fmt)
        except ValueError:
            continue
        return int(dt.replace(tzinfo=timezone.utc).timestamp())
    raise ValueError(f"unparseable timestamp: {text!r}")


def format_timestamp(epoch_s: int) -> str:
    """Inverse of :func:`parse_timestamp` for whole seconds."""
    return datetime.fromtimestamp(int(epoch_s), tz=timezone.utc).strftime(
        "%Y-%m-%d %H:%M:%S"
    )


def _readonly(values: np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (N_SIGNALS,):
        raise SchemaError(
            f"sample must carry {N_SIGNALS} signal values, got shape {arr.shape}"
        )
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class RawSample:
    """One validated stream record.

    ``seq_id`` is dense over valid records (0, 1, 2, ...), independent of how
    many raw rows were skipped.  ``values`` is a read-only float64 vector in
    ``SIGNALS`` order.
    """

    seq_id: int
    timestamp: int
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _readonly(self.values))

    def value(self, name: str) -> float:
        return float(self.values[SIGNAL_INDEX[name]])


@dataclass(frozen=True)
class LabeledSample:
    """A raw sample plus its target class."""

    sample: RawSample
    label: ClassLabel

    @property
    def seq_id(self) -> int:
        return self.sample.seq_id

    @property
    def timestamp(self) -> int:
        return self.sample.timestamp


@dataclass(frozen=True)
class FailureEvent:
    """A maintenance-report failure interval, inclusive on both ends."""

    label: ClassLabel
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.label == ClassLabel.NonFailure:
            raise ValueError("failure events cannot carry the NonFailure label")
        if self.end < self.start:
            raise ValueError(
                f"event end precedes start: {format_timestamp(self.start)} .. "
                f"{format_timestamp(self.end)}"
            )


@dataclass
class ParseStats:
    """Counters collected while parsing a stream."""

    rows_read: int = 0
    rows_emitted: int = 0
    rows_skipped: int = 0
    out_of_order: int = 0
    skip_reasons: dict[str, int] = field(default_factory=dict)

    def note_skip(self, reason: str) -> None:
        self.rows_skipped += 1
        self.skip_reasons[reason] = self.skip_reasons.get(reason, 0) + 1


def sensors_by_number(numbers: Iterable[int]) -> tuple[str, ...]:
    """Resolve sensor catalog numbers to signal names, preserving file order."""
    wanted = set(numbers)
    unknown = wanted - {s.number for s in SIGNALS}
    if unknown:
        raise ValueError(f"unknown sensor numbers: {sorted(unknown)}")
    return tuple(s.name for s in SIGNALS if s.number in wanted)

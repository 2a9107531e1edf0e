"""Stream ingestion: CSV parsing, labeling, window filtering, downsampling.

The parser is deliberately forgiving at row level (a malformed row is
skipped and counted, never fatal) and strict at schema level (a missing
column aborts).  Ground-truth labels are derived from maintenance failure
reports: every sample between ``start - pre_window`` and ``end`` (both
inclusive) of a report carries that report's class, everything else is
``NonFailure``.  The two hours before a reported failure are treated as
already failing so the learners are trained to raise alarms early.
"""

from __future__ import annotations

import io
import os
from bisect import bisect_right
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import pandas as pd
import yaml

from .errors import ConfigError, EventError, SchemaError
from .schema import (
    ClassLabel,
    DIGITAL_NAMES,
    FailureEvent,
    LabeledSample,
    N_SIGNALS,
    ParseStats,
    RawSample,
    SIGNAL_NAMES,
    canonical_column,
    format_timestamp,
    parse_timestamp,
)

DAY_S = 86_400
PRE_WINDOW_S = 7_200  # label this long before each reported failure start
_CHUNK_ROWS = 200_000


def _resolve_header(columns: Iterable[str], schema: tuple[str, ...]) -> dict[str, str]:
    """Map canonical names to actual CSV column labels, or raise SchemaError."""
    actual: dict[str, str] = {}
    for col in columns:
        canon = canonical_column(str(col))
        if canon is not None and canon not in actual:
            actual[canon] = col
    missing = [name for name in (*schema, "timestamp") if name not in actual]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")
    return actual


class CsvStream:
    """Iterate ``RawSample`` records out of a delimited text table.

    ``source`` may be a path (``.gz`` handled transparently by pandas) or a
    readable text/bytes buffer.  Iteration populates ``stats``; malformed
    rows are skipped and counted, out-of-order timestamps are kept but
    counted as warnings.  ``seq_id`` is dense over emitted samples.
    """

    def __init__(self, source, schema: tuple[str, ...] = SIGNAL_NAMES):
        self.source = source
        self.schema = tuple(schema)
        self.stats = ParseStats()

    def _reader(self):
        source = self.source
        if not isinstance(source, (str, os.PathLike)) and hasattr(source, "read"):
            if not (hasattr(source, "seekable") and source.seekable()):
                data = source.read()
                source = io.BytesIO(data) if isinstance(data, bytes) else io.StringIO(data)
        # Validate the header up front so a header-only file still reports
        # missing columns instead of silently yielding nothing.
        head = pd.read_csv(source, nrows=0)
        header = _resolve_header(head.columns, self.schema)
        if hasattr(source, "seek"):
            source.seek(0)
        return header, pd.read_csv(source, chunksize=_CHUNK_ROWS)

    def __iter__(self) -> Iterator[RawSample]:
        digital = set(DIGITAL_NAMES) & set(self.schema)
        seq_id = 0
        prev_ts: int | None = None

        header, reader = self._reader()
        for chunk in reader:
            self.stats.rows_read += len(chunk)

            ts = pd.to_datetime(
                chunk[header["timestamp"]], errors="coerce", utc=True
            )
            bad_ts = ts.isna().to_numpy()
            ts_ns = ts.to_numpy(dtype="datetime64[ns]").view("int64")
            ts_s = ts_ns // 10**9

            values = np.empty((len(chunk), len(self.schema)), dtype=np.float64)
            bad_num = np.zeros(len(chunk), dtype=bool)
            bad_dig = np.zeros(len(chunk), dtype=bool)
            for j, name in enumerate(self.schema):
                col = pd.to_numeric(chunk[header[name]], errors="coerce")
                col_arr = col.to_numpy(dtype=np.float64, na_value=np.nan)
                nan_mask = np.isnan(col_arr)
                bad_num |= nan_mask
                if name in digital:
                    ok = nan_mask | (col_arr == 0.0) | (col_arr == 1.0)
                    bad_dig |= ~ok
                values[:, j] = col_arr

            for i in range(len(chunk)):
                if bad_ts[i]:
                    self.stats.note_skip("bad_timestamp")
                    continue
                if bad_num[i]:
                    self.stats.note_skip("non_numeric")
                    continue
                if bad_dig[i]:
                    self.stats.note_skip("digital_out_of_range")
                    continue
                t = int(ts_s[i])
                if prev_ts is not None and t < prev_ts:
                    self.stats.out_of_order += 1
                prev_ts = t
                sample = RawSample(seq_id=seq_id, timestamp=t, values=values[i])
                seq_id += 1
                self.stats.rows_emitted += 1
                yield sample


def parse_stream(
    source, schema: tuple[str, ...] = SIGNAL_NAMES
) -> CsvStream:
    """Build a re-iterable sample stream over a CSV source."""
    return CsvStream(source, schema)


def _coerce_event_ts(value) -> int:
    if isinstance(value, datetime):
        return int(value.replace(tzinfo=timezone.utc).timestamp())
    if isinstance(value, str):
        return parse_timestamp(value)
    raise EventError(f"unparseable event timestamp: {value!r}")


def load_events(path: str | os.PathLike | io.TextIOBase) -> list[FailureEvent]:
    """Load failure reports from YAML: a top-level ``events`` list.

    Each entry needs ``label`` (a failure class name), ``start`` and ``end``
    wall-clock timestamps.  Events are returned sorted by start time.
    """
    if isinstance(path, (str, os.PathLike)):
        text = Path(path).read_text()
    else:
        text = path.read()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise EventError(f"invalid events file: {exc}") from exc
    if not isinstance(doc, dict) or "events" not in doc:
        raise EventError("events file must contain a top-level 'events' list")
    raw_events = doc["events"]
    if not isinstance(raw_events, list):
        raise EventError("'events' must be a list")

    events: list[FailureEvent] = []
    for i, entry in enumerate(raw_events):
        if not isinstance(entry, dict):
            raise EventError(f"event #{i} is not a mapping")
        try:
            label = ClassLabel[str(entry["label"])]
        except KeyError as exc:
            raise EventError(f"event #{i}: unknown label {entry.get('label')!r}") from exc
        if label == ClassLabel.NonFailure:
            raise EventError(f"event #{i}: NonFailure is not a failure label")
        try:
            start = _coerce_event_ts(entry["start"])
            end = _coerce_event_ts(entry["end"])
        except KeyError as exc:
            raise EventError(f"event #{i}: missing field {exc}") from exc
        try:
            events.append(FailureEvent(label=label, start=start, end=end))
        except ValueError as exc:
            raise EventError(f"event #{i}: {exc}") from exc
    events.sort(key=lambda e: e.start)
    return events


def save_events(events: Iterable[FailureEvent], path: str | os.PathLike) -> None:
    """Write failure reports back out in the YAML layout ``load_events`` reads."""
    doc = {
        "events": [
            {
                "label": e.label.name,
                "start": format_timestamp(e.start),
                "end": format_timestamp(e.end),
            }
            for e in sorted(events, key=lambda e: e.start)
        ]
    }
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))


def validate_events(
    events: list[FailureEvent], pre_window: int = PRE_WINDOW_S
) -> list[FailureEvent]:
    """Check that labeled intervals do not overlap once pre-windows extend them."""
    if pre_window < 0:
        raise ConfigError(f"pre_window must be >= 0, got {pre_window}")
    ordered = sorted(events, key=lambda e: e.start)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start - pre_window <= prev.end:
            raise EventError(
                "labeled intervals overlap: "
                f"{prev.label.name} ending {format_timestamp(prev.end)} vs "
                f"{cur.label.name} starting {format_timestamp(cur.start)} "
                f"(pre-window {pre_window}s)"
            )
    return ordered


class _LabelIndex:
    """Sorted interval lookup: timestamp -> ClassLabel."""

    def __init__(self, events: list[FailureEvent], pre_window: int):
        ordered = validate_events(events, pre_window)
        self.starts = [e.start - pre_window for e in ordered]
        self.ends = [e.end for e in ordered]
        self.labels = [e.label for e in ordered]

    def label_for(self, ts: int) -> ClassLabel:
        i = bisect_right(self.starts, ts) - 1
        if i >= 0 and ts <= self.ends[i]:
            return self.labels[i]
        return ClassLabel.NonFailure


def label_sample(
    sample: RawSample,
    events: list[FailureEvent],
    pre_window: int = PRE_WINDOW_S,
) -> LabeledSample:
    """Label one sample; convenience wrapper over :func:`label_stream`."""
    index = _LabelIndex(events, pre_window)
    return LabeledSample(sample=sample, label=index.label_for(sample.timestamp))


def label_stream(
    stream: Iterable[RawSample],
    events: list[FailureEvent],
    pre_window: int = PRE_WINDOW_S,
) -> Iterator[LabeledSample]:
    """Attach ground-truth labels to every sample in the stream."""
    index = _LabelIndex(events, pre_window)
    for sample in stream:
        yield LabeledSample(sample=sample, label=index.label_for(sample.timestamp))


def _day_floor(ts: int) -> int:
    return ts - (ts % DAY_S)


def evaluation_intervals(events: list[FailureEvent]) -> list[tuple[int, int]]:
    """Inclusive [lo, hi] epoch-second intervals spanning each failure.

    Each event contributes the full calendar day before its start through
    the full calendar day after its end; overlapping intervals are merged.
    """
    if not events:
        raise EventError("evaluation window requires at least one failure event")
    spans = sorted(
        (_day_floor(e.start) - DAY_S, _day_floor(e.end) + 2 * DAY_S - 1)
        for e in events
    )
    merged = [spans[0]]
    for lo, hi in spans[1:]:
        if lo <= merged[-1][1] + 1:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def filter_evaluation_window(
    stream: Iterable[RawSample], events: list[FailureEvent]
) -> Iterator[RawSample]:
    """Keep only samples inside the merged evaluation intervals."""
    intervals = evaluation_intervals(events)
    starts = [lo for lo, _ in intervals]
    ends = [hi for _, hi in intervals]
    for sample in stream:
        i = bisect_right(starts, sample.timestamp) - 1
        if i >= 0 and sample.timestamp <= ends[i]:
            yield sample


def downsample(
    stream: Iterable,
    factor: int,
    mode: str = "stride",
    seed: int | None = None,
) -> Iterator:
    """Thin a stream of samples by an integer factor.

    ``stride`` keeps samples whose original ``seq_id`` is a multiple of the
    factor, so the result is deterministic and reproducible from the same
    file.  ``random`` keeps each sample independently with probability
    ``1/factor`` driven by ``seed``.  Factor 1 is the identity in both
    modes.  Works for raw and labeled samples alike.
    """
    if not isinstance(factor, (int, np.integer)) or isinstance(factor, bool):
        raise ConfigError(f"downsample factor must be an integer, got {factor!r}")
    if factor < 1:
        raise ConfigError(f"downsample factor must be >= 1, got {factor}")
    if mode not in ("stride", "random"):
        raise ConfigError(f"unknown downsample mode: {mode!r}")

    if factor == 1:
        yield from stream
        return

    if mode == "stride":
        for item in stream:
            if item.seq_id % factor == 0:
                yield item
    else:
        rng = np.random.default_rng(seed)
        p = 1.0 / float(factor)
        for item in stream:
            if rng.random() < p:
                yield item

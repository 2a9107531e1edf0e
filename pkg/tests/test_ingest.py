"""CSV parsing, labeling, evaluation-window filtering, downsampling."""

import io

import numpy as np
import pytest

from apustream.errors import ConfigError, EventError, SchemaError
from apustream.ingest import (
    CsvStream,
    DAY_S,
    downsample,
    evaluation_intervals,
    filter_evaluation_window,
    label_stream,
    load_events,
    save_events,
    validate_events,
)
from apustream.schema import ClassLabel, FailureEvent, SIGNAL_NAMES

from conftest import EPOCH, random_samples, write_sample_csv


def test_csv_round_trip(tiny_csv):
    path, samples = tiny_csv
    stream = CsvStream(path)
    parsed = list(stream)
    assert len(parsed) == len(samples)
    assert stream.stats.rows_emitted == len(samples)
    assert stream.stats.rows_skipped == 0
    for orig, got in zip(samples, parsed):
        assert got.timestamp == orig.timestamp
        # the fast CSV float path is within 1 ulp of the written value
        np.testing.assert_allclose(got.values, orig.values, rtol=1e-12, atol=0)
    # seq ids are dense from zero
    assert [s.seq_id for s in parsed] == list(range(len(samples)))


def test_csv_header_aliases():
    text = "Unnamed: 0,timestamp," + ",".join(
        n.lower().replace(" ", "_") for n in SIGNAL_NAMES
    )
    row = "0,2022-01-01 00:00:00," + ",".join(["1"] * 8 + ["0"] * 8)
    parsed = list(CsvStream(io.StringIO(text + "\n" + row + "\n")))
    assert len(parsed) == 1
    assert parsed[0].values[0] == 1.0


def test_csv_missing_column_fatal(tmp_path):
    samples = random_samples(5)
    path = write_sample_csv(tmp_path / "t.csv", samples)
    lines = path.read_text().splitlines()
    lines[0] = lines[0].replace("TP2", "not_a_signal")
    path.write_text("\n".join(lines))
    with pytest.raises(SchemaError, match="TP2"):
        list(CsvStream(path))


def test_csv_bad_rows_skipped(tmp_path):
    samples = random_samples(10)
    path = write_sample_csv(tmp_path / "t.csv", samples)
    lines = path.read_text().splitlines()
    lines[2] = lines[2].replace("2022-01-01", "garbage")
    cells = lines[5].split(",")
    cells[3] = "oops"  # non-numeric analog
    lines[5] = ",".join(cells)
    cells = lines[7].split(",")
    cells[-1] = "2"  # digital outside {0, 1}
    lines[7] = ",".join(cells)
    path.write_text("\n".join(lines))

    stream = CsvStream(path)
    parsed = list(stream)
    assert len(parsed) == 7
    assert stream.stats.rows_skipped == 3
    assert stream.stats.skip_reasons["bad_timestamp"] == 1
    assert stream.stats.skip_reasons["non_numeric"] == 1
    assert stream.stats.skip_reasons["digital_out_of_range"] == 1


def test_csv_out_of_order_counted(tmp_path):
    samples = random_samples(6)
    path = write_sample_csv(tmp_path / "t.csv", samples)
    lines = path.read_text().splitlines()
    lines[2], lines[3] = lines[3], lines[2]
    path.write_text("\n".join(lines))
    stream = CsvStream(path)
    parsed = list(stream)
    assert len(parsed) == 6  # kept, only counted
    assert stream.stats.out_of_order >= 1


def test_csv_header_only_reports_schema(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("timestamp\n")
    with pytest.raises(SchemaError):
        list(CsvStream(path))


# -- labeling ----------------------------------------------------------------


def test_label_stream_pre_window_and_bounds():
    samples = random_samples(100, start=10_000)
    ev = FailureEvent(ClassLabel.AirLeakDryer, 10_050, 10_060)
    labeled = list(label_stream(iter(samples), [ev], pre_window=20))
    by_ts = {s.timestamp: s.label for s in labeled}
    assert by_ts[10_029] == ClassLabel.NonFailure
    assert by_ts[10_030] == ClassLabel.AirLeakDryer  # start - pre_window
    assert by_ts[10_060] == ClassLabel.AirLeakDryer  # end inclusive
    assert by_ts[10_061] == ClassLabel.NonFailure
    assert all(s.sample.timestamp == s.timestamp for s in labeled)


def test_label_stream_no_events_all_nonfailure():
    samples = random_samples(10)
    labeled = list(label_stream(iter(samples), []))
    assert all(s.label == ClassLabel.NonFailure for s in labeled)


def test_events_yaml_round_trip(tmp_path):
    events = [
        FailureEvent(ClassLabel.OilLeakCompressor, EPOCH + 100, EPOCH + 200),
        FailureEvent(ClassLabel.AirLeakClient, EPOCH + 5_000, EPOCH + 6_000),
    ]
    path = tmp_path / "events.yaml"
    save_events(events, path)
    assert load_events(path) == events


def test_validate_events_rejects_overlap():
    a = FailureEvent(ClassLabel.OilLeakCompressor, 10_000, 20_000)
    b = FailureEvent(ClassLabel.AirLeakDryer, 20_500, 21_000)
    # b's pre-window reaches back into a
    with pytest.raises(EventError):
        validate_events([a, b], pre_window=7_200)
    validate_events([a, b], pre_window=100)


# -- evaluation window -------------------------------------------------------


def test_evaluation_intervals_pad_and_merge():
    day = DAY_S
    ev = FailureEvent(ClassLabel.AirLeakDryer, 3 * day + 500, 3 * day + 900)
    intervals = evaluation_intervals([ev])
    assert intervals == [(2 * day, 5 * day - 1)]

    near = FailureEvent(ClassLabel.AirLeakClient, 5 * day + 10, 5 * day + 20)
    merged = evaluation_intervals([ev, near])
    assert merged == [(2 * day, 7 * day - 1)]


def test_filter_evaluation_window_keeps_padded_days():
    day = DAY_S
    ev = FailureEvent(ClassLabel.AirLeakDryer, 3 * day + 500, 3 * day + 900)
    # sparse probes instead of a dense week of samples
    probes = []
    for ts in [0, 2 * day - 1, 2 * day, 3 * day, 5 * day - 1, 5 * day]:
        probes.append(random_samples(1, start=ts)[0])
    kept = [s.timestamp for s in filter_evaluation_window(iter(probes), [ev])]
    assert kept == [2 * day, 3 * day, 5 * day - 1]


# -- downsampling ------------------------------------------------------------


def test_downsample_stride_deterministic():
    samples = random_samples(100)
    out = list(downsample(iter(samples), 10))
    assert [s.seq_id for s in out] == list(range(0, 100, 10))
    again = list(downsample(iter(samples), 10))
    assert [s.seq_id for s in again] == [s.seq_id for s in out]


def test_downsample_factor_one_identity():
    samples = random_samples(20)
    out = list(downsample(iter(samples), 1))
    assert len(out) == 20


def test_downsample_random_seeded():
    samples = random_samples(2_000)
    a = [s.seq_id for s in downsample(iter(samples), 10, mode="random", seed=3)]
    b = [s.seq_id for s in downsample(iter(samples), 10, mode="random", seed=3)]
    c = [s.seq_id for s in downsample(iter(samples), 10, mode="random", seed=4)]
    assert a == b
    assert a != c
    assert 100 < len(a) < 400  # roughly 1 in 10


def test_downsample_validation():
    with pytest.raises(ConfigError):
        list(downsample(iter([]), 0))
    with pytest.raises(ConfigError):
        list(downsample(iter([]), 10, mode="alternating"))

"""Window calibration: minima detection, gap pooling, quartile ranks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apustream.calibrate import (
    WindowSpec,
    calibrate_windows,
    calibration_slice,
    find_relative_minima,
    load_windows,
    merge_gap_lists,
    minima_gaps,
    nint,
    quartile_index,
    save_windows,
    windows_from_gaps,
)
from apustream.errors import CalibrationError
from apustream.synthdata import sawtooth_samples


def minima_oracle(x):
    """Quadratic scan: i is a minimum when strictly below the previous point
    and not above the next, endpoints never qualify."""
    out = []
    for i in range(1, len(x) - 1):
        if x[i] < x[i - 1] and x[i] <= x[i + 1]:
            out.append(i)
    return out


def test_nint_half_away_from_zero():
    assert nint(0.5) == 1
    assert nint(1.5) == 2
    assert nint(2.5) == 3
    assert nint(-0.5) == -1
    assert nint(2.4) == 2


def test_quartile_index_small_windows():
    # nearest-rank positions clamp into [0, w-1]
    assert quartile_index(4, 1) == 1
    assert quartile_index(4, 2) == 2
    assert quartile_index(4, 3) == 3
    assert quartile_index(2, 1) == 1  # round(0.5) away from zero
    assert quartile_index(2, 3) == 1  # clamped to w-1
    assert quartile_index(5, 2) == 3  # round(2.5) = 3


@given(
    w=st.integers(min_value=2, max_value=500), k=st.integers(min_value=1, max_value=3)
)
def test_quartile_index_in_range(w, k):
    i = quartile_index(w, k)
    assert 0 <= i <= w - 1
    assert i == min(max(nint(k * w / 4.0), 0), w - 1)


def test_relative_minima_plateau_takes_leading_index():
    x = np.array([5.0, 1.0, 1.0, 1.0, 5.0, 4.0, 6.0, 2.0])
    assert list(find_relative_minima(x)) == [1, 5]


def test_relative_minima_excludes_endpoints():
    x = np.array([0.0, 5.0, 3.0, 5.0, 0.0])
    assert list(find_relative_minima(x)) == [2]


@settings(max_examples=100, deadline=None)
@given(
    st.lists(
        st.floats(min_value=-100, max_value=100, allow_nan=False),
        min_size=3,
        max_size=200,
    )
)
def test_relative_minima_matches_oracle(vals):
    x = np.asarray(vals)
    assert list(find_relative_minima(x)) == minima_oracle(x)


def test_minima_gaps():
    series = np.array([5.0, 1.0, 5.0, 5.0, 1.0, 5.0, 1.0, 5.0])
    assert list(minima_gaps(series)) == [3, 2]
    assert list(minima_gaps(np.array([1.0, 2.0, 3.0]))) == []


def test_merge_gap_lists_pools_everything():
    pooled = merge_gap_lists([[4, 6], [2], []])
    assert sorted(pooled) == [2, 4, 6]
    with pytest.raises(CalibrationError):
        merge_gap_lists([[], []])


def test_windows_from_gaps_known_values():
    gaps = [2, 4, 4, 6, 10]
    spec = windows_from_gaps(gaps)
    # mean 5.2 rounds to 5; sorted gaps [2,4,4,6,10], ranks at n=5: 1,3,4
    assert spec.w_avg == 5
    assert spec.w_q1 == 4
    assert spec.w_q2 == 6
    assert spec.w_q3 == 10


def test_windows_clamped_to_two():
    spec = windows_from_gaps([2, 2, 2])
    assert min(spec.as_dict().values()) >= 2


def test_window_spec_validation():
    with pytest.raises(ValueError):
        WindowSpec(w_avg=1, w_q1=4, w_q2=4, w_q3=4)
    with pytest.raises(ValueError):
        WindowSpec(w_avg=4.5, w_q1=4, w_q2=4, w_q3=4)


def test_window_spec_dict_round_trip(small_spec):
    d = small_spec.as_dict()
    assert set(d) == {"W_avg", "W_q1", "W_q2", "W_q3"}
    assert WindowSpec.from_dict(d) == small_spec
    assert small_spec.max_length == 10


def test_sawtooth_calibrates_to_its_period():
    # constant gap: every window statistic collapses onto the period
    samples = sawtooth_samples(period_s=60, days=0.1)
    spec = calibrate_windows(iter(samples))
    assert spec.as_dict() == {"W_avg": 60, "W_q1": 60, "W_q2": 60, "W_q3": 60}


def test_calibration_slice_bounds_by_time():
    samples = sawtooth_samples(period_s=30, days=0.2)
    sliced = list(calibration_slice(iter(samples), days=0.1))
    assert len(sliced) == int(0.1 * 86_400)
    assert sliced[-1].timestamp - sliced[0].timestamp == len(sliced) - 1


def test_calibrate_needs_enough_samples():
    samples = sawtooth_samples(period_s=30, days=0.001)[:2]
    with pytest.raises(CalibrationError):
        calibrate_windows(iter(samples))


def test_flat_stream_has_no_minima():
    samples = sawtooth_samples(period_s=30, days=0.01)
    flat = []
    for s in samples:
        v = s.values.copy()
        v[:] = 1.0
        flat.append(type(s)(seq_id=s.seq_id, timestamp=s.timestamp, values=v))
    with pytest.raises(CalibrationError):
        calibrate_windows(iter(flat))


def test_windows_yaml_round_trip(tmp_path, small_spec):
    path = tmp_path / "windows.yaml"
    save_windows(small_spec, path)
    assert load_windows(path) == small_spec

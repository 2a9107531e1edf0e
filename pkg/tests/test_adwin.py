"""Adaptive-window drift detector: shrink on change, hold on stationary."""

import numpy as np
import pytest

from apustream.learn.adwin import Adwin, DRIFT, STABLE, WARNING


def feed(det, values):
    out = []
    for v in values:
        out.append(det.update(v))
    return out


def test_mean_tracks_stationary_stream():
    rng = np.random.default_rng(0)
    det = Adwin()
    vals = rng.binomial(1, 0.3, size=4_000).astype(float)
    feed(det, vals)
    assert abs(det.mean - 0.3) < 0.05
    assert det.width > 1_000


def test_no_drift_on_stationary():
    rng = np.random.default_rng(1)
    det = Adwin()
    results = feed(det, rng.binomial(1, 0.5, size=5_000).astype(float))
    # the delta guarantee allows rare false alarms; none expected at n=5000
    assert results.count(DRIFT) <= 1


def test_detects_step_change():
    rng = np.random.default_rng(2)
    det = Adwin()
    feed(det, rng.binomial(1, 0.01, size=1_000).astype(float))
    width_before = det.width
    results = feed(det, rng.binomial(1, 0.5, size=500).astype(float))
    assert DRIFT in results
    detect_at = results.index(DRIFT) + 1
    assert detect_at <= 500
    # the stale half was dropped
    assert det.width < width_before + 500


def test_window_shrinks_toward_new_regime():
    rng = np.random.default_rng(3)
    det = Adwin()
    feed(det, np.zeros(2_000))
    feed(det, np.ones(400))
    assert det.mean > 0.8  # old zeros mostly evicted


def test_warning_precedes_or_accompanies_drift():
    """A looser confidence cannot fire later than the tighter one."""
    rng = np.random.default_rng(4)
    det = Adwin(delta_drift=0.002, delta_warn=0.1)
    saw_warning_or_drift = None
    ticks = 0
    for v in np.concatenate([np.zeros(1_500), np.ones(1_500)]):
        r = det.update(float(v))
        ticks += 1
        if r in (WARNING, DRIFT) and saw_warning_or_drift is None:
            saw_warning_or_drift = (ticks, r)
        if r == DRIFT:
            break
    assert saw_warning_or_drift is not None


def test_detection_counter():
    det = Adwin()
    rng = np.random.default_rng(5)
    feed(det, rng.binomial(1, 0.05, 800).astype(float))
    feed(det, rng.binomial(1, 0.9, 400).astype(float))
    assert det.n_detections >= 1


def test_reset_clears_state():
    det = Adwin()
    feed(det, np.ones(100))
    det.reset()
    assert det.width == 0
    assert det.mean == 0.0


def test_delta_validation():
    with pytest.raises(ValueError):
        Adwin(delta_drift=0.0)
    with pytest.raises(ValueError):
        Adwin(delta_drift=0.01, delta_warn=0.001)


def test_bucket_memory_stays_logarithmic():
    """50k inserts: exponential histogram keeps only O(log n) buckets."""
    det = Adwin()
    rng = np.random.default_rng(6)
    feed(det, rng.binomial(1, 0.4, 50_000).astype(float))
    n_buckets = sum(len(row) for row in det._rows)
    assert n_buckets <= det.max_buckets * (int(np.log2(det.width)) + 2)


def test_variance_estimate_reasonable():
    rng = np.random.default_rng(7)
    det = Adwin()
    feed(det, rng.binomial(1, 0.5, 3_000).astype(float))
    assert abs(det.variance - 0.25) < 0.05

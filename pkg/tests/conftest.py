"""Shared fixtures: tiny window banks, random streams, disposable CSVs."""

import numpy as np
import pandas as pd
import pytest

from apustream.calibrate import WindowSpec
from apustream.features import FeatureExtractor, FeatureVector
from apustream.schema import (
    ANALOG_NAMES,
    N_SIGNALS,
    RawSample,
    SIGNAL_NAMES,
    format_timestamp,
)

EPOCH = 1_640_995_200  # 2022-01-01 00:00:00 UTC


@pytest.fixture
def small_spec() -> WindowSpec:
    return WindowSpec(w_avg=8, w_q1=4, w_q2=6, w_q3=10)


def random_samples(n, seed=0, start=EPOCH, scale=5.0):
    """n raw samples with independent noise on every channel (digitals 0/1)."""
    rng = np.random.default_rng(seed)
    values = rng.normal(10.0, scale, size=(n, N_SIGNALS))
    analog = [SIGNAL_NAMES.index(name) for name in ANALOG_NAMES]
    digital = [i for i in range(N_SIGNALS) if i not in analog]
    values[:, digital] = rng.integers(0, 2, size=(n, len(digital)))
    return [
        RawSample(seq_id=i, timestamp=start + i, values=values[i]) for i in range(n)
    ]


def feature_vectors(samples, spec):
    """Run samples through a fresh extractor, return the emitted vectors."""
    fx = FeatureExtractor(spec)
    out = []
    for s in samples:
        fv = fx.push(s)
        if isinstance(fv, FeatureVector):
            out.append(fv)
    return out


def write_sample_csv(path, samples, timestamp_col="timestamp"):
    """Full-precision CSV a CsvStream can parse back exactly."""
    df = pd.DataFrame(
        [s.values for s in samples], columns=list(SIGNAL_NAMES)
    )
    df.insert(0, timestamp_col, [format_timestamp(s.timestamp) for s in samples])
    df.to_csv(path, index=False, float_format="%.17g")
    return path


@pytest.fixture
def tiny_csv(tmp_path):
    samples = random_samples(600, seed=7)
    return write_sample_csv(tmp_path / "tiny.csv", samples), samples

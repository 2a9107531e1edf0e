"""Streaming predictive maintenance for train air production units.

End-to-end toolkit: CSV stream ingestion and labeling, duty-cycle window
calibration, sliding-window feature engineering, online variance-threshold
feature selection, incremental classifiers with drift adaptation, prequential
evaluation, and per-prediction explanations with static HTML reporting.
"""

__version__ = "0.1.0"

from .schema import (
    ClassLabel,
    FailureEvent,
    LabeledSample,
    RawSample,
    SIGNALS,
    SIGNAL_NAMES,
)

__all__ = [
    "ClassLabel",
    "FailureEvent",
    "LabeledSample",
    "RawSample",
    "SIGNALS",
    "SIGNAL_NAMES",
    "__version__",
]

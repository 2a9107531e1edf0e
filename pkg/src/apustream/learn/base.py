"""Shared learner plumbing: value coercion, anytime-predict contract."""

from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np

from ..errors import StreamSchemaError


def as_values(x) -> np.ndarray:
    """Accept a FeatureVector or a plain array; return the float64 vector."""
    values = getattr(x, "values", x)
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise StreamSchemaError(f"expected a 1-D feature vector, got shape {arr.shape}")
    return arr


def check_width(expected: int | None, arr: np.ndarray) -> int:
    """Bind the feature width on first use, enforce it afterwards."""
    if expected is None:
        return arr.shape[0]
    if arr.shape[0] != expected:
        raise StreamSchemaError(
            f"feature vector width changed: expected {expected}, got {arr.shape[0]}"
        )
    return expected


@runtime_checkable
class Classifier(Protocol):
    """Anytime incremental classifier over fixed-width numeric vectors."""

    n_classes: int

    def learn_one(self, x, y: int, weight: float = 1.0) -> None: ...

    def predict_one(self, x) -> tuple[int, np.ndarray]: ...

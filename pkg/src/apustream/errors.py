"""Exception hierarchy shared across the pipeline.

Exit-code mapping used by the CLI:

* ``ConfigError``      -> 2 (bad invocation, unreadable/invalid config)
* ``DataError``        -> 3 (malformed data that cannot be skipped row-wise)
* ``IntegrityError``   -> 4 (internal invariant violated; a bug, not bad input)

Everything else raised on purpose by library code derives from
``PipelineError`` so callers can catch one base class.
"""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for all errors raised deliberately by this package."""

    exit_code = 1


class ConfigError(PipelineError):
    """Invalid configuration, CLI arguments, or run setup."""

    exit_code = 2


class DataError(PipelineError):
    """Input data is malformed beyond what row-level skipping can absorb."""

    exit_code = 3


class SchemaError(DataError):
    """Stream header or record shape does not match the expected schema."""


class StreamSchemaError(SchemaError):
    """A feature vector or sample disagrees with the schema bound earlier."""


class CalibrationError(DataError):
    """Window calibration cannot proceed (e.g. no oscillation detected)."""


class EventError(DataError):
    """Failure-event metadata is invalid (bad interval, overlap, unknown label)."""


class IntegrityError(PipelineError):
    """An internal invariant was violated. Indicates a bug."""

    exit_code = 4


class NotReadyError(PipelineError):
    """A streaming operator was queried before it had enough data."""


class MetricsError(PipelineError):
    """Evaluation was asked to summarise an empty or inconsistent run."""


class UnsupportedModelError(PipelineError):
    """An operation (e.g. decision-path extraction) does not apply to the model."""


class TemplateError(PipelineError):
    """An explanation template references a field that does not exist."""


class CheckpointError(PipelineError):
    """A model checkpoint is unreadable or from an incompatible version."""

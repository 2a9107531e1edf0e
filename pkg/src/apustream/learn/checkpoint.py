"""Model checkpointing: versioned binary snapshots that resume bit-identically.

The snapshot pickles the whole model object (tree topology, leaf
statistics, detector buckets, RNG states, vote weights) inside an envelope
carrying a magic marker, format version, and caller metadata.  Loading
verifies the envelope before unpickling the payload.
"""

from __future__ import annotations

import os
import pickle
from pathlib import Path

from ..errors import CheckpointError

_MAGIC = "apustream-checkpoint"
_VERSION = 1


def save_checkpoint(model, path: str | os.PathLike, metadata: dict | None = None) -> None:
    envelope = {
        "magic": _MAGIC,
        "version": _VERSION,
        "model_class": type(model).__name__,
        "metadata": dict(metadata or {}),
        "model": model,
    }
    target = Path(path)
    tmp = target.with_suffix(target.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        pickle.dump(envelope, fh, protocol=pickle.HIGHEST_PROTOCOL)
    os.replace(tmp, target)


def load_checkpoint(path: str | os.PathLike) -> tuple[object, dict]:
    """Returns (model, metadata)."""
    try:
        with open(path, "rb") as fh:
            envelope = pickle.load(fh)
    except (OSError, pickle.UnpicklingError, EOFError) as exc:
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    if not isinstance(envelope, dict) or envelope.get("magic") != _MAGIC:
        raise CheckpointError(f"{path} is not a model checkpoint")
    version = envelope.get("version")
    if version != _VERSION:
        raise CheckpointError(
            f"checkpoint version {version} unsupported (expected {_VERSION})"
        )
    return envelope["model"], envelope.get("metadata", {})

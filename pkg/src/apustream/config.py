"""Run configuration: one YAML file, strict validation, flag overrides.

A run is fully described by a single mapping so results can be reproduced
from the config file alone.  Validation is strict: unknown keys anywhere in
the document are rejected (no silent typos), enumerations are checked, and
model hyperparameters must match the chosen family's constructor.  Command
line flags overlay the file and win on conflict.

``data`` is either a CSV path or the literal ``synthetic`` for the built-in
generated stream.  The ``seed`` drives every stochastic element of a run
(forest resampling, random downsampling); the synthetic stream keeps its own
fixed seed so changing the model seed never changes the data.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import yaml

from .errors import ConfigError
from .explain import PATTERN_REPORT_FLOOR_S, VALUE_REPORT_FLOOR_S
from .learn import MODEL_FAMILIES

SCENARIOS_ALLOWED = (1, 2)
SYNTHETIC = "synthetic"
_SEED_BOUND = 2**64


@dataclass(frozen=True)
class RunConfig:
    """Validated, immutable description of one pipeline run."""

    data: str = SYNTHETIC
    out: str = "runs/out"
    events: str | None = None  # None = built-in events (synthetic data only)
    scenario: int = 2
    windows: str = "auto"  # "auto" or a windows YAML written by calibrate
    variance_threshold: float = 0.5
    downsample_factor: int = 50
    downsample_mode: str = "stride"
    model_family: str = "arfc"
    model_params: dict = field(default_factory=dict)
    seed: int = 1
    calibration_days: float = 2.0
    burn_in_days: float = 2.0
    label_pre_window_s: int = 7_200
    explain_n_estimators: int | None = None  # None = all trees
    pattern_floor_s: float = PATTERN_REPORT_FLOOR_S
    value_floor_s: float = VALUE_REPORT_FLOOR_S
    synthetic_days: float = 10.0

    @property
    def is_synthetic(self) -> bool:
        return self.data == SYNTHETIC

    def to_dict(self) -> dict:
        """Canonical nested mapping; inverse of :func:`build_config`."""
        return {
            "data": self.data,
            "events": self.events,
            "out": self.out,
            "scenario": self.scenario,
            "windows": self.windows,
            "variance_threshold": self.variance_threshold,
            "seed": self.seed,
            "downsample": {
                "factor": self.downsample_factor,
                "mode": self.downsample_mode,
            },
            "model": {
                "family": self.model_family,
                "params": dict(self.model_params),
            },
            "explain": {
                "n_estimators": self.explain_n_estimators,
                "pattern_floor_s": self.pattern_floor_s,
                "value_floor_s": self.value_floor_s,
            },
            "calibration_days": self.calibration_days,
            "burn_in_days": self.burn_in_days,
            "label_pre_window_s": self.label_pre_window_s,
            "synthetic": {"days": self.synthetic_days},
        }

    def save(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))

    def validate_paths(self, need_events: bool = True, need_windows: bool = True) -> None:
        """Check that every input path this command will read exists."""
        if not self.is_synthetic and not Path(self.data).exists():
            raise ConfigError(f"data path does not exist: {self.data}")
        if not self.is_synthetic and need_events and self.events is None:
            raise ConfigError("CSV data needs an events file for ground-truth labels")
        if self.events is not None and not Path(self.events).exists():
            raise ConfigError(f"events path does not exist: {self.events}")
        if need_windows and self.windows != "auto" and not Path(self.windows).exists():
            raise ConfigError(f"windows path does not exist: {self.windows}")


def _require(doc: Mapping, allowed: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _as_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def _as_float(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _check_model_params(family: str, params: dict) -> dict:
    cls = MODEL_FAMILIES[family]
    accepted = [
        p for p in inspect.signature(cls.__init__).parameters if p != "self"
    ]
    unknown = sorted(set(params) - set(accepted))
    if unknown:
        raise ConfigError(
            f"model family {family!r} does not accept parameter(s): "
            f"{', '.join(unknown)} (accepted: {', '.join(accepted)})"
        )
    return dict(params)


_TOP_KEYS = (
    "data",
    "events",
    "out",
    "scenario",
    "windows",
    "variance_threshold",
    "seed",
    "downsample",
    "model",
    "explain",
    "calibration_days",
    "burn_in_days",
    "label_pre_window_s",
    "synthetic",
)


def build_config(doc: Mapping) -> RunConfig:
    """Validate a nested mapping into a RunConfig; reject unknown keys."""
    if not isinstance(doc, Mapping):
        raise ConfigError(f"config must be a mapping, got {type(doc).__name__}")
    _require(doc, _TOP_KEYS, "config")

    down = doc.get("downsample", {}) or {}
    if not isinstance(down, Mapping):
        raise ConfigError("'downsample' must be a mapping")
    _require(down, ("factor", "mode"), "downsample")

    model = doc.get("model", {}) or {}
    if not isinstance(model, Mapping):
        raise ConfigError("'model' must be a mapping")
    _require(model, ("family", "params"), "model")
    params = model.get("params", {}) or {}
    if not isinstance(params, Mapping):
        raise ConfigError("'model.params' must be a mapping")

    explain = doc.get("explain", {}) or {}
    if not isinstance(explain, Mapping):
        raise ConfigError("'explain' must be a mapping")
    _require(explain, ("n_estimators", "pattern_floor_s", "value_floor_s"), "explain")

    synth = doc.get("synthetic", {}) or {}
    if not isinstance(synth, Mapping):
        raise ConfigError("'synthetic' must be a mapping")
    _require(synth, ("days",), "synthetic")

    base = RunConfig()
    cfg = RunConfig(
        data=str(doc.get("data", base.data)),
        events=None if doc.get("events") is None else str(doc["events"]),
        out=str(doc.get("out", base.out)),
        scenario=_as_int(doc.get("scenario", base.scenario), "scenario"),
        windows=str(doc.get("windows", base.windows)),
        variance_threshold=_as_float(
            doc.get("variance_threshold", base.variance_threshold),
            "variance_threshold",
        ),
        seed=_as_int(doc.get("seed", base.seed), "seed"),
        downsample_factor=_as_int(
            down.get("factor", base.downsample_factor), "downsample.factor"
        ),
        downsample_mode=str(down.get("mode", base.downsample_mode)),
        model_family=str(model.get("family", base.model_family)).lower(),
        model_params=dict(params),
        explain_n_estimators=(
            None
            if explain.get("n_estimators", base.explain_n_estimators) is None
            else _as_int(explain["n_estimators"], "explain.n_estimators")
        ),
        pattern_floor_s=_as_float(
            explain.get("pattern_floor_s", base.pattern_floor_s),
            "explain.pattern_floor_s",
        ),
        value_floor_s=_as_float(
            explain.get("value_floor_s", base.value_floor_s),
            "explain.value_floor_s",
        ),
        calibration_days=_as_float(
            doc.get("calibration_days", base.calibration_days), "calibration_days"
        ),
        burn_in_days=_as_float(doc.get("burn_in_days", base.burn_in_days), "burn_in_days"),
        label_pre_window_s=_as_int(
            doc.get("label_pre_window_s", base.label_pre_window_s),
            "label_pre_window_s",
        ),
        synthetic_days=_as_float(synth.get("days", base.synthetic_days), "synthetic.days"),
    )
    return validate_config(cfg)


def validate_config(cfg: RunConfig) -> RunConfig:
    if cfg.scenario not in SCENARIOS_ALLOWED:
        raise ConfigError(f"scenario must be 1 or 2, got {cfg.scenario}")
    if cfg.model_family not in MODEL_FAMILIES:
        raise ConfigError(
            f"unknown model family {cfg.model_family!r} "
            f"(choose from {', '.join(sorted(MODEL_FAMILIES))})"
        )
    if not -(2**63) <= cfg.seed < _SEED_BOUND:
        raise ConfigError(f"seed must fit in 64 bits, got {cfg.seed}")
    if cfg.downsample_factor < 1:
        raise ConfigError(f"downsample factor must be >= 1, got {cfg.downsample_factor}")
    if cfg.downsample_mode not in ("stride", "random"):
        raise ConfigError(f"downsample mode must be stride or random, got {cfg.downsample_mode!r}")
    if cfg.variance_threshold < 0:
        raise ConfigError(f"variance threshold must be >= 0, got {cfg.variance_threshold}")
    if cfg.calibration_days <= 0:
        raise ConfigError(f"calibration_days must be positive, got {cfg.calibration_days}")
    if cfg.burn_in_days <= 0:
        raise ConfigError(f"burn_in_days must be positive, got {cfg.burn_in_days}")
    if cfg.label_pre_window_s < 0:
        raise ConfigError(f"label_pre_window_s must be >= 0, got {cfg.label_pre_window_s}")
    if cfg.explain_n_estimators is not None and cfg.explain_n_estimators < 1:
        raise ConfigError(
            f"explain.n_estimators must be >= 1, got {cfg.explain_n_estimators}"
        )
    if cfg.pattern_floor_s < 0 or cfg.value_floor_s < 0:
        raise ConfigError("anomaly reporting floors must be >= 0")
    if cfg.synthetic_days <= 0:
        raise ConfigError(f"synthetic.days must be positive, got {cfg.synthetic_days}")
    _check_model_params(cfg.model_family, cfg.model_params)
    return cfg


def load_config(path) -> dict:
    """Read a YAML config document (must be a mapping or empty)."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file does not exist: {p}")
    try:
        doc = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {p}: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config {p} must be a mapping, got {type(doc).__name__}")
    return doc


# Flag name -> nested config path.  Flags overlay the file and win.
_FLAG_PATHS: dict[str, tuple[str, ...]] = {
    "data": ("data",),
    "events": ("events",),
    "out": ("out",),
    "scenario": ("scenario",),
    "windows": ("windows",),
    "variance_threshold": ("variance_threshold",),
    "seed": ("seed",),
    "downsample_factor": ("downsample", "factor"),
    "downsample_mode": ("downsample", "mode"),
    "model": ("model", "family"),
    "explain_n_estimators": ("explain", "n_estimators"),
    "synthetic_days": ("synthetic", "days"),
}


def merge_flags(doc: dict, flags: Mapping) -> dict:
    """Overlay non-None CLI flag values onto a config document."""
    merged = {k: (dict(v) if isinstance(v, dict) else v) for k, v in doc.items()}
    for flag, value in flags.items():
        if value is None:
            continue
        try:
            path = _FLAG_PATHS[flag]
        except KeyError:
            raise ConfigError(f"no config mapping for flag {flag!r}") from None
        node = merged
        for key in path[:-1]:
            child = node.get(key)
            if not isinstance(child, dict):
                child = {}
                node[key] = child
            node = child
        node[path[-1]] = value
    return merged


def resolve_config(config_path: str | None, flags: Mapping | None = None) -> RunConfig:
    """File (optional) + flag overlay -> validated RunConfig."""
    doc = load_config(config_path) if config_path else {}
    if flags:
        doc = merge_flags(doc, flags)
    return build_config(doc)


def with_output_dir(cfg: RunConfig, out) -> RunConfig:
    return replace(cfg, out=str(out))

"""End-to-end run orchestration.

Stage order for a run: open the data source, calibrate (or load) the
sliding-window lengths, restrict the stream to the evaluation window around
the failure reports, thin it, attach labels, extract features, accumulate
feature variances over a burn-in, freeze the scenario selection, then
evaluate test-then-train with per-sample explanations and anomaly tracking.
Artifacts land under the configured output directory with stable names;
the only timestamp lives in the summary header.

Errors raised inside a stage are re-raised with the stage name prefixed so
a failing run names the stage that broke.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from . import kernels, __version__
from .calibrate import (
    WindowSpec,
    calibrate_windows,
    calibration_slice,
    load_windows,
    save_windows,
)
from .config import RunConfig
from .errors import ConfigError, DataError, MetricsError, PipelineError
from .eval import (
    GRIDS,
    GridResult,
    PredictionRecord,
    PrequentialMetrics,
    grid_search,
    prequential_run,
)
from .explain import AnomalyTracker, Explanation, ExplanationAccumulator, build_explanation
from .features import FeatureExtractor, FeatureName, FeatureVector
from .ingest import downsample, filter_evaluation_window, label_stream, load_events, parse_stream
from .learn import MODEL_FAMILIES
from .report import (
    TraceData,
    build_summary,
    record_dict,
    write_html_report,
    write_records,
    write_summary,
)
from .schema import ANALOG_NAMES, CLASS_LABELS, ClassLabel, FailureEvent, RawSample
from .select import SelectionResult, apply_selection, save_selection, scenario_selection, VarianceState
from .synthdata import SynthConfig, generate

import inspect


@contextmanager
def stage(name: str):
    """Prefix any pipeline error with the failing stage's name."""
    try:
        yield
    except PipelineError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


class SourceBundle:
    """A re-iterable sample source plus its failure reports."""

    def __init__(self, name: str, make_stream: Callable[[], object],
                 events: list[FailureEvent]):
        self.name = name
        self._make = make_stream
        self.events = events
        self.last_stream = None

    def samples(self) -> Iterator[RawSample]:
        self.last_stream = self._make()
        return iter(self.last_stream)

    @property
    def parse_stats(self):
        return getattr(self.last_stream, "stats", None)


def open_source(cfg: RunConfig) -> SourceBundle:
    """Resolve the configured data source into samples + events."""
    if cfg.is_synthetic:
        try:
            stream = generate(SynthConfig(days=cfg.synthetic_days))
        except ValueError as exc:
            raise ConfigError(f"synthetic stream: {exc}") from exc
        events = load_events(cfg.events) if cfg.events else stream.events()
        return SourceBundle("synthetic", lambda: stream.iter_samples(), events)
    path = Path(cfg.data)
    if not path.exists():
        raise ConfigError(f"data path does not exist: {path}")
    if cfg.events is None:
        raise ConfigError("CSV data needs an events file for ground-truth labels")
    events = load_events(cfg.events)
    return SourceBundle(path.stem, lambda: parse_stream(path), events)


def acquire_windows(cfg: RunConfig, source: SourceBundle) -> WindowSpec:
    if cfg.windows != "auto":
        return load_windows(cfg.windows)
    return calibrate_windows(
        calibration_slice(source.samples(), cfg.calibration_days)
    )


def build_model(cfg: RunConfig):
    cls = MODEL_FAMILIES[cfg.model_family]
    params = dict(cfg.model_params)
    if "seed" in inspect.signature(cls.__init__).parameters:
        params.setdefault("seed", cfg.seed)
    try:
        return cls(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model construction failed: {exc}") from exc


@dataclass
class _StreamState:
    """Mutable state shared between the feature generator and the run loop."""

    selection: SelectionResult | None = None
    burn_in_s: float = 0.0
    burn_in_vectors: int = 0
    feature_s: float = 0.0  # post-freeze feature engineering + projection time
    trace_ts: list = field(default_factory=list)
    trace_rows: list = field(default_factory=list)
    last_report: object = None


def _feature_stream(
    cfg: RunConfig,
    source: SourceBundle,
    fx: FeatureExtractor,
    state: VarianceState,
    tracker: AnomalyTracker | None,
    holder: _StreamState,
) -> Iterator[tuple[FeatureVector, int]]:
    """Yield (projected feature vector, label) pairs after the selection freeze."""
    raw = filter_evaluation_window(source.samples(), source.events)
    thin = downsample(raw, cfg.downsample_factor, cfg.downsample_mode, seed=cfg.seed)
    labeled = label_stream(thin, source.events, cfg.label_pre_window_s)

    raw_analog = fx.schema.positions(
        [FeatureName(s, "raw", "none") for s in ANALOG_NAMES]
    )
    burn_end: int | None = None
    t0 = time.perf_counter()
    for ls in labeled:
        t_push = time.perf_counter()
        fv = fx.push(ls.sample)
        if not isinstance(fv, FeatureVector):
            continue
        if holder.selection is None:
            if burn_end is None:
                burn_end = fv.timestamp + int(cfg.burn_in_days * 86_400)
            if fv.timestamp < burn_end:
                state.update(fv)
                continue
            holder.selection = scenario_selection(
                state, cfg.scenario, cfg.variance_threshold
            )
            holder.burn_in_s = time.perf_counter() - t0
            holder.burn_in_vectors = state.n
            if not holder.selection.features:
                raise DataError(
                    "feature selection kept nothing: no candidate feature's "
                    f"variance exceeded {cfg.variance_threshold} over "
                    f"{state.n} burn-in vectors"
                )
        projected = apply_selection(fv, holder.selection)
        holder.feature_s += time.perf_counter() - t_push
        if tracker is not None:
            holder.last_report = tracker.update(fv)
        holder.trace_ts.append(fv.timestamp)
        holder.trace_rows.append(fv.values[raw_analog])
        yield projected, int(ls.label)


@dataclass
class RunResult:
    config: RunConfig
    source_name: str
    windows: WindowSpec
    selection: SelectionResult
    metrics: PrequentialMetrics
    records: list[PredictionRecord]
    explanations: list[Explanation] | None
    timing: dict
    run_info: dict
    model: object
    traces: TraceData | None


def run_pipeline(cfg: RunConfig, progress: Callable[[str], None] | None = None) -> RunResult:
    """Execute a full run; artifacts are emitted separately."""
    say = progress or (lambda msg: None)
    t_total = time.perf_counter()
    timing: dict = {}

    with stage("source"):
        t0 = time.perf_counter()
        source = open_source(cfg)
        timing["source_s"] = round(time.perf_counter() - t0, 3)
    say(f"source: {source.name}, {len(source.events)} failure report(s)")

    with stage("calibrate"):
        t0 = time.perf_counter()
        windows = acquire_windows(cfg, source)
        timing["calibrate_s"] = round(time.perf_counter() - t0, 3)
    say(f"windows: {windows.as_dict()}")

    fx = FeatureExtractor(windows)
    state = VarianceState(fx.schema)
    holder = _StreamState()
    model = build_model(cfg)
    explainable = cfg.model_family != "gnb"
    tracker = AnomalyTracker(fx.schema) if explainable else None
    accumulator = ExplanationAccumulator()
    explanations: list[Explanation] | None = [] if explainable else None

    def on_predict(proj_fv, pred):
        explanations.append(
            build_explanation(
                model,
                proj_fv,
                ClassLabel(pred),
                accumulator,
                holder.last_report,
                n_estimators=cfg.explain_n_estimators,
                pattern_floor_s=cfg.pattern_floor_s,
                value_floor_s=cfg.value_floor_s,
            )
        )

    with stage("prequential"):
        t0 = time.perf_counter()
        pairs = _feature_stream(cfg, source, fx, state, tracker, holder)
        try:
            metrics, records = prequential_run(
                model, pairs, on_predict=on_predict if explainable else None
            )
        except MetricsError as exc:
            raise DataError(
                f"stream produced no evaluable samples after the burn-in ({exc})"
            ) from exc
        timing["prequential_s"] = round(time.perf_counter() - t0, 3)

    selection = holder.selection
    timing["burn_in_s"] = round(holder.burn_in_s, 3)
    timing["feature_s"] = round(holder.feature_s, 3)
    timing["model_s"] = round(metrics.wall_seconds, 3)
    timing["model_samples_per_second"] = round(metrics.samples_per_second, 1)
    # Headline rate: feature engineering + selection + predict + learn.
    # Parse/labeling and explanation overhead are audited separately via
    # prequential_s vs burn_in_s.
    core_s = max(holder.feature_s + metrics.wall_seconds, 1e-9)
    timing["samples_per_second"] = round(metrics.n_samples / core_s, 1)
    loop_s = max(timing["prequential_s"] - holder.burn_in_s, 1e-9)
    timing["end_to_end_samples_per_second"] = round(metrics.n_samples / loop_s, 1)
    timing["total_s"] = round(time.perf_counter() - t_total, 3)
    say(
        f"run: {metrics.n_samples} samples, accuracy {metrics.accuracy:.4f}, "
        f"macro F {metrics.macro_f:.4f}"
    )

    run_info = {
        "data": cfg.data,
        "source": source.name,
        "events": cfg.events,
        "scenario": cfg.scenario,
        "model": cfg.model_family,
        "model_params": dict(cfg.model_params),
        "seed": cfg.seed,
        "downsample_factor": cfg.downsample_factor,
        "downsample_mode": cfg.downsample_mode,
        "variance_threshold": cfg.variance_threshold,
        "windows": windows.as_dict(),
        "n_features": len(selection.features),
        "sensors": list(selection.sensors),
        "burn_in_vectors": holder.burn_in_vectors,
        "kernel_backend": kernels.BACKEND,
        "version": __version__,
    }
    stats = source.parse_stats
    if stats is not None:
        run_info["parse"] = {
            "rows_read": stats.rows_read,
            "rows_emitted": stats.rows_emitted,
            "rows_skipped": stats.rows_skipped,
            "out_of_order": stats.out_of_order,
        }

    traces = None
    if holder.trace_ts:
        matrix = np.vstack(holder.trace_rows)
        traces = TraceData(
            timestamps=np.asarray(holder.trace_ts, dtype=np.int64),
            sensors={name: matrix[:, j] for j, name in enumerate(ANALOG_NAMES)},
            predictions=np.array([int(r.predicted) for r in records], dtype=np.int64),
        )

    return RunResult(
        config=cfg,
        source_name=source.name,
        windows=windows,
        selection=selection,
        metrics=metrics,
        records=records,
        explanations=explanations,
        timing=timing,
        run_info=run_info,
        model=model,
        traces=traces,
    )


def example_texts(result: RunResult, per_class: int = 1) -> list[tuple[str, str]]:
    """First explanation for each predicted class, in class order."""
    if not result.explanations:
        return []
    picked: dict[int, list[tuple[str, str]]] = {int(c): [] for c in CLASS_LABELS}
    for expl in result.explanations:
        bucket = picked[int(expl.predicted)]
        if len(bucket) < per_class:
            bucket.append(
                (f"Sample {expl.seq_id}: predicted {expl.predicted.name}", expl.text)
            )
    return [item for c in CLASS_LABELS for item in picked[int(c)]]


def emit_run_artifacts(result: RunResult, out_dir=None) -> dict[str, Path]:
    """Write every run artifact under the output directory; stable names."""
    out = Path(out_dir if out_dir is not None else result.config.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    paths = {
        "config": out / "config.yaml",
        "windows": out / "windows.yaml",
        "selection": out / "selection.txt",
        "records": out / "records.jsonl",
        "summary": out / "summary.json",
        "report": out / "report.html",
    }
    result.config.save(paths["config"])
    save_windows(result.windows, paths["windows"])
    save_selection(result.selection, paths["selection"])

    expls = result.explanations or [None] * len(result.records)
    write_records(
        paths["records"],
        (record_dict(r, e) for r, e in zip(result.records, expls)),
    )

    timing = dict(result.timing)
    timing["emit_s"] = round(time.perf_counter() - t0, 3)
    summary = build_summary(result.metrics, timing, result.run_info)
    write_summary(paths["summary"], summary)
    write_html_report(
        paths["report"], summary, example_texts(result), traces=result.traces
    )
    return paths


# -- hyperparameter tuning --------------------------------------------------------

TUNING_THIN_FACTOR = 10  # random 1-in-10 on top of the stride-50 stream


def tuning_pairs(cfg: RunConfig, progress: Callable[[str], None] | None = None
                 ) -> list[tuple[FeatureVector, int]]:
    """Materialized tuning subset: the run stream randomly thinned 10x.

    Stacked on the default stride-50 thinning this works out to one sample
    in 500 of the raw stream, drawn reproducibly from the config seed.
    """
    say = progress or (lambda msg: None)
    with stage("source"):
        source = open_source(cfg)
    with stage("calibrate"):
        windows = acquire_windows(cfg, source)
    say(f"windows: {windows.as_dict()}")

    fx = FeatureExtractor(windows)
    state = VarianceState(fx.schema)
    holder = _StreamState()
    with stage("tuning-stream"):
        stream = _feature_stream(cfg, source, fx, state, tracker=None, holder=holder)
        pairs = list(
            downsample(stream, TUNING_THIN_FACTOR, mode="random", seed=cfg.seed)
        )
    if not pairs:
        raise DataError("tuning subset is empty; stream too short for the burn-in")
    say(f"tuning subset: {len(pairs)} samples, {len(holder.selection.features)} features")
    return pairs


def run_tuning(cfg: RunConfig, progress: Callable[[str], None] | None = None) -> GridResult:
    grid = GRIDS.get(cfg.model_family)
    if not grid:
        raise ConfigError(
            f"model family {cfg.model_family!r} has an empty hyperparameter grid"
        )
    pairs = tuning_pairs(cfg, progress)

    cls = MODEL_FAMILIES[cfg.model_family]
    base = dict(cfg.model_params)
    if "seed" in inspect.signature(cls.__init__).parameters:
        base.setdefault("seed", cfg.seed)

    def factory(**point):
        return cls(**{**base, **point})

    with stage("grid-search"):
        return grid_search(factory, grid, pairs)


def emit_leaderboard(result: GridResult, out_dir) -> Path:
    """Persist the ranked grid as JSON; best point first."""
    import json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "leaderboard.json"
    rows = [
        {
            "rank": i + 1,
            "params": point.params,
            "accuracy": point.metrics.accuracy,
            "macro_f": point.metrics.macro_f,
            "micro_f": point.metrics.micro_f,
            "n_samples": point.metrics.n_samples,
            "wall_seconds": round(point.metrics.wall_seconds, 4),
        }
        for i, point in enumerate(result.leaderboard)
    ]
    doc = {"best": rows[0], "leaderboard": rows}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path

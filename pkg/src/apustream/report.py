"""Run artifacts: prediction records (JSONL), run summary (JSON) and a
self-contained HTML report.

Record files are deterministic: a re-run over the same inputs with the same
configuration produces byte-identical JSONL and HTML.  Wall-clock facts
(latency, throughput, the generation timestamp) live only in the summary.
"""

from __future__ import annotations

import html
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .eval import PredictionRecord, PrequentialMetrics
from .explain import Explanation
from .schema import ClassLabel

_JSON_KW = {"sort_keys": True, "separators": (",", ":")}

CLASS_COLORS = {
    "NonFailure": "#4c9f70",
    "OilLeakCompressor": "#c0392b",
    "AirLeakDryer": "#2471a3",
    "AirLeakClient": "#b7950b",
}


def record_dict(record: PredictionRecord, explanation: Explanation | None = None) -> dict:
    """One JSONL row; intentionally excludes latency so files replay equal."""
    row = {
        "seq_id": record.seq_id,
        "timestamp": record.timestamp,
        "true": ClassLabel(record.true).name,
        "predicted": ClassLabel(record.predicted).name,
    }
    if explanation is not None:
        row["top_features"] = [
            {
                "sensor": pf.feature.sensor,
                "metric": pf.feature.metric,
                "window": pf.feature.window,
                "frequency": pf.frequency,
            }
            for pf in explanation.top_features
        ]
        row["model_summary"] = explanation.summary.as_dict()
        row["anomalies"] = [
            {"sensor": sensor, "kind": kind, "seconds": seconds}
            for sensor, kind, seconds in explanation.anomalies.over_thresholds()
        ]
        row["text"] = explanation.text
    return row


def write_records(path, rows: Iterable[dict]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, **_JSON_KW))
            fh.write("\n")
            n += 1
    return n


def load_records(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"records file not found: {path}")
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid record: {exc}") from exc
    return rows


def metrics_dict(metrics: PrequentialMetrics) -> dict:
    return {
        "n_samples": metrics.n_samples,
        "accuracy": metrics.accuracy,
        "micro_f": metrics.micro_f,
        "macro_f": metrics.macro_f,
        "per_class_f": {
            ClassLabel(i).name: f for i, f in enumerate(metrics.per_class_f)
        },
        "confusion": metrics.confusion.counts.tolist(),
    }


def build_summary(
    metrics: PrequentialMetrics,
    timing: dict,
    run_info: dict,
    generated_at: str | None = None,
) -> dict:
    """Assemble summary.json content; timestamp header is injected here only."""
    if generated_at is None:
        generated_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return {
        "generated_at": generated_at,
        "run": run_info,
        "metrics": metrics_dict(metrics),
        "timing": timing,
    }


def write_summary(path, summary: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


@dataclass
class TraceData:
    """Downsampled raw traces plus the aligned prediction timeline."""

    timestamps: np.ndarray
    sensors: dict[str, np.ndarray] = field(default_factory=dict)
    predictions: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = len(self.timestamps)
        for name, series in self.sensors.items():
            if len(series) != n:
                raise ValueError(f"trace length mismatch for {name}")
        if self.predictions is not None and len(self.predictions) != n:
            raise ValueError("prediction trace length mismatch")


def _decimate(arr: np.ndarray, max_points: int) -> np.ndarray:
    if len(arr) <= max_points:
        return arr
    step = int(np.ceil(len(arr) / max_points))
    return arr[::step]


def _svg_polyline(ts, ys, width=760, height=120, pad=6, color="#2471a3") -> str:
    ts = np.asarray(ts, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(ts) < 2:
        return "<svg/>"
    t0, t1 = float(ts[0]), float(ts[-1])
    lo, hi = float(np.min(ys)), float(np.max(ys))
    if hi - lo < 1e-12:
        hi = lo + 1.0
    span_t = max(t1 - t0, 1.0)
    xs = pad + (ts - t0) / span_t * (width - 2 * pad)
    yy = height - pad - (ys - lo) / (hi - lo) * (height - 2 * pad)
    pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(xs, yy))
    return (
        f'<svg viewBox="0 0 {width} {height}" width="{width}" height="{height}" '
        f'xmlns="http://www.w3.org/2000/svg">'
        f'<rect width="{width}" height="{height}" fill="#fafafa"/>'
        f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1"/>'
        f"</svg>"
    )


def _svg_prediction_strip(ts, preds, width=760, height=24, pad=6) -> str:
    ts = np.asarray(ts, dtype=np.float64)
    preds = np.asarray(preds, dtype=np.int64)
    if len(ts) < 2:
        return "<svg/>"
    t0, t1 = float(ts[0]), float(ts[-1])
    span_t = max(t1 - t0, 1.0)
    rects = []
    start = 0
    for i in range(1, len(preds) + 1):
        if i == len(preds) or preds[i] != preds[start]:
            x0 = pad + (ts[start] - t0) / span_t * (width - 2 * pad)
            x1 = pad + (ts[i - 1] - t0) / span_t * (width - 2 * pad)
            color = CLASS_COLORS[ClassLabel(int(preds[start])).name]
            rects.append(
                f'<rect x="{x0:.1f}" y="2" width="{max(x1 - x0, 1.0):.1f}" '
                f'height="{height - 4}" fill="{color}"/>'
            )
            start = i
    return (
        f'<svg viewBox="0 0 {width} {height}" width="{width}" height="{height}" '
        f'xmlns="http://www.w3.org/2000/svg">' + "".join(rects) + "</svg>"
    )


def _metrics_table(summary: dict) -> str:
    m = summary["metrics"]
    per_class = m["per_class_f"]
    head = (
        "<tr><th>Samples</th><th>Accuracy</th><th>Micro F</th><th>Macro F</th>"
        + "".join(f"<th>F ({html.escape(k)})</th>" for k in per_class)
        + "</tr>"
    )
    body = (
        f"<tr><td>{m['n_samples']}</td><td>{m['accuracy']:.4f}</td>"
        f"<td>{m['micro_f']:.4f}</td><td>{m['macro_f']:.4f}</td>"
        + "".join(f"<td>{v:.4f}</td>" for v in per_class.values())
        + "</tr>"
    )
    return f"<table>{head}{body}</table>"


def _confusion_table(summary: dict) -> str:
    conf = summary["metrics"]["confusion"]
    names = [ClassLabel(i).name for i in range(len(conf))]
    head = "<tr><th>true \\ predicted</th>" + "".join(
        f"<th>{html.escape(n)}</th>" for n in names
    ) + "</tr>"
    rows = []
    for i, row in enumerate(conf):
        cells = "".join(f"<td>{v}</td>" for v in row)
        rows.append(f"<tr><th>{html.escape(names[i])}</th>{cells}</tr>")
    return f"<table>{head}{''.join(rows)}</table>"


def _kv_table(data: dict) -> str:
    # Sorted so the table is stable whether the dict came from memory or a
    # JSON round-trip.
    rows = "".join(
        f"<tr><th>{html.escape(str(k))}</th><td>{html.escape(str(v))}</td></tr>"
        for k, v in sorted(data.items(), key=lambda kv: str(kv[0]))
    )
    return f"<table>{rows}</table>"


_HTML_STYLE = """
body { font-family: sans-serif; margin: 2em; max-width: 60em; }
table { border-collapse: collapse; margin: 0.6em 0; }
th, td { border: 1px solid #bbb; padding: 0.25em 0.7em; text-align: left; }
th { background: #f0f0f0; }
pre { background: #f7f7f7; border: 1px solid #ddd; padding: 0.8em; overflow-x: auto; }
h2 { margin-top: 1.6em; }
.legend span { display: inline-block; padding: 0.1em 0.6em; margin-right: 0.6em;
color: #fff; border-radius: 3px; font-size: 0.85em; }
"""


def write_html_report(
    path,
    summary: dict,
    example_texts: Sequence[tuple[str, str]] = (),
    traces: TraceData | None = None,
    max_trace_points: int = 2000,
) -> None:
    """Self-contained report: metrics, confusion, explanations, raw traces."""
    parts = [
        "<!doctype html><html><head><meta charset='utf-8'>",
        "<title>Streaming run report</title>",
        f"<style>{_HTML_STYLE}</style></head><body>",
        "<h1>Streaming run report</h1>",
        f"<p>Generated at {html.escape(summary['generated_at'])}</p>",
        "<h2>Run</h2>",
        _kv_table(summary.get("run", {})),
        "<h2>Metrics</h2>",
        _metrics_table(summary),
        "<h2>Confusion matrix</h2>",
        _confusion_table(summary),
        "<h2>Timing</h2>",
        _kv_table(summary.get("timing", {})),
    ]
    if example_texts:
        parts.append("<h2>Example explanations</h2>")
        for title, text in example_texts:
            parts.append(f"<h3>{html.escape(title)}</h3>")
            parts.append(f"<pre>{html.escape(text)}</pre>")
    if traces is not None and len(traces.timestamps) >= 2:
        parts.append("<h2>Raw signal traces</h2>")
        keep = _decimate(np.arange(len(traces.timestamps)), max_trace_points)
        ts = traces.timestamps[keep]
        if traces.predictions is not None:
            legend = "".join(
                f'<span style="background:{c}">{html.escape(n)}</span>'
                for n, c in CLASS_COLORS.items()
            )
            parts.append(f'<p class="legend">{legend}</p>')
            parts.append("<h3>Predicted class</h3>")
            parts.append(_svg_prediction_strip(ts, traces.predictions[keep]))
        for name in sorted(traces.sensors):
            parts.append(f"<h3>{html.escape(name)}</h3>")
            parts.append(_svg_polyline(ts, traces.sensors[name][keep]))
    parts.append("</body></html>")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")

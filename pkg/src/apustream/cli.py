"""Command line interface: calibrate, tune, run, explain, report.

One YAML config file describes a run; flags overlay it and win on conflict.
All artifacts land under ``--out`` with stable names.  Exit codes: 0 on
success, 2 for usage/config problems, 3 for data problems, 4 for internal
invariant violations.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .calibrate import calibrate_windows, calibration_slice, save_windows
from .config import resolve_config
from .errors import ConfigError, PipelineError
from .eval import GRIDS
from .learn import MODEL_FAMILIES
from .pipeline import (
    acquire_windows,
    emit_leaderboard,
    emit_run_artifacts,
    open_source,
    run_pipeline,
    run_tuning,
    stage,
)
from .report import load_records, write_html_report
from .schema import CLASS_LABELS

_CLASS_SHORT = {
    "NonFailure": "NonFail",
    "OilLeakCompressor": "OilLeak",
    "AirLeakDryer": "AirDry",
    "AirLeakClient": "AirClnt",
}


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML run config; flags override it")
    p.add_argument("--data", help="CSV path or 'synthetic'")
    p.add_argument("--events", help="failure reports YAML")
    p.add_argument("--out", help="output directory")
    p.add_argument("--scenario", type=int, choices=(1, 2))
    p.add_argument("--windows", help="'auto' or a windows YAML from calibrate")
    p.add_argument("--seed", type=int)
    p.add_argument("--model", choices=sorted(MODEL_FAMILIES))
    p.add_argument("--variance-threshold", type=float, dest="variance_threshold")
    p.add_argument("--downsample-factor", type=int, dest="downsample_factor")
    p.add_argument(
        "--downsample-mode", choices=("stride", "random"), dest="downsample_mode"
    )
    p.add_argument(
        "--explain-n-estimators", type=int, dest="explain_n_estimators",
        help="trees inspected per explanation (default: all)",
    )
    p.add_argument("--synthetic-days", type=float, dest="synthetic_days")


_FLAG_NAMES = (
    "data",
    "events",
    "out",
    "scenario",
    "windows",
    "seed",
    "model",
    "variance_threshold",
    "downsample_factor",
    "downsample_mode",
    "explain_n_estimators",
    "synthetic_days",
)


def _config_from(args: argparse.Namespace):
    flags = {name: getattr(args, name, None) for name in _FLAG_NAMES}
    return resolve_config(args.config, flags)


def _table5_header(name_width: int) -> str:
    cells = [
        "model".ljust(name_width),
        f"{'Acc%':>7}",
        f"{'MacroF%':>7}",
        *(f"{_CLASS_SHORT[c.name]:>7}" for c in CLASS_LABELS),
        f"{'Time(s)':>9}",
    ]
    return " | ".join(cells)


def cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    cfg.validate_paths(need_events=False, need_windows=False)
    with stage("source"):
        source = open_source(cfg)
    with stage("calibrate"):
        spec = calibrate_windows(
            calibration_slice(source.samples(), cfg.calibration_days)
        )
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "windows.yaml"
    save_windows(spec, path)
    for slot, w in spec.as_dict().items():
        print(f"{slot}: {w}")
    _say(f"wrote {path}")
    return 0


def cmd_tune(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    if not GRIDS.get(cfg.model_family):
        print(f"{cfg.model_family}: no hyperparameters; nothing to tune")
        return 0
    cfg.validate_paths()
    result = run_tuning(cfg, progress=_say)
    path = emit_leaderboard(result, cfg.out)
    best = result.best
    print(
        f"best {cfg.model_family} params: {best.params} "
        f"(macro F {best.metrics.macro_f:.4f}, accuracy {best.metrics.accuracy:.4f}, "
        f"{len(result.leaderboard)} grid points)"
    )
    _say(f"wrote {path}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    cfg.validate_paths()
    result = run_pipeline(cfg, progress=_say)
    paths = emit_run_artifacts(result)
    name = f"{cfg.model_family}/s{cfg.scenario}"
    print(_table5_header(len(name)))
    print(result.metrics.table_row(name))
    _say(f"samples/second: {result.timing['samples_per_second']}")
    for key in ("records", "summary", "report"):
        _say(f"wrote {paths[key]}")
    return 0


def _parse_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise ConfigError(f"range must look like A:B, got {text!r}")
    try:
        a, b = int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"range bounds must be integers, got {text!r}") from None
    if b < a:
        raise ConfigError(f"empty range: {text!r}")
    return a, b


def cmd_explain(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    records_path = Path(cfg.out) / "records.jsonl"
    rows = load_records(records_path)
    if args.seq is None and args.range is None:
        raise ConfigError("pass --seq N (repeatable) or --range A:B")

    wanted: list[int] = list(args.seq or [])
    by_id = {row["seq_id"]: row for row in rows}
    if args.range is not None:
        a, b = _parse_range(args.range)
        in_range = [sid for sid in by_id if a <= sid <= b]
        if not in_range:
            raise ConfigError(f"no recorded samples with seq_id in [{a}, {b}]")
        wanted.extend(sorted(in_range))

    missing = [sid for sid in wanted if sid not in by_id]
    if missing:
        raise ConfigError(
            f"unknown seq_id(s): {', '.join(map(str, missing))} "
            f"(records: {records_path})"
        )
    for sid in wanted:
        row = by_id[sid]
        text = row.get("text")
        if text is None:
            print(
                f"sample {sid}: predicted {row['predicted']}; the run's model "
                "family has no decision paths, so no explanation was recorded"
            )
        else:
            print(text)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    import json

    cfg = _config_from(args)
    out = Path(cfg.out)
    summary_path = out / "summary.json"
    if not summary_path.exists():
        raise ConfigError(f"no run summary at {summary_path}; run the pipeline first")
    summary = json.loads(summary_path.read_text())
    rows = load_records(out / "records.jsonl")

    first_by_class: dict[str, tuple[str, str]] = {}
    for row in rows:
        label = row["predicted"]
        if label in first_by_class or "text" not in row:
            continue
        first_by_class[label] = (
            f"Sample {row['seq_id']}: predicted {label}",
            row["text"],
        )
    examples = [
        first_by_class[c.name] for c in CLASS_LABELS if c.name in first_by_class
    ]

    path = out / "report.html"
    write_html_report(path, summary, examples)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apustream",
        description="Streaming failure classification for compressed-air units",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="derive sliding-window lengths from the stream")
    _common_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("tune", help="prequential grid search on the tuning subset")
    _common_flags(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("run", help="full evaluation run with explanations and report")
    _common_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("explain", help="print explanations from a completed run")
    _common_flags(p)
    p.add_argument("--seq", type=int, action="append", help="sample seq_id (repeatable)")
    p.add_argument("--range", help="inclusive seq_id range A:B")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("report", help="rebuild the static report from run artifacts")
    _common_flags(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

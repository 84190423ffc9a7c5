"""Command line interface: detect, evaluate, sweep and synth."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import report as report_mod
from .config import default_flat, load_config
from .detectors import DetectorMethod
from .errors import ValidationError
from .evaluation import GroundTruthWindow, ParameterGrid, score
from .features import FeatureSource
from .pipeline import PipelineConfig, run_pipeline, sweep_streams
from .stream_io import read_annotations, read_stream, write_annotations, write_stream
from .synth import generate, load_scenario

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

_METHODS = {m.value: m for m in DetectorMethod}
_SOURCES = {
    "expression": FeatureSource.EXPRESSION_7,
    "embedding": FeatureSource.EMBEDDING_128,
}


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with the validation code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="vcanomaly",
        description="Detect group-level abnormal events in video-conference feature streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common(p):
        p.add_argument("--method", choices=sorted(_METHODS), help="detector to run")
        p.add_argument("--source", choices=sorted(_SOURCES), help="feature vectors to use")
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--report-dir", help="write CSV tables and figures here")

    detect = sub.add_parser("detect", help="detect group events in a stream")
    detect.add_argument("stream", help="feature stream (JSON Lines)")
    add_common(detect)
    detect.add_argument("--out", help="write the events JSON here (default: stdout)")

    evaluate = sub.add_parser("evaluate", help="score detections against annotations")
    evaluate.add_argument("stream")
    evaluate.add_argument("annotations", help="CSV of start_seconds,end_seconds,label")
    add_common(evaluate)
    evaluate.add_argument("--out", help="write the metrics JSON here")

    sweep_cmd = sub.add_parser("sweep", help="k-fold grid search over a dataset directory")
    sweep_cmd.add_argument("dataset_dir", help="directory of <name>.jsonl + <name>.annotations.csv")
    add_common(sweep_cmd)
    sweep_cmd.add_argument("--folds", type=int, default=10)
    sweep_cmd.add_argument(
        "--objective", choices=("precision", "recall", "f1"), default="precision"
    )
    sweep_cmd.add_argument("--out", help="write the sweep summary JSON here")

    synth = sub.add_parser("synth", help="generate a synthetic meeting from a scenario file")
    synth.add_argument("scenario", help="scenario JSON file")
    synth.add_argument("--out", required=True, help="output directory")

    defaults = sub.add_parser("config-defaults", help="print the default flat config")
    defaults.add_argument("--out", help="write instead of printing")
    return parser


def _load_pipeline_config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    if getattr(args, "method", None):
        config.method = _METHODS[args.method]
    if getattr(args, "source", None):
        config.source = _SOURCES[args.source]
    return config


def _clip_truth(truth, total_frames):
    clipped = []
    for w in truth:
        if w.start_frame >= total_frames:
            continue
        clipped.append(
            GroundTruthWindow(w.start_frame, min(w.end_frame, total_frames - 1), w.label)
        )
    return clipped


def _cmd_detect(args) -> int:
    config = _load_pipeline_config(args)
    stream = read_stream(args.stream)
    result = run_pipeline(stream, config)
    rows = report_mod.events_to_rows(result.events, result.fps)
    for row in rows:
        row["method"] = config.method.value
    payload = json.dumps(rows, indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        print(f"{len(rows)} event(s) -> {args.out}")
    else:
        print(payload)
    if args.report_dir:
        written = report_mod.render_detection_report(result, args.report_dir)
        print(f"report: {', '.join(str(p) for p in written)}")
    return EXIT_OK


def _format_table(report) -> str:
    headers = ["tp", "fp", "tn", "fn", "recall", "precision", "tnr", "fpr"]
    values = [
        str(report.tp),
        str(report.fp),
        str(report.tn),
        str(report.fn),
        f"{report.recall:.4f}",
        f"{report.precision:.4f}",
        f"{report.tnr:.4f}",
        f"{report.fpr:.4f}",
    ]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    line = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
    row = "  ".join(v.rjust(w) for v, w in zip(values, widths))
    return line + "\n" + row


def _cmd_evaluate(args) -> int:
    config = _load_pipeline_config(args)
    stream = read_stream(args.stream)
    truth = _clip_truth(read_annotations(args.annotations, stream.fps), stream.frame_count)
    result = run_pipeline(stream, config)
    eval_report = score(result.events, truth, stream.frame_count)
    print(_format_table(eval_report))
    if args.out:
        payload = {
            "method": config.method.value,
            "events": report_mod.events_to_rows(result.events, result.fps),
            "metrics": eval_report.as_dict(),
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"metrics -> {args.out}")
    if args.report_dir:
        written = report_mod.render_detection_report(
            result, args.report_dir, truth=truth, report=eval_report
        )
        print(f"report: {', '.join(str(p) for p in written)}")
    return EXIT_OK


def _load_dataset(dataset_dir: Path):
    streams = sorted(dataset_dir.glob("*.jsonl"))
    if not streams:
        raise ValidationError(f"no *.jsonl streams found in {dataset_dir}")
    dataset = []
    for stream_path in streams:
        annotation_path = stream_path.parent / (stream_path.stem + ".annotations.csv")
        if not annotation_path.exists():
            raise ValidationError(f"missing annotations for {stream_path.name}")
        stream = read_stream(stream_path)
        truth = _clip_truth(
            read_annotations(annotation_path, stream.fps), stream.frame_count
        )
        dataset.append((stream, truth))
    return dataset


def _cmd_sweep(args) -> int:
    config = _load_pipeline_config(args)
    dataset = _load_dataset(Path(args.dataset_dir))
    result = sweep_streams(
        dataset,
        grid=ParameterGrid(),
        folds=args.folds,
        config=config,
        objective=args.objective,
    )
    for fold in result.folds:
        selected = " ".join(f"{k}={v}" for k, v in sorted(fold.selected.items()))
        print(
            f"fold {fold.fold}: {selected}  "
            f"precision={fold.test_report.precision:.4f} recall={fold.test_report.recall:.4f}"
        )
    mean = result.mean_metrics
    print(
        f"mean: precision={mean['precision']:.4f} recall={mean['recall']:.4f} "
        f"tnr={mean['tnr']:.4f} fpr={mean['fpr']:.4f}"
    )
    if args.out:
        Path(args.out).write_text(
            json.dumps(result.as_dict(), indent=2) + "\n", encoding="utf-8"
        )
        print(f"summary -> {args.out}")
    if args.report_dir:
        written = report_mod.render_sweep_report(result, args.report_dir)
        print(f"report: {', '.join(str(p) for p in written)}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    scenario = load_scenario(args.scenario)
    stream, truth = generate(scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = scenario.source_id or Path(args.scenario).stem
    stream_path = out_dir / f"{name}.jsonl"
    annotations_path = out_dir / f"{name}.annotations.csv"
    write_stream(stream, stream_path)
    write_annotations(truth, scenario.fps, annotations_path)
    print(f"stream -> {stream_path}")
    print(f"annotations -> {annotations_path} ({len(truth)} event(s))")
    return EXIT_OK


def _cmd_config_defaults(args) -> int:
    payload = json.dumps(default_flat(), indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        print(f"defaults -> {args.out}")
    else:
        print(payload)
    return EXIT_OK


_COMMANDS = {
    "detect": _cmd_detect,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "synth": _cmd_synth,
    "config-defaults": _cmd_config_defaults,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_VALIDATION
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"unexpected failure: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

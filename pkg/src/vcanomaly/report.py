"""Report rendering: delimited summaries plus matplotlib figures on disk."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .aggregation import GroupEvent
from .evaluation import EvalReport, GroundTruthWindow, SweepResult
from .pipeline import PipelineResult

EVENT_COLUMNS = (
    "start_frame",
    "end_frame",
    "start_seconds",
    "end_seconds",
    "participants",
    "point_count",
)


def events_to_rows(events: list[GroupEvent], fps: float) -> list[dict]:
    return [
        {
            "start_frame": e.start_frame,
            "end_frame": e.end_frame,
            "start_seconds": e.start_frame / fps,
            "end_seconds": e.end_frame / fps,
            "participants": sorted(e.participant_ids),
            "point_count": e.point_count,
        }
        for e in events
    ]


def save_events_csv(events: list[GroupEvent], fps: float, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(EVENT_COLUMNS)
        for row in events_to_rows(events, fps):
            writer.writerow(
                [
                    row["start_frame"],
                    row["end_frame"],
                    row["start_seconds"],
                    row["end_seconds"],
                    " ".join(str(p) for p in row["participants"]),
                    row["point_count"],
                ]
            )


def save_metrics_csv(report: EvalReport, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        metrics = report.as_dict()
        writer.writerow(metrics.keys())
        writer.writerow(metrics.values())


def plot_meeting_timeline(
    result: PipelineResult,
    path: Path,
    truth: list[GroundTruthWindow] | None = None,
) -> None:
    """Per-track change signals with flagged samples and event spans."""
    fig, ax = plt.subplots(figsize=(10, 4.5))
    for diag in result.diagnostics:
        by_frame = {}
        if diag.change is not None and len(diag.change):
            frames = diag.change.frames()
            values = diag.change.values()
            ax.plot(frames, values, linewidth=0.7, alpha=0.6)
            by_frame = {int(f): float(v) for f, v in zip(frames, values)}
        if diag.points:
            ax.scatter(
                [p.frame_index for p in diag.points],
                [by_frame.get(p.frame_index, 0.0) for p in diag.points],
                s=12,
                color="crimson",
                zorder=3,
            )
    for event in result.events:
        ax.axvspan(event.start_frame, event.end_frame, color="orange", alpha=0.3)
    if truth:
        for window in truth:
            ax.axvspan(window.start_frame, window.end_frame, color="green", alpha=0.15)
    ax.set_xlabel("frame")
    ax.set_ylabel("feature change")
    ax.set_title(
        f"{result.meeting_size} participants, {len(result.events)} detected event(s)"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_fold_metrics(sweep_result: SweepResult, path: Path) -> None:
    folds = [f.fold for f in sweep_result.folds]
    precision = [f.test_report.precision for f in sweep_result.folds]
    recall = [f.test_report.recall for f in sweep_result.folds]
    width = 0.38
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar([f - width / 2 for f in folds], precision, width, label="precision")
    ax.bar([f + width / 2 for f in folds], recall, width, label="recall")
    ax.axhline(sweep_result.mean_metrics["precision"], linestyle="--", linewidth=0.8)
    ax.set_xlabel("fold")
    ax.set_ylabel("metric")
    ax.set_ylim(0, 1.05)
    ax.set_xticks(folds)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_detection_report(
    result: PipelineResult,
    out_dir,
    truth: list[GroundTruthWindow] | None = None,
    report: EvalReport | None = None,
) -> list[Path]:
    """Write events.csv, timeline.png and, when scoring ran, metrics.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    events_csv = out_dir / "events.csv"
    save_events_csv(result.events, result.fps, events_csv)
    written.append(events_csv)
    timeline = out_dir / "timeline.png"
    plot_meeting_timeline(result, timeline, truth)
    written.append(timeline)
    if report is not None:
        metrics_csv = out_dir / "metrics.csv"
        save_metrics_csv(report, metrics_csv)
        written.append(metrics_csv)
    return written


def render_sweep_report(sweep_result: SweepResult, out_dir) -> list[Path]:
    """Write folds.csv and fold_metrics.png."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    folds_csv = out_dir / "folds.csv"
    with folds_csv.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["fold", "selected", "precision", "recall", "tnr", "fpr"])
        for fold in sweep_result.folds:
            selected = " ".join(f"{k}={v}" for k, v in sorted(fold.selected.items()))
            writer.writerow(
                [
                    fold.fold,
                    selected,
                    fold.test_report.precision,
                    fold.test_report.recall,
                    fold.test_report.tnr,
                    fold.test_report.fpr,
                ]
            )
    figure = out_dir / "fold_metrics.png"
    plot_fold_metrics(sweep_result, figure)
    return [folds_csv, figure]

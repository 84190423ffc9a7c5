"""Frame-level scoring against annotated windows and k-fold parameter sweeps."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .aggregation import AggregationConfig, GroupEvent, aggregate
from .detectors import DetectorConfig, DetectorMethod, run_detector
from .errors import ValidationError

SWEEP_OBJECTIVES = ("precision", "recall", "f1")


@dataclass(frozen=True)
class GroundTruthWindow:
    """Annotated disruption window, inclusive on both ends."""

    start_frame: int
    end_frame: int
    label: str = ""

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise ValidationError(
                f"window start {self.start_frame} after end {self.end_frame}"
            )


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int
    recall: float
    precision: float
    tnr: float
    fpr: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, tn: int, fn: int) -> "EvalReport":
        def ratio(num, den):
            return num / den if den > 0 else 0.0

        return cls(
            tp=tp,
            fp=fp,
            tn=tn,
            fn=fn,
            recall=ratio(tp, tp + fn),
            precision=ratio(tp, tp + fp),
            tnr=ratio(tn, tn + fp),
            fpr=ratio(fp, fp + tn),
        )

    def as_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "recall": self.recall,
            "precision": self.precision,
            "tnr": self.tnr,
            "fpr": self.fpr,
        }


def _binarize(windows, total_frames: int, kind: str) -> np.ndarray:
    mask = np.zeros(total_frames, dtype=bool)
    for w in windows:
        start = w.start_frame
        end = w.end_frame
        if start < 0 or end >= total_frames:
            raise ValidationError(
                f"{kind} window [{start}, {end}] outside [0, {total_frames})"
            )
        mask[start : end + 1] = True
    return mask


def score(
    events: list[GroupEvent],
    truth: list[GroundTruthWindow],
    total_frames: int,
) -> EvalReport:
    """Frame-level confusion counts of predicted events against annotations."""
    if total_frames < 1:
        raise ValidationError(f"total_frames must be >= 1: {total_frames}")
    predicted = _binarize(events, total_frames, "predicted")
    actual = _binarize(truth, total_frames, "truth")
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    tn = total_frames - tp - fp - fn
    return EvalReport.from_counts(tp, fp, tn, fn)


def default_thresholds() -> tuple[float, ...]:
    return tuple(round(1.5 + 0.1 * i, 10) for i in range(16))


@dataclass(frozen=True)
class ParameterGrid:
    """The published search space: trailing windows 5-15 (step 2), thresholds
    1.5-3.0 (step 0.1), epsilon 5-21 (step 2), transition windows 3-9 (step 2)."""

    windows: tuple[int, ...] = (5, 7, 9, 11, 13, 15)
    thresholds: tuple[float, ...] = field(default_factory=default_thresholds)
    epsilons: tuple[int, ...] = (5, 7, 9, 11, 13, 15, 17, 19, 21)
    transition_windows: tuple[int, ...] = (3, 5, 7, 9)

    def points(self, method: DetectorMethod) -> list[dict]:
        """Grid points as override dicts, in deterministic order."""
        if method is DetectorMethod.STAT_PROFILE:
            return [
                {"window_w": w, "std_threshold": t, "epsilon": e}
                for w in self.windows
                for t in self.thresholds
                for e in self.epsilons
            ]
        if method is DetectorMethod.ARIMA_ERROR:
            return [{"epsilon": e} for e in self.epsilons]
        if method is DetectorMethod.TRANSITION_DENSITY:
            return [
                {"transition_window": w, "epsilon": e}
                for w in self.transition_windows
                for e in self.epsilons
            ]
        raise ValidationError(f"unknown method: {method}")


@dataclass
class PreparedVideo:
    """Per-track series extracted once so grid points only redo detection."""

    change_series: list
    label_series: list
    meeting_size: int
    total_frames: int
    truth: list[GroundTruthWindow]


@dataclass
class FoldResult:
    fold: int
    selected: dict
    train_report: EvalReport
    test_report: EvalReport


@dataclass
class SweepResult:
    folds: list[FoldResult]
    mean_metrics: dict

    def as_dict(self) -> dict:
        return {
            "folds": [
                {
                    "fold": f.fold,
                    "selected": f.selected,
                    "train": f.train_report.as_dict(),
                    "test": f.test_report.as_dict(),
                }
                for f in self.folds
            ],
            "mean": self.mean_metrics,
        }


def _apply_point(base_detector: DetectorConfig, base_agg: AggregationConfig, point: dict):
    detector_keys = {k: v for k, v in point.items() if k != "epsilon"}
    detector = replace(base_detector, **detector_keys) if detector_keys else base_detector
    agg = replace(base_agg, epsilon=point["epsilon"]) if "epsilon" in point else base_agg
    return detector, agg


def _video_counts(
    prepared: PreparedVideo,
    method: DetectorMethod,
    detector: DetectorConfig,
    agg: AggregationConfig,
) -> tuple[int, int, int, int]:
    points = []
    if method is DetectorMethod.TRANSITION_DENSITY:
        for labels in prepared.label_series:
            points.extend(run_detector(method, None, labels, detector))
    else:
        for change in prepared.change_series:
            points.extend(run_detector(method, change, None, detector))
    events = aggregate(points, prepared.meeting_size, agg)
    report = score(events, prepared.truth, prepared.total_frames)
    return report.tp, report.fp, report.tn, report.fn


def _selection_key(point: dict, report: EvalReport, objective: str):
    if objective == "precision":
        primary = report.precision
    elif objective == "recall":
        primary = report.recall
    elif objective == "f1":
        denom = report.precision + report.recall
        primary = 2 * report.precision * report.recall / denom if denom > 0 else 0.0
    else:
        raise ValidationError(f"objective must be one of {SWEEP_OBJECTIVES}: {objective}")
    return (
        -primary,
        -report.recall,
        point.get("window_w", 0),
        point.get("transition_window", 0),
        point.get("std_threshold", 0.0),
        point.get("epsilon", 0),
    )


def sweep(
    prepared_videos: list[PreparedVideo],
    grid: ParameterGrid | None = None,
    folds: int = 10,
    method: DetectorMethod = DetectorMethod.STAT_PROFILE,
    objective: str = "precision",
    base_detector: DetectorConfig | None = None,
    base_agg: AggregationConfig | None = None,
) -> SweepResult:
    """Cross-validated grid search.

    Videos are partitioned round-robin into folds (never by frame). For each
    fold the grid point with the best pooled training objective is selected
    (ties prefer higher recall, then smaller windows) and scored on the
    held-out videos. Grid evaluations per video are fold-independent and
    computed once.
    """
    if folds < 2:
        raise ValidationError(f"folds must be >= 2: {folds}")
    if len(prepared_videos) < folds:
        raise ValidationError(
            f"need at least {folds} videos for {folds} folds, got {len(prepared_videos)}"
        )
    grid = grid or ParameterGrid()
    points = grid.points(method)
    if not points:
        raise ValidationError("parameter grid is empty")
    base_detector = base_detector or DetectorConfig()
    base_agg = base_agg or AggregationConfig()

    counts = np.zeros((len(points), len(prepared_videos), 4), dtype=np.int64)
    for pi, point in enumerate(points):
        detector, agg = _apply_point(base_detector, base_agg, point)
        for vi, video in enumerate(prepared_videos):
            counts[pi, vi] = _video_counts(video, method, detector, agg)

    fold_results = []
    for fold in range(folds):
        test_idx = [i for i in range(len(prepared_videos)) if i % folds == fold]
        train_idx = [i for i in range(len(prepared_videos)) if i % folds != fold]
        best = None
        for pi, point in enumerate(points):
            pooled = counts[pi, train_idx].sum(axis=0)
            report = EvalReport.from_counts(*(int(v) for v in pooled))
            key = _selection_key(point, report, objective)
            if best is None or key < best[0]:
                best = (key, point, report, pi)
        _, selected, train_report, pi = best
        pooled_test = counts[pi, test_idx].sum(axis=0)
        test_report = EvalReport.from_counts(*(int(v) for v in pooled_test))
        fold_results.append(FoldResult(fold, dict(selected), train_report, test_report))

    mean_metrics = {
        name: float(np.mean([getattr(f.test_report, name) for f in fold_results]))
        for name in ("recall", "precision", "tnr", "fpr")
    }
    return SweepResult(fold_results, mean_metrics)

"""End-to-end orchestration: merge, track, feature change, detect, aggregate."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .aggregation import AggregationConfig, GroupEvent, aggregate
from .detectors import AnomalyPoint, DetectorConfig, DetectorMethod, run_detector
from .errors import ConfigurationError
from .evaluation import GroundTruthWindow, ParameterGrid, PreparedVideo, SweepResult, sweep
from .features import ChangeSeries, FeatureSource, LabelSeries, change_series, label_series
from .geometry import DEFAULT_MERGE_IOU, greedy_pairs, merge_detections
from .stream_io import FeatureStream
from .tracking import (
    DEFAULT_STALENESS_HORIZON,
    DEFAULT_TRACK_IOU,
    FaceObservation,
    Tracker,
    default_matcher,
)

DEFAULT_MATCH_DISTANCE = 0.6


@dataclass
class PipelineConfig:
    method: DetectorMethod = DetectorMethod.STAT_PROFILE
    source: FeatureSource = FeatureSource.EXPRESSION_7
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    aggregation: AggregationConfig = field(default_factory=AggregationConfig)
    merge_iou_threshold: float = DEFAULT_MERGE_IOU
    track_iou_threshold: float = DEFAULT_TRACK_IOU
    match_distance_threshold: float = DEFAULT_MATCH_DISTANCE
    staleness_horizon: int = DEFAULT_STALENESS_HORIZON


@dataclass
class TrackDiagnostics:
    track_id: int
    change: ChangeSeries | None
    labels: LabelSeries | None
    points: list[AnomalyPoint]


@dataclass
class PipelineResult:
    events: list[GroupEvent]
    diagnostics: list[TrackDiagnostics]
    meeting_size: int
    total_frames: int
    fps: float


def _first(*values):
    for value in values:
        if value is not None:
            return value
    return None


def _merge_channel_observations(
    faces: list[FaceObservation], channel_a: str, channel_b: str, threshold: float
) -> list[FaceObservation]:
    group_a = [f for f in faces if f.channel == channel_a]
    group_b = [f for f in faces if f.channel == channel_b]
    rest = [f for f in faces if f.channel not in (channel_a, channel_b)]
    pairs = greedy_pairs([f.box for f in group_a], [f.box for f in group_b])
    used_a: set[int] = set()
    used_b: set[int] = set()
    merged: list[FaceObservation] = []
    for i, j in pairs:
        used_a.add(i)
        used_b.add(j)
        a, b = group_a[i], group_b[j]
        boxes = merge_detections(a.box, b.box, threshold)
        if len(boxes) == 1:
            merged.append(
                FaceObservation(
                    frame_index=a.frame_index,
                    box=boxes[0],
                    embedding=_first(a.embedding, b.embedding),
                    expression=_first(a.expression, b.expression),
                    expression_label=_first(a.expression_label, b.expression_label),
                )
            )
        else:  # too little overlap: keep both detections
            merged.append(replace(a, channel=None))
            merged.append(replace(b, channel=None))
    merged.extend(replace(f, channel=None) for i, f in enumerate(group_a) if i not in used_a)
    merged.extend(replace(f, channel=None) for j, f in enumerate(group_b) if j not in used_b)
    merged.extend(replace(f, channel=None) for f in rest)
    return merged


def _detector_channels(stream: FeatureStream) -> list[str]:
    return sorted({f.channel for f in stream.observations() if f.channel is not None})


def _check_method_inputs(stream: FeatureStream, config: PipelineConfig) -> None:
    method = config.method
    if method is DetectorMethod.TRANSITION_DENSITY:
        if not any(
            f.expression_label is not None or f.expression is not None
            for f in stream.observations()
        ):
            raise ConfigurationError(
                "method 'transitions' needs expression labels or expression vectors; "
                "the stream carries neither"
            )
        return
    if config.source is FeatureSource.EMBEDDING_128:
        present = any(f.embedding is not None for f in stream.observations())
        name = "embedding"
    else:
        present = any(f.expression is not None for f in stream.observations())
        name = "expression"
    if not present:
        raise ConfigurationError(
            f"method '{method.value}' needs {name} vectors; the stream carries none"
        )


def build_tracks(stream: FeatureStream, config: PipelineConfig) -> Tracker:
    """Merge detector channels (when two are present) and track all frames."""
    channels = _detector_channels(stream)
    tracker = Tracker(
        iou_threshold=config.track_iou_threshold,
        matcher=default_matcher(config.match_distance_threshold),
        staleness_horizon=config.staleness_horizon,
    )
    for record in stream.frames:
        faces = record.faces
        if len(channels) >= 2:
            faces = _merge_channel_observations(
                faces, channels[0], channels[1], config.merge_iou_threshold
            )
        tracker.update(record.index, faces)
    return tracker


def run_pipeline(stream: FeatureStream, config: PipelineConfig | None = None) -> PipelineResult:
    """Run the full detection pipeline on one feature stream."""
    config = config or PipelineConfig()
    _check_method_inputs(stream, config)
    tracker = build_tracks(stream, config)
    meeting_size = len(tracker.tracks)

    diagnostics = []
    all_points: list[AnomalyPoint] = []
    for track in tracker.tracks:
        change = labels = None
        if config.method is DetectorMethod.TRANSITION_DENSITY:
            labels = label_series(track)
        else:
            change = change_series(track, config.source)
        points = run_detector(config.method, change, labels, config.detector)
        diagnostics.append(TrackDiagnostics(track.track_id, change, labels, points))
        all_points.extend(points)

    events = (
        aggregate(all_points, meeting_size, config.aggregation) if meeting_size else []
    )
    return PipelineResult(
        events=events,
        diagnostics=diagnostics,
        meeting_size=meeting_size,
        total_frames=stream.frame_count,
        fps=stream.fps,
    )


def prepare_video(
    stream: FeatureStream,
    truth: list[GroundTruthWindow],
    config: PipelineConfig | None = None,
) -> PreparedVideo:
    """Extract per-track series once so sweeps only redo detection."""
    config = config or PipelineConfig()
    tracker = build_tracks(stream, config)
    changes = []
    labels = []
    for track in tracker.tracks:
        series = change_series(track, config.source)
        if len(series):
            changes.append(series)
        label = label_series(track)
        if len(label):
            labels.append(label)
    return PreparedVideo(
        change_series=changes,
        label_series=labels,
        meeting_size=len(tracker.tracks),
        total_frames=stream.frame_count,
        truth=list(truth),
    )


def sweep_streams(
    dataset: list[tuple[FeatureStream, list[GroundTruthWindow]]],
    grid: ParameterGrid | None = None,
    folds: int = 10,
    config: PipelineConfig | None = None,
    objective: str = "precision",
) -> SweepResult:
    """Cross-validated grid search over (stream, truth) pairs."""
    config = config or PipelineConfig()
    prepared = [prepare_video(stream, truth, config) for stream, truth in dataset]
    return sweep(
        prepared,
        grid=grid,
        folds=folds,
        method=config.method,
        objective=objective,
        base_detector=config.detector,
        base_agg=config.aggregation,
    )

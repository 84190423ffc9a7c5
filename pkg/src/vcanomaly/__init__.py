"""Group-level abnormal-event detection for video-conference meetings."""

from .aggregation import AggregationConfig, GroupEvent, aggregate, dbscan_1d, min_points_for
from .detectors import (
    AnomalyPoint,
    DetectorConfig,
    DetectorMethod,
    detect_arima,
    detect_statistical,
    detect_transitions,
    rolling_stats,
)
from .errors import ConfigurationError, EstimationError, StreamFormatError, ValidationError
from .evaluation import (
    EvalReport,
    GroundTruthWindow,
    ParameterGrid,
    SweepResult,
    score,
    sweep,
)
from .features import ChangeSeries, FeatureSource, LabelSeries, change_series, label_series
from .forecast import ArimaModel, ArimaOrder, auto_order, difference, fit, forecast_one
from .geometry import BoundingBox, iou, merge_detections, merge_frame
from .pipeline import PipelineConfig, PipelineResult, run_pipeline, sweep_streams
from .stream_io import (
    FeatureStream,
    FrameRecord,
    read_annotations,
    read_stream,
    write_annotations,
    write_stream,
)
from .synth import SyntheticEvent, SyntheticScenario, generate
from .tracking import (
    EXPRESSIONS,
    Expression,
    FaceObservation,
    IdentityMatcher,
    Track,
    Tracker,
    associate_frame,
    default_matcher,
)

__version__ = "0.1.0"

__all__ = [
    "AggregationConfig",
    "AnomalyPoint",
    "ArimaModel",
    "ArimaOrder",
    "BoundingBox",
    "ChangeSeries",
    "ConfigurationError",
    "DetectorConfig",
    "DetectorMethod",
    "EstimationError",
    "EvalReport",
    "Expression",
    "EXPRESSIONS",
    "FaceObservation",
    "FeatureSource",
    "FeatureStream",
    "FrameRecord",
    "GroundTruthWindow",
    "GroupEvent",
    "IdentityMatcher",
    "LabelSeries",
    "ParameterGrid",
    "PipelineConfig",
    "PipelineResult",
    "StreamFormatError",
    "SweepResult",
    "SyntheticEvent",
    "SyntheticScenario",
    "Track",
    "Tracker",
    "ValidationError",
    "aggregate",
    "associate_frame",
    "auto_order",
    "change_series",
    "dbscan_1d",
    "default_matcher",
    "detect_arima",
    "detect_statistical",
    "detect_transitions",
    "difference",
    "fit",
    "forecast_one",
    "generate",
    "iou",
    "label_series",
    "merge_detections",
    "merge_frame",
    "min_points_for",
    "read_annotations",
    "read_stream",
    "rolling_stats",
    "run_pipeline",
    "score",
    "sweep",
    "sweep_streams",
    "write_annotations",
    "write_stream",
]

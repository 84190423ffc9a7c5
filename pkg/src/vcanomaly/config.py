"""Flat key/value configuration files for the CLI.

The file is a single JSON object whose keys mirror the detector and
aggregation knobs one-to-one; every default matches the calibrated values
baked into the dataclasses.
"""

from __future__ import annotations

import json
from pathlib import Path

from .aggregation import AggregationConfig
from .detectors import DetectorConfig, DetectorMethod
from .errors import ValidationError
from .features import FeatureSource
from .forecast import ArimaOrder
from .pipeline import PipelineConfig

_SOURCE_NAMES = {
    "expression": FeatureSource.EXPRESSION_7,
    "embedding": FeatureSource.EMBEDDING_128,
}
_METHOD_NAMES = {m.value: m for m in DetectorMethod}

_INT_KEYS = {
    "window_w",
    "arima_window",
    "arima_p",
    "arima_d",
    "arima_q",
    "transition_window",
    "epsilon",
    "staleness_horizon",
}
_FLOAT_KEYS = {
    "std_threshold",
    "mean_floor",
    "std_floor_frac",
    "arima_threshold",
    "transition_fraction",
    "participant_ratio",
    "merge_iou_threshold",
    "track_iou_threshold",
    "match_distance_threshold",
}
_STR_KEYS = {"method", "source", "stat_mode"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def default_flat() -> dict:
    """The full flat document with every default filled in."""
    return to_flat(PipelineConfig())


def to_flat(config: PipelineConfig) -> dict:
    detector = config.detector
    agg = config.aggregation
    source = "embedding" if config.source is FeatureSource.EMBEDDING_128 else "expression"
    return {
        "method": config.method.value,
        "source": source,
        "window_w": detector.window_w,
        "std_threshold": detector.std_threshold,
        "stat_mode": detector.stat_mode,
        "mean_floor": detector.mean_floor,
        "std_floor_frac": detector.std_floor_frac,
        "arima_window": detector.arima_window,
        "arima_threshold": detector.arima_threshold,
        "arima_p": detector.arima_order.p,
        "arima_d": detector.arima_order.d,
        "arima_q": detector.arima_order.q,
        "transition_window": detector.transition_window,
        "transition_fraction": detector.transition_fraction,
        "epsilon": agg.epsilon,
        "participant_ratio": agg.participant_ratio,
        "merge_iou_threshold": config.merge_iou_threshold,
        "track_iou_threshold": config.track_iou_threshold,
        "match_distance_threshold": config.match_distance_threshold,
        "staleness_horizon": config.staleness_horizon,
    }


def from_flat(raw: dict) -> PipelineConfig:
    if not isinstance(raw, dict):
        raise ValidationError("config must be a flat JSON object")
    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    values = default_flat()
    values.update(raw)

    def as_int(key):
        value = values[key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"config key '{key}' must be an integer, got {value!r}")
        return value

    def as_float(key):
        value = values[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"config key '{key}' must be a number, got {value!r}")
        return float(value)

    method = _METHOD_NAMES.get(values["method"])
    if method is None:
        raise ValidationError(
            f"config key 'method' must be one of {sorted(_METHOD_NAMES)}, got {values['method']!r}"
        )
    source = _SOURCE_NAMES.get(values["source"])
    if source is None:
        raise ValidationError(
            f"config key 'source' must be one of {sorted(_SOURCE_NAMES)}, got {values['source']!r}"
        )
    detector = DetectorConfig(
        window_w=as_int("window_w"),
        std_threshold=as_float("std_threshold"),
        stat_mode=str(values["stat_mode"]),
        mean_floor=as_float("mean_floor"),
        std_floor_frac=as_float("std_floor_frac"),
        arima_threshold=as_float("arima_threshold"),
        arima_window=as_int("arima_window"),
        arima_order=ArimaOrder(as_int("arima_p"), as_int("arima_d"), as_int("arima_q")),
        transition_window=as_int("transition_window"),
        transition_fraction=as_float("transition_fraction"),
    )
    aggregation = AggregationConfig(
        epsilon=as_int("epsilon"),
        participant_ratio=as_float("participant_ratio"),
    )
    return PipelineConfig(
        method=method,
        source=source,
        detector=detector,
        aggregation=aggregation,
        merge_iou_threshold=as_float("merge_iou_threshold"),
        track_iou_threshold=as_float("track_iou_threshold"),
        match_distance_threshold=as_float("match_distance_threshold"),
        staleness_horizon=as_int("staleness_horizon"),
    )


def load_config(path) -> PipelineConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file is not valid JSON: {exc.msg}")
    return from_flat(raw)

"""Per-participant anomaly flagging over change and label series."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EstimationError, ValidationError
from .features import ChangeSeries, LabelSeries
from .forecast import DEFAULT_ORDER, ArimaOrder, fit, forecast_one

RELATIVE_ERROR_FLOOR = 1e-9


class DetectorMethod(Enum):
    STAT_PROFILE = "stat"
    ARIMA_ERROR = "arima"
    TRANSITION_DENSITY = "transitions"


@dataclass(frozen=True)
class AnomalyPoint:
    track_id: int
    frame_index: int
    score: float
    method: DetectorMethod


@dataclass
class DetectorConfig:
    """Knobs for the three detectors; defaults follow the calibrated optimum
    (7-frame window, 1.8 standard deviations, 20-sample forecast window with
    a (2,0,2) model)."""

    window_w: int = 7
    std_threshold: float = 1.8
    stat_mode: str = "zscore"  # "zscore" or "eq1" (the raw ratio-vs-std rule)
    mean_floor: float = 1e-9
    std_floor_frac: float = 0.1
    arima_threshold: float = 0.5
    arima_window: int = 20
    arima_order: ArimaOrder = DEFAULT_ORDER
    transition_window: int = 5
    transition_fraction: float = 0.5

    def __post_init__(self):
        if self.window_w < 2:
            raise ValidationError(f"window_w must be >= 2: {self.window_w}")
        for name in ("std_threshold", "arima_threshold", "transition_fraction"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive: {getattr(self, name)}")
        if self.arima_window < 2:
            raise ValidationError(f"arima_window must be >= 2: {self.arima_window}")
        if self.transition_window < 3 or self.transition_window % 2 == 0:
            raise ValidationError(
                f"transition_window must be odd and >= 3: {self.transition_window}"
            )
        if self.stat_mode not in ("zscore", "eq1"):
            raise ValidationError(f"unknown stat_mode: {self.stat_mode!r}")
        if self.mean_floor <= 0 or self.std_floor_frac < 0:
            raise ValidationError("floors must be positive")


def rolling_stats(series, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Trailing mean and population standard deviation per sample.

    Statistics at position i cover the w samples strictly before i; the first
    w positions are warm-up and carry NaN.
    """
    if w < 2:
        raise ValidationError(f"window must be >= 2: {w}")
    values = series.values() if isinstance(series, ChangeSeries) else np.asarray(series, float)
    n = len(values)
    means = np.full(n, np.nan)
    stds = np.full(n, np.nan)
    if n <= w:
        return means, stds
    windows = np.lib.stride_tricks.sliding_window_view(values, w)
    means[w:] = windows[: n - w].mean(axis=1)
    stds[w:] = windows[: n - w].std(axis=1)
    return means, stds


def detect_statistical(
    series: ChangeSeries,
    w: int = 7,
    threshold: float = 1.8,
    *,
    mode: str = "zscore",
    mean_floor: float = 1e-9,
    std_floor_frac: float = 0.1,
) -> list[AnomalyPoint]:
    """Flag samples that stand out against their trailing window.

    "zscore" flags values more than `threshold` floored-standard-deviations
    above the trailing mean. "eq1" keeps the raw published rule, comparing the
    value/mean ratio against threshold times the (floored) standard deviation;
    note that rule only behaves at one data scale. Both floors protect the
    constant-series and all-zero degeneracies. Scores are the criterion's
    left side divided by the floored deviation, so emitted scores are always
    >= threshold.
    """
    values = series.values()
    n = len(values)
    if n <= w:
        return []
    means, stds = rolling_stats(values, w)
    floored_mean = np.maximum(means, mean_floor)
    floored_std = np.maximum(stds, std_floor_frac * floored_mean)
    with np.errstate(invalid="ignore", divide="ignore"):
        if mode == "zscore":
            scores = (values - means) / floored_std
        elif mode == "eq1":
            scores = (values / floored_mean) / floored_std
        else:
            raise ValidationError(f"unknown stat mode: {mode!r}")
        flagged = scores > threshold
    frames = series.frames()
    return [
        AnomalyPoint(series.track_id, int(frames[i]), float(scores[i]), DetectorMethod.STAT_PROFILE)
        for i in np.flatnonzero(flagged)
    ]


def detect_arima(series: ChangeSeries, cfg: DetectorConfig) -> list[AnomalyPoint]:
    """Flag samples whose one-step forecast misses by a large relative error.

    Each sample past the warm-up gets a fresh model fitted on the preceding
    `arima_window` values; a sample whose fit fails is skipped, never flagged.
    """
    values = series.values()
    frames = series.frames()
    n = len(values)
    aw = cfg.arima_window
    if n <= aw:
        return []
    points = []
    for t in range(aw, n):
        window = values[t - aw : t]
        try:
            model = fit(window, cfg.arima_order)
            predicted = forecast_one(model, window)
        except (EstimationError, ValidationError):
            continue
        actual = values[t]
        relative = abs(predicted - actual) / max(abs(actual), RELATIVE_ERROR_FLOOR)
        if relative > cfg.arima_threshold:
            points.append(
                AnomalyPoint(series.track_id, int(frames[t]), float(relative), DetectorMethod.ARIMA_ERROR)
            )
    return points


def detect_transitions(
    labels: LabelSeries, window: int = 5, fraction: float = 0.5
) -> list[AnomalyPoint]:
    """Flag samples whose centered window is saturated with label changes.

    The share counts label changes among the window's adjacent sample pairs
    and must strictly exceed `fraction`. Samples without a full centered
    window are never flagged.
    """
    if window < 3 or window % 2 == 0:
        raise ValidationError(f"window must be odd and >= 3: {window}")
    if not 0 < fraction <= 1:
        raise ValidationError(f"fraction must be in (0, 1]: {fraction}")
    samples = labels.samples
    n = len(samples)
    half = window // 2
    if n < window:
        return []
    changes = np.array(
        [samples[i][1] != samples[i + 1][1] for i in range(n - 1)], dtype=float
    )
    points = []
    pairs = window - 1
    for i in range(half, n - half):
        share = float(changes[i - half : i + half].sum()) / pairs
        if share > fraction:
            points.append(
                AnomalyPoint(labels.track_id, samples[i][0], share, DetectorMethod.TRANSITION_DENSITY)
            )
    return points


def run_detector(
    method: DetectorMethod,
    change: ChangeSeries | None,
    labels: LabelSeries | None,
    cfg: DetectorConfig,
) -> list[AnomalyPoint]:
    """Dispatch one track's series to the configured detector."""
    if method is DetectorMethod.STAT_PROFILE:
        if change is None:
            return []
        return detect_statistical(
            change,
            cfg.window_w,
            cfg.std_threshold,
            mode=cfg.stat_mode,
            mean_floor=cfg.mean_floor,
            std_floor_frac=cfg.std_floor_frac,
        )
    if method is DetectorMethod.ARIMA_ERROR:
        if change is None:
            return []
        return detect_arima(change, cfg)
    if method is DetectorMethod.TRANSITION_DENSITY:
        if labels is None:
            return []
        return detect_transitions(labels, cfg.transition_window, cfg.transition_fraction)
    raise ValidationError(f"unknown detector method: {method}")

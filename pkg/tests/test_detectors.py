import math

import numpy as np
import pytest

from vcanomaly.detectors import (
    AnomalyPoint,
    DetectorConfig,
    DetectorMethod,
    detect_arima,
    detect_statistical,
    detect_transitions,
    rolling_stats,
)
from vcanomaly.errors import ValidationError
from vcanomaly.features import ChangeSeries, FeatureSource, LabelSeries
from vcanomaly.forecast import ArimaOrder
from vcanomaly.tracking import EXPRESSIONS, Expression

from conftest import naive_rolling


def series_of(values, start=0, track_id=0):
    return ChangeSeries(
        track_id,
        [(start + i, float(v)) for i, v in enumerate(values)],
        FeatureSource.EXPRESSION_7,
    )


def banded_values(rng, n, level=1.0, band=0.05):
    return level * rng.uniform(1 - band, 1 + band, n)


class TestRollingStats:
    def test_constant_series(self):
        means, stds = rolling_stats(np.full(10, 3.0), 4)
        assert np.all(np.isnan(means[:4]))
        assert np.allclose(means[4:], 3.0)
        assert np.allclose(stds[4:], 0.0)

    def test_hand_computed_window(self):
        means, stds = rolling_stats([1.0, 2.0, 3.0, 4.0, 5.0], 2)
        assert means[2] == pytest.approx(1.5)
        assert stds[2] == pytest.approx(0.5)  # population std of [1, 2]

    def test_matches_naive_recomputation(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(5, 120))
            w = int(rng.integers(2, min(15, n)))
            values = rng.normal(5.0, 2.0, n)
            means, stds = rolling_stats(values, w)
            for i, (m, s) in enumerate(naive_rolling(values, w)):
                if i < w:
                    assert math.isnan(means[i]) and math.isnan(stds[i])
                else:
                    assert abs(means[i] - m) < 1e-9
                    assert abs(stds[i] - s) < 1e-9

    def test_window_too_small_rejected(self):
        with pytest.raises(ValidationError):
            rolling_stats([1.0, 2.0], 1)


class TestDetectStatistical:
    def test_constant_nonzero_series_is_calm(self):
        assert detect_statistical(series_of([2.5] * 30), 7, 1.8) == []

    def test_all_zero_series_is_calm(self):
        assert detect_statistical(series_of([0.0] * 30), 7, 1.8) == []

    def test_spike_over_calm_noise_is_flagged(self):
        rng = np.random.default_rng(42)
        values = banded_values(rng, 40)
        values[25] = 10.0 * values[:25].mean()
        points = detect_statistical(series_of(values), 7, 1.8)
        assert [p.frame_index for p in points] == [25]
        assert points[0].method is DetectorMethod.STAT_PROFILE

    def test_warmup_never_flagged(self):
        values = [100.0] * 7 + [1.0] * 20  # big values inside warm-up only
        points = detect_statistical(series_of(values), 7, 1.8)
        assert all(p.frame_index >= 7 for p in points)

    def test_short_series_gives_nothing(self):
        assert detect_statistical(series_of([1.0] * 7), 7, 1.8) == []

    def test_scores_at_least_threshold(self):
        rng = np.random.default_rng(1)
        values = banded_values(rng, 60)
        values[[20, 40]] = [8.0, 30.0]
        for p in detect_statistical(series_of(values), 7, 1.8):
            assert p.score >= 1.8

    def test_flag_set_scale_invariant(self):
        rng = np.random.default_rng(2)
        for c in (0.01, 3.0, 250.0):
            values = banded_values(rng, 80)
            values[50] = 12.0
            base = detect_statistical(series_of(values), 7, 1.8)
            scaled = detect_statistical(series_of(c * values), 7, 1.8)
            assert [p.frame_index for p in base] == [p.frame_index for p in scaled]

    def test_eq1_mode_fires_at_its_calibrated_scale(self):
        # the raw published rule compares a dimensionless ratio against
        # threshold * std, so it only separates calm from spike when the
        # series level sits near 1.8 * 0.1 * level ≈ ratio band
        rng = np.random.default_rng(3)
        values = banded_values(rng, 40, level=10.0)
        values[30] = 80.0
        points = detect_statistical(series_of(values), 7, 1.8, mode="eq1")
        assert [p.frame_index for p in points] == [30]

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValidationError):
            detect_statistical(series_of([1.0] * 20), 7, 1.8, mode="bogus")


class TestDetectArima:
    def test_calm_positive_series_not_flagged(self):
        rng = np.random.default_rng(5)
        values = banded_values(rng, 60)
        cfg = DetectorConfig()
        assert detect_arima(series_of(values), cfg) == []

    def test_step_change_flagged_at_onset(self):
        rng = np.random.default_rng(6)
        values = banded_values(rng, 60)
        k = 40
        values[k:] *= 8.0
        cfg = DetectorConfig()
        points = detect_arima(series_of(values), cfg)
        assert points and points[0].frame_index == k
        assert all(p.score > cfg.arima_threshold for p in points)

    def test_warmup_never_flagged(self):
        rng = np.random.default_rng(7)
        values = banded_values(rng, 50)
        values[:10] = 50.0  # wild values confined to the warm-up
        cfg = DetectorConfig()
        points = detect_arima(series_of(values), cfg)
        assert all(p.frame_index >= cfg.arima_window for p in points)

    def test_flag_set_scale_invariant(self):
        rng = np.random.default_rng(8)
        values = banded_values(rng, 45)
        values[30] = 9.0
        cfg = DetectorConfig()
        base = detect_arima(series_of(values), cfg)
        scaled = detect_arima(series_of(3.0 * values), cfg)
        assert [p.frame_index for p in base] == [p.frame_index for p in scaled]

    def test_short_series_gives_nothing(self):
        assert detect_arima(series_of([1.0] * 20), DetectorConfig()) == []

    def test_points_sorted_by_frame(self):
        rng = np.random.default_rng(9)
        values = banded_values(rng, 70)
        values[[30, 45, 60]] = 20.0
        points = detect_arima(series_of(values), DetectorConfig())
        frames = [p.frame_index for p in points]
        assert frames == sorted(frames)


def label_series_of(labels, track_id=0):
    return LabelSeries(track_id, [(i, lab) for i, lab in enumerate(labels)])


class TestDetectTransitions:
    def test_constant_labels_are_calm(self):
        labels = [Expression.NEUTRAL] * 20
        assert detect_transitions(label_series_of(labels), 5, 0.5) == []

    def test_alternating_labels_flag_all_interior(self):
        labels = [Expression.HAPPINESS, Expression.NEUTRAL] * 10
        points = detect_transitions(label_series_of(labels), 5, 0.5)
        assert [p.frame_index for p in points] == list(range(2, 18))
        assert all(p.score == 1.0 for p in points)

    def test_boundary_share_not_flagged(self):
        # exactly 2 changes among the 4 pairs of a 5-frame window: share 0.5
        labels = [
            Expression.NEUTRAL,
            Expression.NEUTRAL,
            Expression.HAPPINESS,
            Expression.HAPPINESS,
            Expression.NEUTRAL,
            Expression.NEUTRAL,
            Expression.NEUTRAL,
        ]
        points = detect_transitions(label_series_of(labels), 5, 0.5)
        assert points == []

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(10)
        labels = [EXPRESSIONS[int(i)] for i in rng.integers(0, 7, 40)]
        mapping = {e: EXPRESSIONS[(i + 3) % 7] for i, e in enumerate(EXPRESSIONS)}
        base = detect_transitions(label_series_of(labels), 5, 0.5)
        renamed = detect_transitions(label_series_of([mapping[l] for l in labels]), 5, 0.5)
        assert [p.frame_index for p in base] == [p.frame_index for p in renamed]

    def test_even_window_rejected(self):
        with pytest.raises(ValidationError):
            detect_transitions(label_series_of([Expression.NEUTRAL] * 10), 4, 0.5)

    def test_warmup_and_tail_never_flagged(self):
        labels = [Expression.HAPPINESS, Expression.NEUTRAL] * 4
        points = detect_transitions(label_series_of(labels), 5, 0.5)
        assert all(2 <= p.frame_index <= 5 for p in points)


class TestDetectorConfig:
    def test_defaults_follow_calibrated_optimum(self):
        cfg = DetectorConfig()
        assert cfg.window_w == 7
        assert cfg.std_threshold == 1.8
        assert cfg.arima_window == 20
        assert cfg.arima_order == ArimaOrder(2, 0, 2)
        assert cfg.transition_fraction == 0.5

    def test_rejects_even_transition_window(self):
        with pytest.raises(ValidationError):
            DetectorConfig(transition_window=4)

    def test_rejects_tiny_window(self):
        with pytest.raises(ValidationError):
            DetectorConfig(window_w=1)

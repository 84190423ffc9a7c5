import numpy as np
import pytest

from vcanomaly.errors import EstimationError, ValidationError
from vcanomaly.forecast import (
    DEFAULT_ORDER,
    ArimaModel,
    ArimaOrder,
    auto_order,
    difference,
    fit,
    forecast_one,
    integrate,
    select_d,
)


def ar2_series(seed, n=500, phi=(0.5, -0.3), sigma=1.0, burn=50):
    rng = np.random.default_rng(seed)
    e = rng.normal(0, sigma, n + burn)
    x = np.zeros(n + burn)
    for t in range(2, n + burn):
        x[t] = phi[0] * x[t - 1] + phi[1] * x[t - 2] + e[t]
    return x[burn:]


def ma1_series(seed, n=500, theta=0.6, sigma=1.0):
    rng = np.random.default_rng(seed)
    e = rng.normal(0, sigma, n + 1)
    return e[1:] + theta * e[:-1]


class TestOrder:
    def test_rejects_zero_model(self):
        with pytest.raises(ValidationError):
            ArimaOrder(0, 0, 0)

    def test_allows_pure_differencing(self):
        assert ArimaOrder(0, 1, 0).d == 1

    def test_rejects_out_of_bounds(self):
        with pytest.raises(ValidationError):
            ArimaOrder(6, 0, 0)

    def test_default_is_two_zero_two(self):
        assert DEFAULT_ORDER == ArimaOrder(2, 0, 2)


class TestDifference:
    def test_d_zero_is_identity(self):
        series = [1.0, 5.0, 2.0]
        assert list(difference(series, 0)) == series

    def test_single_difference(self):
        assert list(difference([1, 3, 6, 10], 1)) == [2, 3, 4]

    def test_double_difference(self):
        assert list(difference([1, 3, 6, 10], 2)) == [1, 1]

    def test_too_short_rejected(self):
        with pytest.raises(ValidationError):
            difference([1.0, 2.0], 2)

    def test_roundtrip_with_integrate(self):
        rng = np.random.default_rng(1)
        for d in (1, 2, 3):
            series = rng.normal(0, 1, 30)
            heads = [difference(series, k)[0] for k in range(d)]
            rebuilt = integrate(difference(series, d), heads)
            assert np.allclose(rebuilt, series, atol=1e-10)


class TestFit:
    def test_constant_series_ar1(self):
        model = fit(np.full(30, 2.5), ArimaOrder(1, 0, 0))
        assert model.ar_coeffs[0] == pytest.approx(0.0, abs=1e-9)
        assert model.intercept == pytest.approx(2.5)
        assert model.residual_variance == pytest.approx(0.0, abs=1e-12)

    def test_recovers_ar2(self):
        model = fit(ar2_series(seed=3), ArimaOrder(2, 0, 0))
        assert model.ar_coeffs[0] == pytest.approx(0.5, abs=0.15)
        assert model.ar_coeffs[1] == pytest.approx(-0.3, abs=0.15)

    def test_recovers_ma1(self):
        model = fit(ma1_series(seed=3), ArimaOrder(0, 0, 1))
        assert model.ma_coeffs[0] == pytest.approx(0.6, abs=0.15)

    def test_deterministic(self):
        series = ar2_series(seed=9, n=120)
        a = fit(series, ArimaOrder(2, 0, 2))
        b = fit(series, ArimaOrder(2, 0, 2))
        assert a == b

    def test_too_short_series_rejected(self):
        with pytest.raises(EstimationError):
            fit([1.0, 2.0, 3.0], ArimaOrder(2, 0, 2))

    def test_non_finite_rejected(self):
        with pytest.raises(EstimationError):
            fit([1.0, float("nan")] * 10, ArimaOrder(1, 0, 0))

    def test_fitted_ar_is_stationary(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            window = np.abs(rng.normal(1.0, 0.3, 20))
            model = fit(window, ArimaOrder(2, 0, 2))
            roots = np.roots([1.0, -model.ar_coeffs[0], -model.ar_coeffs[1]])
            assert np.all(np.abs(roots) < 1.0)


class TestForecastOne:
    def test_intercept_only_returns_intercept(self):
        model = ArimaModel(ArimaOrder(1, 0, 0), (0.0,), (), 1.7, 0.0, 0.0)
        assert forecast_one(model, [5.0, 6.0, 7.0]) == pytest.approx(1.7)

    def test_ar1_closed_form(self):
        model = ArimaModel(ArimaOrder(1, 0, 0), (0.7,), (), 0.0, 1.0, 0.0)
        assert forecast_one(model, [1.0, 2.0, 4.0]) == pytest.approx(2.8)

    def test_holdout_mse_close_to_noise_floor(self):
        series = ar2_series(seed=3, n=600)
        train, hold = series[:500], series[500:600]
        model = fit(train, ArimaOrder(2, 0, 2))
        history = list(train)
        errors = []
        for value in hold:
            errors.append((forecast_one(model, history) - value) ** 2)
            history.append(value)
        assert float(np.mean(errors)) <= 1.1  # generating noise variance is 1.0

    def test_shift_invariance_for_differenced_models(self):
        rng = np.random.default_rng(11)
        series = np.cumsum(rng.normal(0, 1, 80))
        model_a = fit(series, ArimaOrder(1, 1, 1))
        model_b = fit(series + 250.0, ArimaOrder(1, 1, 1))
        fa = forecast_one(model_a, series)
        fb = forecast_one(model_b, series + 250.0)
        assert fb - fa == pytest.approx(250.0, abs=1e-6)

    def test_history_too_short_rejected(self):
        model = ArimaModel(ArimaOrder(2, 0, 2), (0.1, 0.1), (0.1, 0.1), 0.0, 1.0, 0.0)
        with pytest.raises(ValidationError):
            forecast_one(model, [1.0, 2.0])


class TestAutoOrder:
    def test_white_noise_selects_d_zero_and_small_model(self):
        series = np.random.default_rng(0).normal(0, 1, 120)
        order = auto_order(series)
        assert order.d == 0
        assert order.p <= 1 and order.q <= 1

    def test_random_walk_selects_d_one(self):
        series = np.cumsum(np.random.default_rng(0).normal(0, 1, 120))
        assert auto_order(series).d == 1

    def test_variance_screen_oracle(self):
        walk = np.cumsum(np.random.default_rng(2).normal(0, 1, 200))
        assert np.diff(walk).var() < 0.5 * walk.var()  # the screen's premise
        assert select_d(walk, 1) == 1
        noise = np.random.default_rng(2).normal(0, 1, 200)
        assert np.diff(noise).var() >= 0.5 * noise.var()
        assert select_d(noise, 1) == 0

    def test_selected_order_minimizes_aic(self):
        series = np.random.default_rng(8).normal(0, 1, 90)
        selected = auto_order(series, p_max=2, q_max=2)
        best = fit(series, selected).aic
        for p in range(3):
            for q in range(3):
                if selected.d == 0 and p + q == 0:
                    continue
                other = fit(series, ArimaOrder(p, selected.d, q))
                if not other.degraded:
                    assert best <= other.aic + 1e-9

    def test_short_series_rejected(self):
        with pytest.raises(ValidationError):
            auto_order(np.arange(10.0))

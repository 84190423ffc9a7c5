"""Self-contained ARIMA(p, d, q) estimation and one-step forecasting.

Coefficients are estimated in two stages: a long-autoregression residual
proxy seeds the lagged-value/lagged-error regression, then a derivative-free
coordinate descent refines the conditional sum of squares. Windows in this
engine are short (tens of samples), so the conditional objective is both
adequate and cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, ValidationError

MAX_ORDER = 5
MIN_FIT_MARGIN = 5
CSS_MAX_SWEEPS = 200
CSS_TOLERANCE = 1e-8
STATIONARITY_SHRINK = 0.95
AUTO_ORDER_MIN_LENGTH = 30
VARIANCE_SCREEN_RATIO = 0.5

DEFAULT_P_MAX = 3
DEFAULT_Q_MAX = 3
DEFAULT_D_MAX = 1


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        for name, value in (("p", self.p), ("d", self.d), ("q", self.q)):
            if not isinstance(value, int) or value < 0 or value > MAX_ORDER:
                raise ValidationError(f"order {name} must be an int in [0, {MAX_ORDER}]: {value}")
        if self.d == 0 and self.p + self.q < 1:
            raise ValidationError("a d=0 model needs p + q >= 1")


DEFAULT_ORDER = ArimaOrder(2, 0, 2)


@dataclass(frozen=True)
class ArimaModel:
    order: ArimaOrder
    ar_coeffs: tuple[float, ...]
    ma_coeffs: tuple[float, ...]
    intercept: float
    residual_variance: float
    aic: float
    degraded: bool = False


def difference(series, d: int) -> np.ndarray:
    """Apply first differences d times; the result is shorter by d."""
    if d < 0:
        raise ValidationError(f"d must be non-negative: {d}")
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValidationError("series must be one-dimensional")
    if len(x) <= d:
        raise ValidationError(f"series of length {len(x)} cannot be differenced {d} times")
    for _ in range(d):
        x = np.diff(x)
    return x


def integrate(diffed, heads) -> np.ndarray:
    """Invert `difference` given the leading value of each differencing level."""
    x = np.asarray(diffed, dtype=float)
    for head in reversed(list(heads)):
        x = np.concatenate(([head], x)).cumsum()
    return x


def _css_kernel(w, p, q, params):
    """Conditional sum of squares; errors before the first usable step are zero."""
    n = w.shape[0]
    c = params[0]
    acc = 0.0
    if q == 0:
        for t in range(p, n):
            pred = c
            for i in range(p):
                pred += params[1 + i] * w[t - 1 - i]
            e = w[t] - pred
            acc += e * e
        return acc
    errors = np.zeros(n)
    for t in range(p, n):
        pred = c
        for i in range(p):
            pred += params[1 + i] * w[t - 1 - i]
        for j in range(q):
            k = t - 1 - j
            if k >= 0:
                pred += params[1 + p + j] * errors[k]
        e = w[t] - pred
        errors[t] = e
        acc += e * e
    return acc


try:  # compiled kernel when numba is present; the algorithm is identical
    from numba import njit as _njit

    _css = _njit(cache=True)(_css_kernel)
except ImportError:  # pragma: no cover - exercised only without numba
    _css = _css_kernel


def _coordinate_descent(
    w: np.ndarray, p: int, q: int, params: list[float]
) -> tuple[np.ndarray, float]:
    """Pattern search over the packed (0, ar..., ma...) coefficient vector.

    Each coordinate is walked in its improving direction with step doubling;
    steps halve only when a full sweep stalls, and the search stops once they
    have shrunk below the tolerance relative to their starting scale. The
    series arrives demeaned, so the leading intercept slot stays at zero.
    """
    params = np.asarray(params, dtype=float)
    steps = np.full(len(params), 0.1)
    best = _css(w, p, q, params)
    for _ in range(CSS_MAX_SWEEPS):
        improved = False
        for k in range(1, len(params)):  # slot 0 is the intercept, pinned at 0
            for sign in (1.0, -1.0):
                local = steps[k]
                while True:
                    trial = params.copy()
                    trial[k] += sign * local
                    value = _css(w, p, q, trial)
                    if value < best:
                        best = value
                        params = trial
                        improved = True
                        local *= 2.0
                    else:
                        break
        if not improved:
            steps *= 0.5
            if float(np.max(steps)) < 0.1 * CSS_TOLERANCE:
                break
    return params, best


def _roots_inside_unit_circle(coeffs) -> bool:
    """True when the lag polynomial 1 - c1 z - ... (AR sign convention handled
    by the caller) has all companion roots strictly inside the unit circle."""
    if not coeffs or all(abs(c) < 1e-12 for c in coeffs):
        return True
    roots = np.roots([1.0] + [-c for c in coeffs])
    return bool(np.all(np.abs(roots) < 1.0 - 1e-9))


def _stabilize(coeffs: list[float]) -> list[float]:
    coeffs = list(coeffs)
    for _ in range(500):
        if _roots_inside_unit_circle(coeffs):
            return coeffs
        coeffs = [c * STATIONARITY_SHRINK for c in coeffs]
    return [0.0] * len(coeffs)


def _ols(design: np.ndarray, target: np.ndarray) -> np.ndarray | None:
    if design.shape[0] < design.shape[1]:
        return None
    solution, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < design.shape[1] or not np.all(np.isfinite(solution)):
        return None
    return solution


def _lag_matrix(w: np.ndarray, lags: int, start: int) -> np.ndarray:
    return np.column_stack([w[start - lag : len(w) - lag] for lag in range(1, lags + 1)])


def _hannan_rissanen(dev: np.ndarray, p: int, q: int) -> list[float] | None:
    """Starting (ar..., ma...) values on a demeaned series, or None when the
    regressions degenerate."""
    n = len(dev)
    if q == 0:
        solution = _ols(_lag_matrix(dev, p, p), dev[p:])
        if solution is None:
            return None
        return [float(v) for v in solution]

    long_lag = max(1, min(max(p, q) + 3, n - p - 2 * q - 3))
    if n - long_lag - q < p + q + 1:
        return None
    design = _lag_matrix(dev, long_lag, long_lag)
    solution = _ols(design, dev[long_lag:])
    if solution is None:
        return None
    residuals = np.zeros(n)
    residuals[long_lag:] = dev[long_lag:] - design @ solution

    start = long_lag + q
    columns = []
    if p > 0:
        columns.append(_lag_matrix(dev, p, start))
    columns.append(
        np.column_stack([residuals[start - lag : n - lag] for lag in range(1, q + 1)])
    )
    design2 = np.column_stack(columns)
    solution2 = _ols(design2, dev[start:])
    if solution2 is None:
        return None
    return [float(v) for v in solution2]


def _intercept_only(w: np.ndarray, order: ArimaOrder, degraded: bool) -> ArimaModel:
    c = float(w.mean()) if len(w) else 0.0
    resid = w - c
    n_eff = max(len(w), 1)
    sigma2 = float(resid @ resid) / n_eff
    aic = n_eff * math.log(max(sigma2, 1e-300)) + 2.0
    return ArimaModel(order, (0.0,) * order.p, (0.0,) * order.q, c, sigma2, aic, degraded)


def fit(series, order: ArimaOrder) -> ArimaModel:
    """Estimate an ARIMA model of the given order on the series."""
    p, d, q = order.p, order.d, order.q
    x = np.asarray(series, dtype=float)
    if len(x) < p + q + d + MIN_FIT_MARGIN:
        raise EstimationError(
            f"series of length {len(x)} is too short for order ({p},{d},{q}); "
            f"need at least {p + q + d + MIN_FIT_MARGIN}"
        )
    if not np.all(np.isfinite(x)):
        raise EstimationError("series contains non-finite values")
    w = difference(x, d)
    n = len(w)

    if p == 0 and q == 0:
        return _intercept_only(w, order, degraded=False)

    mean = float(w.mean())
    dev = w - mean
    start_params = _hannan_rissanen(dev, p, q)
    if start_params is None:
        return _intercept_only(w, order, degraded=True)

    params, css_value = _coordinate_descent(dev, p, q, [0.0] + start_params)

    ar = _stabilize([float(v) for v in params[1 : 1 + p]])
    ma = [-v for v in _stabilize([-float(v) for v in params[1 + p :]])]
    final_params = np.array([0.0] + ar + ma)
    if not np.array_equal(final_params, params):
        css_value = _css(dev, p, q, final_params)

    # the mean is estimated directly; the stored intercept is the implied one
    intercept = mean * (1.0 - sum(ar))
    n_eff = max(n - p, 1)
    sigma2 = css_value / n_eff
    aic = n_eff * math.log(max(sigma2, 1e-300)) + 2.0 * (p + q + 1)
    return ArimaModel(
        order, tuple(ar), tuple(ma), intercept, float(sigma2), float(aic), degraded=False
    )


def _one_step_errors(w: np.ndarray, model: ArimaModel) -> np.ndarray:
    p, q = model.order.p, model.order.q
    errors = np.zeros(len(w))
    for t in range(p, len(w)):
        pred = model.intercept
        for i in range(p):
            pred += model.ar_coeffs[i] * w[t - 1 - i]
        for j in range(q):
            k = t - 1 - j
            if k >= 0:
                pred += model.ma_coeffs[j] * errors[k]
        errors[t] = w[t] - pred
    return errors


def forecast_one(model: ArimaModel, history) -> float:
    """One-step-ahead point forecast on the original, undifferenced scale."""
    p, d, q = model.order.p, model.order.d, model.order.q
    x = np.asarray(history, dtype=float)
    if len(x) < p + d + q:
        raise ValidationError(
            f"history of length {len(x)} is too short; need at least {p + d + q}"
        )
    w = difference(x, d) if d else x
    errors = _one_step_errors(w, model) if q else None
    pred = model.intercept
    for i in range(p):
        pred += model.ar_coeffs[i] * w[len(w) - 1 - i]
    for j in range(q):
        pred += model.ma_coeffs[j] * errors[len(w) - 1 - j]

    level_terms = 0.0
    tail = x
    for _ in range(d):
        level_terms += tail[-1]
        tail = np.diff(tail)
    return float(pred + level_terms)


def select_d(series, d_max: int = DEFAULT_D_MAX) -> int:
    """Smallest d whose differenced series passes the variance screen.

    A level series whose first difference has less than half the level
    variance is treated as non-stationary and differenced once more.
    """
    x = np.asarray(series, dtype=float)
    d = 0
    while d < d_max:
        current = difference(x, d)
        var_level = float(current.var())
        if var_level <= 1e-300:
            break
        var_diff = float(np.diff(current).var())
        if var_diff / var_level >= VARIANCE_SCREEN_RATIO:
            break
        d += 1
    return d


def auto_order(
    series,
    p_max: int = DEFAULT_P_MAX,
    q_max: int = DEFAULT_Q_MAX,
    d_max: int = DEFAULT_D_MAX,
) -> ArimaOrder:
    """Grid-search the AIC-minimizing order after screening for d."""
    x = np.asarray(series, dtype=float)
    if len(x) < AUTO_ORDER_MIN_LENGTH:
        raise ValidationError(
            f"auto_order needs at least {AUTO_ORDER_MIN_LENGTH} samples, got {len(x)}"
        )
    d = select_d(x, d_max)
    best_order = None
    best_aic = math.inf
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            if d == 0 and p + q == 0:
                continue
            order = ArimaOrder(p, d, q)
            try:
                model = fit(x, order)
            except EstimationError:
                continue
            if model.degraded:
                continue
            if model.aic < best_aic:
                best_aic = model.aic
                best_order = order
    if best_order is None:
        return ArimaOrder(1, 0, 0)
    return best_order

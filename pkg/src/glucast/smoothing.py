"""Double exponential smoothing (model id ``DFS``): level + trend recursion.

With smoothing factors alpha (level) and beta (trend),

    s_t = alpha * x_t + (1 - alpha) * (s_{t-1} + b_{t-1})
    b_t = beta * (s_t - s_{t-1}) + (1 - beta) * b_{t-1}

initialized as s_0 = x_0, b_0 = x_1 - x_0, with the k-step forecast
s_t + k * b_t.  On exactly linear data the level tracks the series and the
trend equals the slope for every (alpha, beta), which the tests exploit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Forecast, ModelId, TimeSeries

__all__ = ["DesState", "des_fit", "des_forecast", "des_grid_search", "GRID"]

# Parameter grid searched when alpha/beta are not supplied.
GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))  # 0.05 .. 0.95


@dataclass(frozen=True)
class DesState:
    """Fitted smoothing state: factors, terminal level/trend, in-sample fit."""

    alpha: float
    beta: float
    s: float
    b: float
    fitted: tuple[float, ...]  # one-step-ahead predictions for x_1 .. x_{n-1}
    origin_timestamp: int = 0
    interval_s: int = 300

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError("alpha and beta must lie in [0, 1]")


def des_fit(series: TimeSeries, alpha: float, beta: float) -> DesState:
    """Run the level/trend recursion over the series.

    ``fitted[t-1]`` is the one-step prediction s_{t-1} + b_{t-1} of x_t, so
    the fitted list has length n - 1.  Needs at least two points (the initial
    trend is the first difference).
    """
    x = series.values
    if len(x) < 2:
        raise ValueError("need at least 2 points (initial trend undefined)")
    s = x[0]
    b = x[1] - x[0]
    fitted = np.empty(len(x) - 1)
    for t in range(1, len(x)):
        fitted[t - 1] = s + b
        s_new = alpha * x[t] + (1.0 - alpha) * (s + b)
        b = beta * (s_new - s) + (1.0 - beta) * b
        s = s_new
    return DesState(
        alpha=alpha,
        beta=beta,
        s=float(s),
        b=float(b),
        fitted=tuple(float(v) for v in fitted),
        origin_timestamp=series.end_timestamp,
        interval_s=series.interval_s,
    )


def des_forecast(state: DesState, k: int) -> Forecast:
    """Linear extrapolation: value i is s + (i+1) * b.  No clamping; negative
    forecasts are a reporting concern, not a model one."""
    if k < 1:
        raise ValueError("horizon must be >= 1")
    values = tuple(state.s + (i + 1) * state.b for i in range(k))
    return Forecast(
        origin_timestamp=state.origin_timestamp,
        horizon=k,
        values=values,
        model_id=ModelId.DFS,
    )


def _sse(x: np.ndarray, alpha: float, beta: float) -> float:
    s = x[0]
    b = x[1] - x[0]
    sse = 0.0
    for t in range(1, len(x)):
        pred = s + b
        err = x[t] - pred
        sse += err * err
        s_new = alpha * x[t] + (1.0 - alpha) * pred
        b = beta * (s_new - s) + (1.0 - beta) * b
        s = s_new
    return sse


def des_grid_search(train: TimeSeries, grid=GRID) -> tuple[float, float]:
    """Pick (alpha, beta) minimizing in-sample one-step SSE over the grid.

    Ties break toward smaller alpha, then smaller beta.  SSE values within
    rounding noise of each other count as tied (on exactly linear or constant
    data every grid point is a fixed point, differing only in float residue).
    """
    x = train.values
    if len(x) < 3:
        raise ValueError("need at least 3 points for a grid search")
    tol = 1e-12 * len(x) * float(np.max(np.abs(x)) ** 2)
    best = (float("inf"), 0.0, 0.0)
    for alpha in grid:
        for beta in grid:
            sse = _sse(x, alpha, beta)
            if sse < best[0] - tol:
                best = (sse, alpha, beta)
    return best[1], best[2]

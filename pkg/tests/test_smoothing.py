import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glucast.core import ModelId, TimeSeries
from glucast.smoothing import GRID, DesState, des_fit, des_forecast, des_grid_search


class TestDesFit:
    def test_linear_data_is_fixed_point(self):
        series = TimeSeries.from_values([2.0, 5.0, 8.0, 11.0])
        for alpha, beta in [(0.1, 0.1), (0.5, 0.9), (1.0, 0.0), (0.05, 0.95)]:
            state = des_fit(series, alpha, beta)
            assert state.s == pytest.approx(11.0, abs=1e-12)
            assert state.b == pytest.approx(3.0, abs=1e-12)

    def test_constant_series(self):
        series = TimeSeries.from_values([100.0] * 4)
        state = des_fit(series, 0.7, 0.4)
        assert state.s == 100.0
        assert state.b == 0.0

    def test_two_step_hand_unroll(self):
        # alpha=1, beta=1 on [1, 4, 2]: s1=4, b1=3; s2=2, b2=-2
        state = des_fit(TimeSeries.from_values([1.0, 4.0, 2.0]), 1.0, 1.0)
        assert (state.s, state.b) == (2.0, -2.0)
        assert state.fitted == (4.0, 7.0)  # s0+b0, s1+b1

    def test_fitted_length(self):
        series = TimeSeries.from_values(np.linspace(50, 70, 17))
        state = des_fit(series, 0.3, 0.3)
        assert len(state.fitted) == len(series) - 1

    def test_too_short(self):
        with pytest.raises(ValueError, match="at least 2"):
            des_fit(TimeSeries.from_values([5.0]), 0.5, 0.5)

    def test_factor_bounds(self):
        with pytest.raises(ValueError):
            DesState(alpha=1.2, beta=0.0, s=0, b=0, fitted=())

    @settings(max_examples=60)
    @given(
        a=st.floats(-50, 400), c=st.floats(-5, 5),
        alpha=st.floats(0, 1), beta=st.floats(0, 1),
        n=st.integers(3, 40),
    )
    def test_linear_fixed_point_property(self, a, c, alpha, beta, n):
        x = a + c * np.arange(n)
        state = des_fit(TimeSeries.from_values(x), alpha, beta)
        assert state.s == pytest.approx(x[-1], abs=1e-9)
        assert state.b == pytest.approx(c, abs=1e-9)

    def test_online_continuation(self):
        rng = np.random.default_rng(2)
        x = 100 + rng.normal(0, 5, 60)
        series = TimeSeries.from_values(x)
        whole = des_fit(series, 0.4, 0.3)

        prefix = des_fit(series.slice(0, 25), 0.4, 0.3)
        s, b = prefix.s, prefix.b
        for t in range(25, 60):
            s_new = 0.4 * x[t] + 0.6 * (s + b)
            b = 0.3 * (s_new - s) + 0.7 * b
            s = s_new
        assert s == pytest.approx(whole.s, abs=1e-12)
        assert b == pytest.approx(whole.b, abs=1e-12)


class TestDesForecast:
    def test_direct_extrapolation(self):
        state = DesState(alpha=0.5, beta=0.5, s=11.0, b=3.0, fitted=(1.0,))
        assert des_forecast(state, 3).values == (14.0, 17.0, 20.0)

    def test_zero_trend(self):
        state = DesState(alpha=0.5, beta=0.5, s=100.0, b=0.0, fitted=(1.0,))
        assert des_forecast(state, 5).values == (100.0,) * 5

    def test_negative_forecasts_not_clamped(self):
        state = DesState(alpha=1.0, beta=1.0, s=2.0, b=-2.0, fitted=(1.0,))
        assert des_forecast(state, 2).values == (0.0, -2.0)

    def test_model_id(self):
        state = DesState(alpha=0.5, beta=0.5, s=1.0, b=1.0, fitted=(1.0,))
        assert des_forecast(state, 1).model_id is ModelId.DFS

    def test_forecast_is_affine_in_k(self):
        state = DesState(alpha=0.2, beta=0.9, s=57.5, b=-1.25, fitted=(1.0,))
        values = np.array(des_forecast(state, 10).values)
        assert np.allclose(np.diff(values, n=2), 0.0, atol=1e-12)


class TestGridSearch:
    def test_linear_series_tie_break(self):
        series = TimeSeries.from_values(2.0 + 3.0 * np.arange(30))
        assert des_grid_search(series) == (0.05, 0.05)

    def test_constant_series_tie_break(self):
        series = TimeSeries.from_values([42.0] * 30)
        assert des_grid_search(series) == (0.05, 0.05)

    def test_matches_brute_force_on_noise(self):
        rng = np.random.default_rng(11)
        x = 100 + rng.normal(0, 5, 500)
        series = TimeSeries.from_values(x)
        got = des_grid_search(series)

        # independent brute-force sweep with its own recursion
        def sse(alpha, beta):
            s, b = x[0], x[1] - x[0]
            total = 0.0
            for t in range(1, len(x)):
                pred = s + b
                total += (x[t] - pred) ** 2
                s_new = alpha * x[t] + (1 - alpha) * pred
                b = beta * (s_new - s) + (1 - beta) * b
                s = s_new
            return total

        best = min(
            ((sse(a, b), a, b) for a in GRID for b in GRID),
            key=lambda r: (r[0], r[1], r[2]),
        )
        assert got == (best[1], best[2])

    def test_too_short(self):
        with pytest.raises(ValueError):
            des_grid_search(TimeSeries.from_values([1.0, 2.0]))

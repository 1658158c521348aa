"""ARIMA estimation by conditional sum of squares, and automatic (p, d, q)
selection by AIC.

Run from the repo root:  python3 demos/03_arima_order_selection.py
"""

from pathlib import Path

import numpy as np

from glucast.arima import auto_arima, fit_arima, forecast_arima, select_d
from glucast.core import TimeSeries
from glucast.ingest import parse_csv, regularize

HERE = Path(__file__).parent

# Parameter recovery: simulate an AR(1) with phi = 0.8 and fit it back.
rng = np.random.default_rng(13)
n = 2000
x = np.empty(n)
x[0] = 150.0
eps = rng.normal(0, 1, n)
for t in range(1, n):
    x[t] = 150.0 * 0.2 + 0.8 * x[t - 1] + eps[t]
series = TimeSeries.from_values(x)

model = fit_arima(series, 1, 0, 0)
print(f"simulated AR(1), phi=0.8: fitted phi={model.phi[0]:.4f}, "
      f"sigma2={model.sigma2:.3f}, AIC={model.aic:.1f}")

# The differencing heuristic: stationary noise stays at d=0, a trend forces
# at least one difference.
trend = 0.5 * np.arange(400) + rng.normal(0, 0.5, 400) + 60
print(f"d for the AR(1) series: {select_d(series.values)}")
print(f"d for a linear trend:   {select_d(trend)}")

# Automatic order selection on the bundled CGM data (a small grid keeps this
# demo quick; the default searches p, q up to 5).
raw = (HERE.parent / "data" / "synthetic_cgm.csv").read_bytes()
cgm = max(regularize(parse_csv(raw), 300), key=len).slice(0, 800)
best = auto_arima(cgm, max_p=3, max_d=2, max_q=3)
print(f"\nCGM slice: selected ARIMA({best.p},{best.d},{best.q}), "
      f"AIC={best.aic:.1f}, BIC={best.bic:.1f}, warnings={list(best.warnings)}")

forecast = forecast_arima(best, cgm, 6)
print("next half hour (mg/dL):", [f"{v:.1f}" for v in forecast.values])

"""Double exponential smoothing: the level/trend recursion, its fixed point
on linear data, and a short glucose forecast.

Run from the repo root:  python3 demos/02_smoothing_baseline.py
"""

from pathlib import Path

import numpy as np

from glucast.core import TimeSeries
from glucast.ingest import parse_csv, regularize
from glucast.smoothing import des_fit, des_forecast, des_grid_search
from glucast.svg import line_plot

HERE = Path(__file__).parent
OUT = HERE / "output"
OUT.mkdir(exist_ok=True)

# On exactly linear data the recursion locks on: the level equals the last
# observation and the trend equals the slope, for any smoothing factors.
line = TimeSeries.from_values(2.0 + 3.0 * np.arange(20))
state = des_fit(line, alpha=0.3, beta=0.7)
print(f"linear data: level {state.s:.6f} (last value 59), trend {state.b:.6f} (slope 3)")
print(f"k=4 forecast: {des_forecast(state, 4).values}  (continues the line)")

# On real-shaped data the smoothing factors matter; pick them by in-sample
# one-step SSE over a coarse grid.
raw = (HERE.parent / "data" / "synthetic_cgm.csv").read_bytes()
series = max(regularize(parse_csv(raw), 300), key=len)
train = series.slice(0, len(series) - 12)
alpha, beta = des_grid_search(train)
print(f"\nCGM data: grid search picked alpha={alpha}, beta={beta}")

state = des_fit(train, alpha, beta)
forecast = des_forecast(state, 12)  # one hour ahead at 5-minute cadence
actual = series.values[-12:]
print("hour-ahead forecast vs actual (mg/dL):")
for i, (p, a) in enumerate(zip(forecast.values, actual), start=1):
    print(f"  +{5 * i:3d} min   {p:7.1f}   {a:7.1f}")
print(f"MAE over the hour: {np.mean(np.abs(np.asarray(forecast.values) - actual)):.2f} mg/dL")

hours = series.timestamps[-48:] / 3600.0
fc_hours = hours[-12:]
svg_path = OUT / "smoothing_forecast.svg"
svg_path.write_text(line_plot(
    [
        ("observed", hours.tolist(), series.values[-48:].tolist()),
        ("forecast", fc_hours.tolist(), list(forecast.values)),
    ],
    title="Level+trend smoothing, one hour ahead",
    x_label="hours since epoch", y_label="mg/dL",
))
print(f"wrote {svg_path}")

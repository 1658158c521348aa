"""BATS vs TBATS on the daily glucose cycle: integer-period seasonal states
against trigonometric harmonics.

Run from the repo root:  python3 demos/04_seasonal_state_space.py
"""

from pathlib import Path

import numpy as np

from glucast.ingest import parse_csv, regularize
from glucast.statespace import BatsConfig, bats_fit, forecast_bats, select_lambda, tbats_fit
from glucast.svg import line_plot

HERE = Path(__file__).parent
OUT = HERE / "output"
OUT.mkdir(exist_ok=True)

raw = (HERE.parent / "data" / "synthetic_cgm.csv").read_bytes()
series = max(regularize(parse_csv(raw), 300), key=len)
day = 288  # one day at 5-minute cadence
train = series.slice(0, len(series) - day)

# Box-Cox strength chosen by the block-stability criterion.
lam = select_lambda(train)
print(f"selected Box-Cox lambda: {lam}")

# BATS carries one state per 5-minute phase of the day (288 of them);
# TBATS compresses the same cycle into a few harmonic pairs.
bats = bats_fit(train, BatsConfig(use_box_cox=True, box_cox_lambda=lam,
                                  use_trend=True, seasonal_periods=(day,)))
tbats = tbats_fit(train, BatsConfig(use_box_cox=True, box_cox_lambda=lam,
                                    use_trend=True, seasonal_periods=(day,),
                                    harmonics=(5,)))
print(f"BATS : state dimension {bats.state_dimension:4d}, "
      f"in-sample RMSE {np.sqrt(bats.sse / bats.n_obs):.4f} (transformed scale)")
print(f"TBATS: state dimension {tbats.state_dimension:4d}, "
      f"in-sample RMSE {np.sqrt(tbats.sse / tbats.n_obs):.4f} (transformed scale)")

actual = series.values[-day:]
rows = []
for name, model in (("BATS", bats), ("TBATS", tbats)):
    forecast = forecast_bats(model, day)
    mae = float(np.mean(np.abs(np.asarray(forecast.values) - actual)))
    rows.append((name, forecast))
    print(f"{name}: day-ahead MAE {mae:.2f} mg/dL")

hours = series.timestamps[-day:] / 3600.0
svg_path = OUT / "seasonal_forecasts.svg"
svg_path.write_text(line_plot(
    [("actual", hours.tolist(), actual.tolist())]
    + [(name, hours.tolist(), list(fc.values)) for name, fc in rows],
    title="Day-ahead seasonal forecasts",
    x_label="hours since epoch", y_label="mg/dL",
))
print(f"wrote {svg_path}")

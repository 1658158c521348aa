"""Walk through ingestion: parse the bundled CGM file, regularize it onto the
5-minute grid, and summarize the glycemic profile.

Run from the repo root:  python3 demos/01_dataset_stats.py
"""

from pathlib import Path

import numpy as np

from glucast.eval import range_stats
from glucast.ingest import GapPolicy, parse_csv, regularize
from glucast.svg import line_plot

HERE = Path(__file__).parent
OUT = HERE / "output"
OUT.mkdir(exist_ok=True)

# The bundled file uses the single-subject preset: ISO-8601 timestamps and a
# glucose column in mg/dL.
raw = (HERE.parent / "data" / "synthetic_cgm.csv").read_bytes()
samples = parse_csv(raw)
print(f"parsed {len(samples)} samples "
      f"spanning {(samples[-1].timestamp - samples[0].timestamp) / 86400:.1f} days")

# Real CGM exports have dropouts; regularize() bridges small gaps by linear
# interpolation and splits at large ones.  The bundled file is gap-free, so a
# single segment comes back.
segments = regularize(samples, interval_s=300, policy=GapPolicy(max_gap_s=900))
series = max(segments, key=len)
print(f"{len(segments)} segment(s); using {len(series)} points on a 300 s grid")

values = series.values
print(f"glucose: {values.mean():.1f} ± {values.std():.1f} mg/dL, "
      f"range {values.min():.1f} - {values.max():.1f}")

# Time in/above/below the 70-180 mg/dL consensus range, plus per-day spread.
stats = range_stats(series, lo=70, hi=180)
print(f"TIR {stats.tir:.3f}   TAR {stats.tar:.3f}   TBR {stats.tbr:.3f}")
print("per-day summaries:")
for day in stats.days:
    print(f"  {day.date}: min {day.minimum:6.1f}  median {day.median:6.1f}  "
          f"max {day.maximum:6.1f}")

# One polyline per day against hour-of-day shows the circadian shape.
day_index = series.timestamps // 86400
plots = []
for day in np.unique(day_index):
    sel = day_index == day
    hours = (series.timestamps[sel] % 86400) / 3600.0
    plots.append((f"day {int(day - day_index[0])}", hours.tolist(), values[sel].tolist()))
svg_path = OUT / "daily_profiles.svg"
svg_path.write_text(line_plot(plots, title="Daily glucose profiles",
                              x_label="hour of day (UTC)", y_label="mg/dL"))
print(f"wrote {svg_path}")

"""Seeded synthetic CGM-like data so the whole pipeline runs without any
external file: a daily sinusoid, meal-shaped bumps, and smooth noise.

The generator's moments are knowable from the seed, which the test suite
uses as a stand-in for real-dataset summary checks.
"""

from __future__ import annotations

import numpy as np

from .core import TimeSeries

__all__ = ["make_synthetic_series", "to_csv", "DEFAULT_SEED"]

DEFAULT_SEED = 42
_DAY_S = 86400


def make_synthetic_series(
    days: float = 7.0,
    interval_s: int = 300,
    seed: int = DEFAULT_SEED,
    baseline: float = 110.0,
    daily_amplitude: float = 18.0,
    meal_hours: tuple[float, ...] = (8.0, 13.0, 19.0),
    meal_amplitudes: tuple[float, ...] = (45.0, 35.0, 50.0),
    meal_width_min: float = 50.0,
    noise_sigma: float = 5.0,
    start_timestamp: int = 1477267200,  # 2016-10-24T00:00:00Z
    subject_id: str = "synthetic",
) -> TimeSeries:
    """Glucose-like trace: circadian swing + post-meal excursions + AR noise."""
    n = int(days * _DAY_S / interval_s)
    t = np.arange(n) * interval_s
    hours = (t % _DAY_S) / 3600.0

    values = baseline + daily_amplitude * np.sin(2.0 * np.pi * (hours - 7.0) / 24.0)
    width_h = meal_width_min / 60.0
    for hour, amp in zip(meal_hours, meal_amplitudes):
        delta = np.minimum(np.abs(hours - hour), 24.0 - np.abs(hours - hour))
        values = values + amp * np.exp(-0.5 * (delta / width_h) ** 2)

    rng = np.random.default_rng(seed)
    shocks = rng.normal(0.0, noise_sigma, size=n)
    noise = np.empty(n)
    acc = 0.0
    for i in range(n):  # AR(1) smoothing keeps the trace CGM-smooth
        acc = 0.8 * acc + shocks[i]
        noise[i] = acc
    values = values + 0.6 * noise

    values = np.clip(values, 45.0, 350.0)
    return TimeSeries.from_values(
        values, interval_s=interval_s, start_timestamp=start_timestamp,
        subject_id=subject_id,
    )


def to_csv(series: TimeSeries) -> str:
    """CSV in the single-subject preset layout (ISO-8601 UTC timestamps)."""
    from datetime import datetime, timezone

    lines = ["timestamp,glucose"]
    for s in series.samples:
        stamp = datetime.fromtimestamp(s.timestamp, tz=timezone.utc).strftime(
            "%Y-%m-%dT%H:%M:%SZ"
        )
        lines.append(f"{stamp},{s.value:.1f}")
    return "\n".join(lines) + "\n"

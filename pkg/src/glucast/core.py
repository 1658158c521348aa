"""Domain types shared by every forecaster: samples, series, forecasts, configs.

All types are immutable after construction and safe to share across threads.
Timestamps are integer seconds since the Unix epoch (UTC); glucose values are
mg/dL floats.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

__all__ = [
    "ModelId",
    "GlucoseSample",
    "TimeSeries",
    "Forecast",
    "ForecasterConfig",
    "GLUCOSE_MIN",
    "GLUCOSE_MAX",
    "persistence_forecast",
]

# Physiological sanity bounds, enforced at ingestion (a reading outside this
# range is a data error, e.g. mmol/L fed to a mg/dL pipeline).  Derived series
# (standardized, differenced, forecast) are not subject to them.
GLUCOSE_MIN = 0.0
GLUCOSE_MAX = 1000.0


class ModelId(enum.Enum):
    """Identity of the model that produced a forecast.

    ``DFS`` is double exponential smoothing (level + trend recursion); the
    historical abbreviation is kept for report parity.  Enumeration order is
    the deterministic tie-break order used by comparison reports.
    """

    DFS = "DFS"
    AutoARIMA = "AutoARIMA"
    BATS = "BATS"
    TBATS = "TBATS"
    TimeGlu = "TimeGlu"
    Persistence = "Persistence"

    @property
    def rank(self) -> int:
        return list(ModelId).index(self)


@dataclass(frozen=True)
class GlucoseSample:
    """One CGM reading: epoch-second timestamp and glucose value in mg/dL."""

    timestamp: int
    value: float

    def __post_init__(self) -> None:
        if not isinstance(self.timestamp, int):
            object.__setattr__(self, "timestamp", int(self.timestamp))
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite glucose value at t={self.timestamp}")

    def to_dict(self) -> dict:
        return {"timestamp": self.timestamp, "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> "GlucoseSample":
        return cls(timestamp=int(d["timestamp"]), value=float(d["value"]))


@dataclass(frozen=True)
class TimeSeries:
    """A uniformly sampled glucose trace.

    Invariants checked at construction: at least one sample, strictly
    increasing timestamps, and consecutive gaps all equal to ``interval_s``.
    Irregular raw data must go through ``ingest.regularize`` first.
    """

    samples: tuple[GlucoseSample, ...]
    interval_s: int
    subject_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        if len(self.samples) == 0:
            raise ValueError("empty input")
        if self.interval_s <= 0:
            raise ValueError(f"interval_s must be positive, got {self.interval_s}")
        ts = np.array([s.timestamp for s in self.samples], dtype=np.int64)
        if len(ts) > 1:
            gaps = np.diff(ts)
            if np.any(gaps <= 0):
                raise ValueError("timestamps must be strictly increasing")
            if np.any(gaps != self.interval_s):
                bad = int(np.argmax(gaps != self.interval_s))
                raise ValueError(
                    f"non-uniform grid: gap of {int(gaps[bad])}s at index {bad} "
                    f"(expected {self.interval_s}s)"
                )

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def values(self) -> np.ndarray:
        """Glucose values as a fresh float64 array."""
        return np.array([s.value for s in self.samples], dtype=np.float64)

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([s.timestamp for s in self.samples], dtype=np.int64)

    @property
    def start_timestamp(self) -> int:
        return self.samples[0].timestamp

    @property
    def end_timestamp(self) -> int:
        return self.samples[-1].timestamp

    def slice(self, start: int, stop: int) -> "TimeSeries":
        """Sub-series by sample index (grid preserved)."""
        return TimeSeries(self.samples[start:stop], self.interval_s, self.subject_id)

    def with_values(self, values: np.ndarray) -> "TimeSeries":
        """Same grid, new values (used by standardize / noise augmentation)."""
        if len(values) != len(self.samples):
            raise ValueError("value count mismatch")
        samples = tuple(
            GlucoseSample(s.timestamp, float(v))
            for s, v in zip(self.samples, values)
        )
        return TimeSeries(samples, self.interval_s, self.subject_id)

    @classmethod
    def from_values(
        cls,
        values,
        interval_s: int = 300,
        start_timestamp: int = 0,
        subject_id: str = "",
    ) -> "TimeSeries":
        samples = tuple(
            GlucoseSample(start_timestamp + i * interval_s, float(v))
            for i, v in enumerate(values)
        )
        return cls(samples, interval_s, subject_id)

    def to_dict(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "interval_s": self.interval_s,
            "samples": [s.to_dict() for s in self.samples],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TimeSeries":
        return cls(
            samples=tuple(GlucoseSample.from_dict(s) for s in d["samples"]),
            interval_s=int(d["interval_s"]),
            subject_id=str(d["subject_id"]),
        )


@dataclass(frozen=True)
class Forecast:
    """Point predictions for the k steps after ``origin_timestamp``."""

    origin_timestamp: int
    horizon: int
    values: tuple[float, ...]
    model_id: ModelId

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if len(self.values) != self.horizon:
            raise ValueError(
                f"forecast has {len(self.values)} values for horizon {self.horizon}"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("forecast values must be finite")

    def to_dict(self) -> dict:
        return {
            "origin_timestamp": self.origin_timestamp,
            "horizon": self.horizon,
            "values": list(self.values),
            "model_id": self.model_id.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Forecast":
        return cls(
            origin_timestamp=int(d["origin_timestamp"]),
            horizon=int(d["horizon"]),
            values=tuple(float(v) for v in d["values"]),
            model_id=ModelId(d["model_id"]),
        )


@dataclass(frozen=True)
class ForecasterConfig:
    """A model choice plus everything needed to reproduce its fit.

    ``params`` is the model-specific block (one dataclass per model, ``None``
    for persistence); ``seed`` drives every stochastic component (weight
    init, noise augmentation), so equal configs imply equal results.
    """

    model_id: ModelId
    horizon: int = 1
    seed: int = 0
    params: Any = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.label:
            object.__setattr__(self, "label", self.model_id.value)


def persistence_forecast(series: TimeSeries, k: int) -> Forecast:
    """Naive baseline: repeat the last observed value k times."""
    if k < 1:
        raise ValueError("horizon must be >= 1")
    last = series.samples[-1].value
    return Forecast(
        origin_timestamp=series.end_timestamp,
        horizon=k,
        values=(last,) * k,
        model_id=ModelId.Persistence,
    )

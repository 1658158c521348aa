"""CGM file ingestion: CSV parsing, grid regularization, splitting, scaling.

Raw CGM exports are messy: duplicate rows, sensor dropouts, off-grid
timestamps.  This module turns them into the uniform :class:`~glucast.core.TimeSeries`
the forecasters expect, and owns the train/test split, standardization and
Gaussian noise augmentation used for neural training.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone

import numpy as np

from .core import GLUCOSE_MAX, GLUCOSE_MIN, GlucoseSample, TimeSeries

__all__ = [
    "IngestError",
    "CsvSchema",
    "SCHEMA_PRESETS",
    "GapAction",
    "GapPolicy",
    "Standardization",
    "parse_csv",
    "parse_csv_by_subject",
    "regularize",
    "split",
    "standardize",
    "destandardize",
    "add_noise",
]

DEFAULT_INTERVAL_S = 300  # 5-minute CGM cadence


class IngestError(ValueError):
    """Raised for malformed input data; carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class CsvSchema:
    """Column layout of a CGM CSV file.

    ``timestamp_format`` is ``"iso8601"`` (``%Y-%m-%dT%H:%M:%SZ``, UTC),
    ``"epoch"`` (integer seconds), or any explicit ``strptime`` pattern.
    ``subject_column`` is set for multi-subject files.
    """

    timestamp_column: str = "timestamp"
    value_column: str = "glucose"
    timestamp_format: str = "iso8601"
    subject_column: str | None = None


SCHEMA_PRESETS: dict[str, CsvSchema] = {
    # Single-subject week-long CGM export.
    "cgm-glucose": CsvSchema(
        timestamp_column="timestamp", value_column="glucose",
        timestamp_format="iso8601",
    ),
    # Multi-subject clinical export; one extra id column.
    "colas": CsvSchema(
        timestamp_column="timestamp", value_column="glucose",
        timestamp_format="iso8601", subject_column="subject_id",
    ),
}


class GapAction(enum.Enum):
    SplitSegments = "split-segments"
    Error = "error"


@dataclass(frozen=True)
class GapPolicy:
    """What to do about holes in the raw sample stream.

    Gaps up to ``max_gap_s`` are filled by linear interpolation on the grid;
    larger gaps either split the data into independent segments or abort.
    """

    max_gap_s: int = 900
    on_larger: GapAction = GapAction.SplitSegments


@dataclass(frozen=True)
class Standardization:
    """Affine scaling to zero mean / unit std (population convention, divisor n)."""

    mean: float
    std: float

    def __post_init__(self) -> None:
        if self.std <= 0:
            raise ValueError("std must be positive")

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def invert(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.std + self.mean


# ---------------------------------------------------------------------------
# CSV parsing
# ---------------------------------------------------------------------------

def _parse_timestamp(text: str, fmt: str, line: int) -> int:
    text = text.strip()
    try:
        if fmt == "epoch":
            return int(float(text))
        if fmt == "iso8601":
            dt = datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ")
        else:
            dt = datetime.strptime(text, fmt)
    except ValueError as exc:
        raise IngestError(f"unparseable timestamp {text!r}: {exc}", line=line) from None
    return int(dt.replace(tzinfo=timezone.utc).timestamp())


def _decode(text: bytes | str) -> str:
    if isinstance(text, bytes):
        return text.decode("utf-8")
    return text


def parse_csv_by_subject(
    text: bytes | str, schema: CsvSchema = SCHEMA_PRESETS["cgm-glucose"]
) -> dict[str, list[GlucoseSample]]:
    """Parse a CGM CSV into per-subject sample lists.

    Samples come back sorted by timestamp with duplicate timestamps collapsed
    to the arithmetic mean of their values.  Rows failing to parse, or with a
    glucose value outside the physiological bound, raise :class:`IngestError`
    with the 1-based line number.
    """
    reader = csv.DictReader(io.StringIO(_decode(text)))
    if reader.fieldnames is None:
        raise IngestError("empty file")
    for col in (schema.timestamp_column, schema.value_column):
        if col not in reader.fieldnames:
            raise IngestError(
                f"missing column {col!r} (file has {reader.fieldnames})", line=1
            )
    if schema.subject_column is not None and schema.subject_column not in reader.fieldnames:
        raise IngestError(f"missing subject column {schema.subject_column!r}", line=1)

    rows: dict[str, list[tuple[int, float]]] = {}
    for row in reader:
        line = reader.line_num
        raw_value = (row.get(schema.value_column) or "").strip()
        raw_ts = (row.get(schema.timestamp_column) or "").strip()
        if not raw_ts and not raw_value:
            continue  # blank line
        ts = _parse_timestamp(raw_ts, schema.timestamp_format, line)
        try:
            value = float(raw_value)
        except ValueError:
            raise IngestError(f"unparseable glucose value {raw_value!r}", line=line) from None
        if not math.isfinite(value) or value <= GLUCOSE_MIN or value >= GLUCOSE_MAX:
            raise IngestError(
                f"glucose value {value} outside ({GLUCOSE_MIN:g}, {GLUCOSE_MAX:g}) mg/dL",
                line=line,
            )
        subject = row[schema.subject_column].strip() if schema.subject_column else ""
        rows.setdefault(subject, []).append((ts, value))

    if not rows:
        raise IngestError("no data rows in file")

    out: dict[str, list[GlucoseSample]] = {}
    for subject, pairs in rows.items():
        pairs.sort(key=lambda p: p[0])
        samples: list[GlucoseSample] = []
        i = 0
        while i < len(pairs):
            j = i
            while j + 1 < len(pairs) and pairs[j + 1][0] == pairs[i][0]:
                j += 1
            mean_value = sum(p[1] for p in pairs[i : j + 1]) / (j - i + 1)
            samples.append(GlucoseSample(pairs[i][0], mean_value))
            i = j + 1
        out[subject] = samples
    return out


def parse_csv(
    text: bytes | str,
    schema: CsvSchema = SCHEMA_PRESETS["cgm-glucose"],
    subject: str | None = None,
) -> list[GlucoseSample]:
    """Parse a single subject's samples from a CGM CSV.

    For multi-subject files pass ``subject`` to select one, or use
    :func:`parse_csv_by_subject`.
    """
    by_subject = parse_csv_by_subject(text, schema)
    if subject is not None:
        if subject not in by_subject:
            raise IngestError(
                f"subject {subject!r} not in file (has {sorted(by_subject)})"
            )
        return by_subject[subject]
    if len(by_subject) > 1:
        raise IngestError(
            f"file contains {len(by_subject)} subjects; pass subject= to pick one"
        )
    return next(iter(by_subject.values()))


# ---------------------------------------------------------------------------
# Grid regularization
# ---------------------------------------------------------------------------

def regularize(
    samples: list[GlucoseSample],
    interval_s: int = DEFAULT_INTERVAL_S,
    policy: GapPolicy = GapPolicy(),
    subject_id: str = "",
) -> list[TimeSeries]:
    """Resample onto the uniform grid ``{t0 + i * interval_s}``.

    Gaps up to ``policy.max_gap_s`` are bridged by linear interpolation at the
    grid points; larger gaps split the stream into independent segments (each
    anchored at its own first sample) or raise, per policy.
    """
    if not samples:
        raise IngestError("empty input")
    if policy.max_gap_s < interval_s:
        raise ValueError("max_gap_s must be >= interval_s")
    ts = np.array([s.timestamp for s in samples], dtype=np.int64)
    if np.any(np.diff(ts) <= 0):
        raise IngestError("samples must be sorted with unique timestamps")

    # Split into runs of consecutive samples whose gaps are all bridgeable.
    breaks = np.where(np.diff(ts) > policy.max_gap_s)[0]
    if len(breaks) > 0 and policy.on_larger is GapAction.Error:
        t_before = int(ts[breaks[0]])
        gap = int(ts[breaks[0] + 1] - ts[breaks[0]])
        raise IngestError(f"gap of {gap}s after t={t_before} exceeds max_gap_s")

    segments: list[TimeSeries] = []
    start = 0
    for end in list(breaks + 1) + [len(samples)]:
        seg = samples[start:end]
        start = end
        seg_ts = np.array([s.timestamp for s in seg], dtype=np.float64)
        seg_vs = np.array([s.value for s in seg], dtype=np.float64)
        n_points = int((seg_ts[-1] - seg_ts[0]) // interval_s) + 1
        grid = seg_ts[0] + interval_s * np.arange(n_points, dtype=np.float64)
        values = np.interp(grid, seg_ts, seg_vs)
        out = tuple(
            GlucoseSample(int(t), float(v)) for t, v in zip(grid, values)
        )
        segments.append(TimeSeries(out, interval_s, subject_id))
    return segments


# ---------------------------------------------------------------------------
# Split / scaling / augmentation
# ---------------------------------------------------------------------------

def split(series: TimeSeries, train_fraction: float) -> tuple[TimeSeries, TimeSeries]:
    """Chronological split: first ``ceil(fraction * n)`` points train, rest test."""
    if not (0.0 < train_fraction < 1.0):
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(series)
    if n < 2:
        raise ValueError("need at least 2 points to split")
    n_train = math.ceil(train_fraction * n)
    if n_train >= n:
        raise ValueError(
            f"train_fraction {train_fraction} leaves an empty test set (n={n})"
        )
    return series.slice(0, n_train), series.slice(n_train, n)


def standardize(series: TimeSeries) -> tuple[TimeSeries, Standardization]:
    """Scale to sample mean 0 and population std 1 (divisor n)."""
    if len(series) < 2:
        raise ValueError("need at least 2 points to standardize")
    values = series.values
    mean = float(np.mean(values))
    std = float(np.std(values))  # population convention
    if std <= 1e-12 * max(1.0, abs(mean)):  # constant up to float rounding
        raise ValueError("zero variance")
    st = Standardization(mean=mean, std=std)
    return series.with_values(st.apply(values)), st


def destandardize(series: TimeSeries, st: Standardization) -> TimeSeries:
    return series.with_values(st.invert(series.values))


def add_noise(series: TimeSeries, sigma: float, seed: int) -> TimeSeries:
    """Add i.i.d. Gaussian(0, sigma^2) noise from a seeded generator.

    The generator is PCG64 (numpy default, ziggurat normal sampling), so the
    same seed reproduces the same series bit-for-bit on one platform.  Used
    for training-input augmentation only; targets stay clean.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return series
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=len(series))
    return series.with_values(series.values + noise)

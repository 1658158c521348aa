"""Accuracy metrics, rolling-origin backtest, glycemic ranges, comparisons.

The backtest fixes a chronological train prefix, then steps a forecast
origin through the test region: at each origin the model (refit or merely
advanced, per policy) emits a k-step forecast, and every (actual, predicted)
pair across all origins and offsets lands in one pool.  MAE and MAPE are
computed on that pool, matching their single-sum definitions.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import time
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .core import ForecasterConfig, ModelId, TimeSeries
from .forecasters import FittedForecaster, config_digest, fit

__all__ = [
    "mae",
    "mape",
    "RefitPolicy",
    "BacktestProtocol",
    "ModelRow",
    "EvalReport",
    "PredictionRecord",
    "backtest",
    "backtest_detail",
    "with_persistence",
    "assemble_report",
    "compare",
    "DaySummary",
    "RangeStats",
    "range_stats",
    "dataset_digest",
    "REPORT_FORMAT_VERSION",
]

REPORT_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def mae(actual, predicted) -> float:
    """Mean absolute error."""
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape or a.size == 0:
        raise ValueError("actual and predicted must be equal-length and nonempty")
    return float(np.mean(np.abs(a - p)))


def mape(actual, predicted) -> float:
    """Mean absolute percentage error, as a ratio (0.03 means 3%)."""
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape or a.size == 0:
        raise ValueError("actual and predicted must be equal-length and nonempty")
    if np.any(a <= 0):
        raise ValueError("MAPE undefined at nonpositive actual")
    return float(np.mean(np.abs(a - p) / a))


# ---------------------------------------------------------------------------
# Backtest protocol
# ---------------------------------------------------------------------------

class RefitPolicy(enum.Enum):
    Once = "once"
    EveryOrigin = "every-origin"


@dataclass(frozen=True)
class BacktestProtocol:
    train_fraction: float = 0.8
    horizon: int = 6
    stride: int = 1
    refit: RefitPolicy = RefitPolicy.Once

    def __post_init__(self) -> None:
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must be in (0, 1)")
        if self.horizon < 1 or self.stride < 1:
            raise ValueError("horizon and stride must be >= 1")

    def to_dict(self) -> dict:
        return {
            "train_fraction": self.train_fraction,
            "horizon": self.horizon,
            "stride": self.stride,
            "refit": self.refit.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BacktestProtocol":
        return cls(
            train_fraction=float(d["train_fraction"]),
            horizon=int(d["horizon"]),
            stride=int(d["stride"]),
            refit=RefitPolicy(d["refit"]),
        )


@dataclass(frozen=True)
class ModelRow:
    """One model's pooled backtest outcome (or the error that stopped it)."""

    label: str
    model_id: ModelId
    config_digest: str
    mae: float | None
    mape: float | None
    n_predictions: int
    fit_seconds: float
    predict_seconds: float
    error: str | None = None

    def to_dict(self, include_timings: bool = False) -> dict:
        doc = {
            "label": self.label,
            "model_id": self.model_id.value,
            "config_digest": self.config_digest,
            "mae": self.mae,
            "mape": self.mape,
            "n_predictions": self.n_predictions,
            "error": self.error,
        }
        if include_timings:
            doc["fit_seconds"] = self.fit_seconds
            doc["predict_seconds"] = self.predict_seconds
        return doc

    @classmethod
    def from_dict(cls, d: dict) -> "ModelRow":
        return cls(
            label=d["label"],
            model_id=ModelId(d["model_id"]),
            config_digest=d["config_digest"],
            mae=d["mae"],
            mape=d["mape"],
            n_predictions=int(d["n_predictions"]),
            fit_seconds=float(d.get("fit_seconds", 0.0)),
            predict_seconds=float(d.get("predict_seconds", 0.0)),
            error=d.get("error"),
        )


def dataset_digest(series: TimeSeries) -> str:
    h = hashlib.sha256()
    h.update(series.subject_id.encode())
    h.update(np.int64(series.interval_s).tobytes())
    h.update(series.timestamps.tobytes())
    h.update(series.values.tobytes())
    return h.hexdigest()[:12]


def _origins(n: int, protocol: BacktestProtocol) -> list[int]:
    n_train = math.ceil(protocol.train_fraction * n)
    if n_train < 2:
        n_train = 2
    first = n_train - 1
    last = n - 1 - protocol.horizon
    return list(range(first, last + 1, protocol.stride))


@dataclass(frozen=True)
class PredictionRecord:
    """One pooled pair: target sample index, step within the forecast, values."""

    target_index: int
    step: int  # 1-based offset from the origin
    actual: float
    predicted: float


def backtest_detail(
    config: ForecasterConfig, series: TimeSeries, protocol: BacktestProtocol
) -> tuple[ModelRow, list[PredictionRecord]]:
    """Like :func:`backtest` but also returns every pooled pair (for plots)."""
    digest = config_digest(config)
    n = len(series)
    origins = _origins(n, protocol)
    if not origins:
        row = ModelRow(
            label=config.label, model_id=config.model_id, config_digest=digest,
            mae=None, mape=None, n_predictions=0,
            fit_seconds=0.0, predict_seconds=0.0,
            error="no valid origins for this protocol",
        )
        return row, []
    values = series.values
    k = protocol.horizon

    try:
        fit_seconds = 0.0
        predict_seconds = 0.0
        fitted: FittedForecaster | None = None
        if protocol.refit is RefitPolicy.Once:
            t0 = time.perf_counter()
            fitted = fit(series.slice(0, origins[0] + 1), config)
            fit_seconds += time.perf_counter() - t0

        records: list[PredictionRecord] = []
        for o in origins:
            history = series.slice(0, o + 1)
            if protocol.refit is RefitPolicy.EveryOrigin:
                t0 = time.perf_counter()
                fitted = fit(history, config)
                fit_seconds += time.perf_counter() - t0
            t0 = time.perf_counter()
            forecast = fitted.forecast_from(history, k)
            predict_seconds += time.perf_counter() - t0
            for step, predicted in enumerate(forecast.values, start=1):
                records.append(
                    PredictionRecord(
                        target_index=o + step,
                        step=step,
                        actual=float(values[o + step]),
                        predicted=float(predicted),
                    )
                )

        actual_pool = [r.actual for r in records]
        pred_pool = [r.predicted for r in records]
        row = ModelRow(
            label=config.label, model_id=config.model_id, config_digest=digest,
            mae=mae(actual_pool, pred_pool), mape=mape(actual_pool, pred_pool),
            n_predictions=len(records),
            fit_seconds=fit_seconds, predict_seconds=predict_seconds,
        )
        return row, records
    except (ValueError, FloatingPointError, KeyError) as exc:
        row = ModelRow(
            label=config.label, model_id=config.model_id, config_digest=digest,
            mae=None, mape=None, n_predictions=0,
            fit_seconds=0.0, predict_seconds=0.0,
            error=str(exc) or type(exc).__name__,
        )
        return row, []


def backtest(
    config: ForecasterConfig, series: TimeSeries, protocol: BacktestProtocol
) -> ModelRow:
    """Pool k-step forecasts from every origin and score them.

    Origin o means "the model has seen samples 0..o"; its targets are the
    next ``horizon`` values.  With ``RefitPolicy.Once`` the model is fitted
    on the train prefix and only its state advances per origin.
    """
    return backtest_detail(config, series, protocol)[0]


@dataclass(frozen=True)
class EvalReport:
    """Comparison of several models on one dataset under one protocol."""

    rows: tuple[ModelRow, ...]
    protocol: BacktestProtocol
    dataset_digest: str
    n_points: int
    subject_id: str
    version: int = REPORT_FORMAT_VERSION

    def to_json(self, include_timings: bool = False) -> str:
        doc = {
            "format": "glucast-report",
            "version": self.version,
            "protocol": self.protocol.to_dict(),
            "dataset": {
                "digest": self.dataset_digest,
                "n_points": self.n_points,
                "subject_id": self.subject_id,
            },
            "models": [r.to_dict(include_timings=include_timings) for r in self.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        doc = json.loads(text)
        if doc.get("format") != "glucast-report":
            raise ValueError("not a glucast report")
        return cls(
            rows=tuple(ModelRow.from_dict(r) for r in doc["models"]),
            protocol=BacktestProtocol.from_dict(doc["protocol"]),
            dataset_digest=doc["dataset"]["digest"],
            n_points=int(doc["dataset"]["n_points"]),
            subject_id=doc["dataset"]["subject_id"],
            version=int(doc["version"]),
        )

    def to_table(self, include_timings: bool = True) -> str:
        headers = ["model", "MAE (mg/dL)", "MAPE", "n", "config"]
        if include_timings:
            headers += ["fit s", "pred s"]
        headers += ["note"]
        rows = []
        for r in self.rows:
            cells = [
                r.label,
                "-" if r.mae is None else f"{r.mae:.3f}",
                "-" if r.mape is None else f"{r.mape:.4f}",
                str(r.n_predictions),
                r.config_digest,
            ]
            if include_timings:
                cells += [f"{r.fit_seconds:.2f}", f"{r.predict_seconds:.2f}"]
            cells += [r.error or ""]
            rows.append(cells)
        widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
                  for i, h in enumerate(headers)]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        lines = [fmt.format(*headers), fmt.format(*("-" * w for w in widths))]
        lines += [fmt.format(*r) for r in rows]
        return "\n".join(lines)


def with_persistence(configs: list[ForecasterConfig], horizon: int) -> list[ForecasterConfig]:
    """Append the persistence baseline unless one is already listed."""
    configs = list(configs)
    if not any(c.model_id is ModelId.Persistence for c in configs):
        configs.append(ForecasterConfig(model_id=ModelId.Persistence, horizon=horizon))
    return configs


def assemble_report(
    rows: list[ModelRow], series: TimeSeries, protocol: BacktestProtocol
) -> EvalReport:
    """Deterministic report: MAE ascending, ties by model enumeration order,
    failed rows (error noted) at the bottom."""
    ok = sorted(
        (r for r in rows if r.error is None),
        key=lambda r: (r.mae, r.model_id.rank, r.label),
    )
    failed = sorted((r for r in rows if r.error is not None), key=lambda r: r.label)
    return EvalReport(
        rows=tuple(ok + failed),
        protocol=protocol,
        dataset_digest=dataset_digest(series),
        n_points=len(series),
        subject_id=series.subject_id,
    )


def compare(
    configs: list[ForecasterConfig],
    series: TimeSeries,
    protocol: BacktestProtocol,
) -> EvalReport:
    """Backtest each config on identical folds; persistence rides along."""
    if not configs:
        raise ValueError("need at least one model config")
    configs = with_persistence(configs, protocol.horizon)
    rows = [backtest(c, series, protocol) for c in configs]
    return assemble_report(rows, series, protocol)


# ---------------------------------------------------------------------------
# Glycemic range statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DaySummary:
    date: str  # ISO calendar date (UTC)
    minimum: float
    median: float
    maximum: float


@dataclass(frozen=True)
class RangeStats:
    """Fractions of time below / in / above the target range, plus per-day spread."""

    tbr: float
    tir: float
    tar: float
    lo: float
    hi: float
    days: tuple[DaySummary, ...]

    def to_dict(self) -> dict:
        return {
            "tbr": self.tbr, "tir": self.tir, "tar": self.tar,
            "lo": self.lo, "hi": self.hi,
            "days": [
                {"date": d.date, "min": d.minimum, "median": d.median, "max": d.maximum}
                for d in self.days
            ],
        }


def range_stats(series: TimeSeries, lo: float = 70.0, hi: float = 180.0) -> RangeStats:
    """tbr/tir/tar partition against [lo, hi] plus per-calendar-day summaries."""
    if lo >= hi:
        raise ValueError("lo must be below hi")
    values = series.values
    n = len(values)
    tbr = float(np.sum(values < lo)) / n
    tar = float(np.sum(values > hi)) / n
    tir = float(np.sum((values >= lo) & (values <= hi))) / n

    days: list[DaySummary] = []
    ts = series.timestamps
    day_index = ts // 86400
    for day in np.unique(day_index):
        sel = values[day_index == day]
        date = datetime.fromtimestamp(int(day) * 86400, tz=timezone.utc).date().isoformat()
        days.append(
            DaySummary(
                date=date,
                minimum=float(np.min(sel)),
                median=float(np.median(sel)),
                maximum=float(np.max(sel)),
            )
        )
    return RangeStats(tbr=tbr, tir=tir, tar=tar, lo=lo, hi=hi, days=tuple(days))

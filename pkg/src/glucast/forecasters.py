"""One fit/forecast surface over all six models.

Every model follows the same contract: ``fit(series, config)`` returns a
:class:`FittedForecaster` whose ``forecast(k)`` extrapolates from the end of
the fitted series and whose ``forecast_from(history, k)`` re-conditions the
frozen state on a longer history (same series plus newer points) without
refitting -- that is how the rolling-origin backtest advances.  Model files
are JSON envelopes with a version and the model-specific payload.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from . import arima as _arima
from . import ingest as _ingest
from . import smoothing as _smoothing
from . import statespace as _statespace
from .core import Forecast, ForecasterConfig, ModelId, TimeSeries, persistence_forecast
from .neural import TimeGluConfig, TrainConfig, predict_timeglu, train
from .neural.model import params_from_json, params_to_json
from .neural.training import TrainingLog

__all__ = [
    "DesParams",
    "ArimaParams",
    "TimeGluSettings",
    "FittedForecaster",
    "fit",
    "default_config",
    "ablation_configs",
    "config_to_dict",
    "config_from_dict",
    "config_digest",
    "save_model",
    "load_model",
    "MODEL_FILE_VERSION",
]

MODEL_FILE_VERSION = 1


# ---------------------------------------------------------------------------
# Per-model parameter blocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DesParams:
    """Smoothing factors; None means grid-search them on the training data."""

    alpha: float | None = None
    beta: float | None = None

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, d: dict) -> "DesParams":
        return cls(alpha=d["alpha"], beta=d["beta"])


@dataclass(frozen=True)
class ArimaParams:
    """Fixed (p, d, q) order, or search bounds when ``order`` is None."""

    order: tuple[int, int, int] | None = None
    max_p: int = 5
    max_d: int = 2
    max_q: int = 5

    def to_dict(self) -> dict:
        return {
            "order": None if self.order is None else list(self.order),
            "max_p": self.max_p, "max_d": self.max_d, "max_q": self.max_q,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArimaParams":
        order = d["order"]
        return cls(
            order=None if order is None else tuple(int(v) for v in order),
            max_p=int(d["max_p"]), max_d=int(d["max_d"]), max_q=int(d["max_q"]),
        )


@dataclass(frozen=True)
class TimeGluSettings:
    arch: TimeGluConfig
    train: TrainConfig

    def to_dict(self) -> dict:
        return {"arch": self.arch.to_dict(), "train": self.train.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TimeGluSettings":
        return cls(
            arch=TimeGluConfig.from_dict(d["arch"]),
            train=TrainConfig.from_dict(d["train"]),
        )


# ---------------------------------------------------------------------------
# Fitted forecasters
# ---------------------------------------------------------------------------

class FittedForecaster:
    """Frozen model state plus the config that produced it."""

    def __init__(self, config: ForecasterConfig, state, fitted_series: TimeSeries | None):
        self.config = config
        self.state = state
        self._fitted_series = fitted_series

    @property
    def model_id(self) -> ModelId:
        return self.config.model_id

    def forecast(self, k: int | None = None) -> Forecast:
        if self._fitted_series is None:
            raise ValueError("loaded model has no attached history; use forecast_from")
        return self.forecast_from(self._fitted_series, k)

    def forecast_from(self, history: TimeSeries, k: int | None = None) -> Forecast:
        k = self.config.horizon if k is None else k
        mid = self.config.model_id
        if mid is ModelId.Persistence:
            return persistence_forecast(history, k)
        if mid is ModelId.DFS:
            alpha, beta = self.state
            return _smoothing.des_forecast(_smoothing.des_fit(history, alpha, beta), k)
        if mid is ModelId.AutoARIMA:
            return _arima.forecast_arima(self.state, history, k)
        if mid in (ModelId.BATS, ModelId.TBATS):
            advanced = self.state
            if history.end_timestamp != self.state.origin_timestamp:
                advanced = _statespace.bats_advance(self.state, history)
            return _statespace.forecast_bats(advanced, k)
        if mid is ModelId.TimeGlu:
            params, standardization, window, _ = self.state
            forecast = predict_timeglu(params, history, standardization, k, window)
            return forecast
        raise ValueError(f"unknown model id {mid}")

    # -- serialization --------------------------------------------------------

    def payload(self) -> dict:
        mid = self.config.model_id
        if mid is ModelId.Persistence:
            return {}
        if mid is ModelId.DFS:
            alpha, beta = self.state
            return {"alpha": alpha, "beta": beta}
        if mid is ModelId.AutoARIMA:
            return self.state.to_dict()
        if mid in (ModelId.BATS, ModelId.TBATS):
            return self.state.to_dict()
        if mid is ModelId.TimeGlu:
            params, standardization, window, log = self.state
            return {
                "weights": json.loads(params_to_json(params)),
                "standardization": {"mean": standardization.mean, "std": standardization.std},
                "window": window,
                "training_log": list(log.epoch_loss),
                "stopped_early": log.stopped_early,
            }
        raise ValueError(f"unknown model id {mid}")

    @property
    def training_log(self) -> TrainingLog | None:
        if self.config.model_id is ModelId.TimeGlu:
            return self.state[3]
        return None


def fit(series: TimeSeries, config: ForecasterConfig) -> FittedForecaster:
    """Dispatch to the model named by the config; see module docstring."""
    mid = config.model_id
    if mid is ModelId.Persistence:
        return FittedForecaster(config, None, series)
    if mid is ModelId.DFS:
        p: DesParams = config.params or DesParams()
        if p.alpha is None or p.beta is None:
            alpha, beta = _smoothing.des_grid_search(series)
        else:
            alpha, beta = p.alpha, p.beta
        return FittedForecaster(config, (alpha, beta), series)
    if mid is ModelId.AutoARIMA:
        p = config.params or ArimaParams()
        if p.order is not None:
            model = _arima.fit_arima(series, *p.order)
        else:
            model = _arima.auto_arima(series, p.max_p, p.max_d, p.max_q)
        return FittedForecaster(config, model, series)
    if mid in (ModelId.BATS, ModelId.TBATS):
        cfg: _statespace.BatsConfig = config.params
        if cfg is None:
            raise ValueError(f"{mid.value} requires a BatsConfig params block")
        if mid is ModelId.BATS:
            model = _statespace.bats_fit(series, cfg)
        else:
            model = _statespace.tbats_fit(series, cfg)
        return FittedForecaster(config, model, series)
    if mid is ModelId.TimeGlu:
        settings: TimeGluSettings = config.params or TimeGluSettings(
            TimeGluConfig(), TrainConfig(seed=config.seed)
        )
        train_cfg = settings.train
        if train_cfg.seed != config.seed:
            train_cfg = TrainConfig.from_dict({**train_cfg.to_dict(), "seed": config.seed})
        standardized, standardization = _ingest.standardize(series)
        params, log = train(standardized, settings.arch, train_cfg)
        state = (params, standardization, train_cfg.window, log)
        return FittedForecaster(config, state, series)
    raise ValueError(f"unknown model id {mid}")


# ---------------------------------------------------------------------------
# Defaults and ablations
# ---------------------------------------------------------------------------

def default_config(
    model_id: ModelId, horizon: int = 1, seed: int = 0, interval_s: int = 300
) -> ForecasterConfig:
    """Sensible out-of-the-box config; seasonal periods assume one day."""
    daily = max(2, 86400 // interval_s)
    if model_id is ModelId.DFS:
        params = DesParams()
    elif model_id is ModelId.AutoARIMA:
        params = ArimaParams()
    elif model_id is ModelId.BATS:
        params = _statespace.BatsConfig(
            use_box_cox=True, use_trend=True, seasonal_periods=(daily,)
        )
    elif model_id is ModelId.TBATS:
        params = _statespace.BatsConfig(
            use_box_cox=True, use_trend=True,
            seasonal_periods=(daily,), harmonics=(3,),
        )
    elif model_id is ModelId.TimeGlu:
        params = TimeGluSettings(TimeGluConfig(), TrainConfig(seed=seed))
    else:
        params = None
    return ForecasterConfig(model_id=model_id, horizon=horizon, seed=seed, params=params)


def ablation_configs(base: ForecasterConfig) -> list[ForecasterConfig]:
    """The four structure variants: full, LSTM encoder, LSTM decoder, no attention."""
    if base.model_id is not ModelId.TimeGlu:
        raise ValueError("ablations apply to the TimeGlu model")
    settings: TimeGluSettings = base.params
    variants = [
        ("TimeGlu", {}),
        ("TimeGlu[LSTM-encoder]", {"encoder_bidirectional": False}),
        ("TimeGlu[LSTM-decoder]", {"decoder_bidirectional": False}),
        ("TimeGlu[no-attention]", {"use_attention": False}),
    ]
    out = []
    for label, overrides in variants:
        arch = TimeGluConfig.from_dict({**settings.arch.to_dict(), **overrides})
        out.append(
            ForecasterConfig(
                model_id=ModelId.TimeGlu,
                horizon=base.horizon,
                seed=base.seed,
                params=TimeGluSettings(arch, settings.train),
                label=label,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Config / model-file serialization
# ---------------------------------------------------------------------------

def config_to_dict(config: ForecasterConfig) -> dict:
    params = config.params
    if params is None:
        params_doc = None
    elif isinstance(params, (DesParams, ArimaParams, TimeGluSettings, _statespace.BatsConfig)):
        params_doc = params.to_dict()
    else:
        raise TypeError(f"unserializable params block {type(params)}")
    return {
        "model_id": config.model_id.value,
        "horizon": config.horizon,
        "seed": config.seed,
        "label": config.label,
        "params": params_doc,
    }


def config_from_dict(d: dict) -> ForecasterConfig:
    mid = ModelId(d["model_id"])
    params_doc = d.get("params")
    if params_doc is None:
        params = None
    elif mid is ModelId.DFS:
        params = DesParams.from_dict(params_doc)
    elif mid is ModelId.AutoARIMA:
        params = ArimaParams.from_dict(params_doc)
    elif mid in (ModelId.BATS, ModelId.TBATS):
        params = _statespace.BatsConfig.from_dict(params_doc)
    elif mid is ModelId.TimeGlu:
        params = TimeGluSettings.from_dict(params_doc)
    else:
        params = None
    return ForecasterConfig(
        model_id=mid,
        horizon=int(d["horizon"]),
        seed=int(d["seed"]),
        params=params,
        label=d.get("label", ""),
    )


def config_digest(config: ForecasterConfig) -> str:
    doc = json.dumps(config_to_dict(config), sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()[:12]


def save_model(fitted: FittedForecaster, path) -> None:
    doc = {
        "format": "glucast-model",
        "version": MODEL_FILE_VERSION,
        "config": config_to_dict(fitted.config),
        "payload": fitted.payload(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path) -> FittedForecaster:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "glucast-model":
        raise ValueError("not a glucast model file")
    if doc.get("version") != MODEL_FILE_VERSION:
        raise ValueError(f"unsupported model file version {doc.get('version')}")
    config = config_from_dict(doc["config"])
    payload = doc["payload"]
    mid = config.model_id
    if mid is ModelId.Persistence:
        state = None
    elif mid is ModelId.DFS:
        state = (float(payload["alpha"]), float(payload["beta"]))
    elif mid is ModelId.AutoARIMA:
        state = _arima.ArimaModel.from_dict(payload)
    elif mid in (ModelId.BATS, ModelId.TBATS):
        state = _statespace.BatsModel.from_dict(payload)
    elif mid is ModelId.TimeGlu:
        params = params_from_json(json.dumps(payload["weights"]))
        standardization = _ingest.Standardization(
            mean=float(payload["standardization"]["mean"]),
            std=float(payload["standardization"]["std"]),
        )
        log = TrainingLog(
            epoch_loss=tuple(float(v) for v in payload["training_log"]),
            stopped_early=bool(payload["stopped_early"]),
        )
        state = (params, standardization, int(payload["window"]), log)
    else:
        raise ValueError(f"unknown model id {mid}")
    return FittedForecaster(config, state, None)

"""Short-horizon glucose forecasting from CGM time series.

Five forecasters behind one contract (double exponential smoothing,
auto-ARIMA, BATS, TBATS, and a Bi-LSTM/attention network trained with
reverse-mode gradients), plus ingestion, a rolling-origin evaluation
harness, and a comparison CLI.
"""

__version__ = "0.1.0"

from .core import (
    Forecast,
    ForecasterConfig,
    GlucoseSample,
    ModelId,
    TimeSeries,
    persistence_forecast,
)

__all__ = [
    "__version__",
    "GlucoseSample",
    "TimeSeries",
    "Forecast",
    "ForecasterConfig",
    "ModelId",
    "persistence_forecast",
]

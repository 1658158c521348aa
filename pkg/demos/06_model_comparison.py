"""The full comparison harness: every forecaster backtested on identical
rolling-origin folds, pooled MAE/MAPE per model, ranked report.

Run from the repo root:  python3 demos/06_model_comparison.py   (~2 minutes)
"""

from pathlib import Path

from glucast.core import ForecasterConfig, ModelId
from glucast.eval import BacktestProtocol, RefitPolicy, compare
from glucast.forecasters import ArimaParams, DesParams, TimeGluSettings
from glucast.ingest import parse_csv, regularize
from glucast.neural import TimeGluConfig, TrainConfig
from glucast.statespace import BatsConfig

HERE = Path(__file__).parent
OUT = HERE / "output"
OUT.mkdir(exist_ok=True)

raw = (HERE.parent / "data" / "synthetic_cgm.csv").read_bytes()
series = max(regularize(parse_csv(raw), 300), key=len).slice(0, 864)

# Half-hour horizon, forecast origins every hour through the test fifth.
protocol = BacktestProtocol(
    train_fraction=0.8, horizon=6, stride=12, refit=RefitPolicy.Once
)
day = 288
seed = 11
configs = [
    ForecasterConfig(ModelId.DFS, protocol.horizon, seed, DesParams()),
    ForecasterConfig(ModelId.AutoARIMA, protocol.horizon, seed,
                     ArimaParams(max_p=3, max_q=3)),
    ForecasterConfig(ModelId.BATS, protocol.horizon, seed,
                     BatsConfig(use_box_cox=True, seasonal_periods=(day,))),
    ForecasterConfig(ModelId.TBATS, protocol.horizon, seed,
                     BatsConfig(use_box_cox=True, seasonal_periods=(day,),
                                harmonics=(5,))),
    ForecasterConfig(
        ModelId.TimeGlu, protocol.horizon, seed,
        TimeGluSettings(
            TimeGluConfig(encoder_hidden=12, encoder_layers=2, attn_dim=12,
                          decoder_hidden=12),
            TrainConfig(window=24, epochs=40, batch_size=32, seed=seed,
                        patience=10),
        ),
    ),
]

print(f"backtesting {len(configs)} models (+ persistence) on {len(series)} points, "
      f"horizon {protocol.horizon} steps, origins every {protocol.stride} steps\n")
report = compare(configs, series, protocol)
print(report.to_table())

report_path = OUT / "comparison_report.json"
report_path.write_text(report.to_json())
print(f"\nwrote {report_path}")

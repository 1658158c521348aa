"""Train the Bi-LSTM/attention forecaster end to end on a slice of the
bundled data: noise-augmented windows, Adam on exact reverse-mode gradients,
then recursive multi-step prediction.

Run from the repo root:  python3 demos/05_neural_training.py   (~1 minute)
"""

from pathlib import Path

import numpy as np

from glucast.ingest import parse_csv, regularize, standardize
from glucast.neural import TimeGluConfig, TrainConfig, predict_timeglu, train
from glucast.svg import line_plot

HERE = Path(__file__).parent
OUT = HERE / "output"
OUT.mkdir(exist_ok=True)

raw = (HERE.parent / "data" / "synthetic_cgm.csv").read_bytes()
series = max(regularize(parse_csv(raw), 300), key=len).slice(0, 864)  # 3 days
train_series = series.slice(0, 750)
std_train, scaler = standardize(train_series)

arch = TimeGluConfig(encoder_hidden=12, encoder_layers=2, attn_dim=12, decoder_hidden=12)
cfg = TrainConfig(window=24, epochs=40, batch_size=32, seed=11,
                  noise_sigma=0.05, patience=10)
print(f"architecture: {arch.encoder_layers}-layer Bi-LSTM encoder (hidden "
      f"{arch.encoder_hidden}), additive attention, Bi-LSTM decoder; "
      f"window {cfg.window} steps")

params, log = train(std_train, arch, cfg)
print(f"trained {params.n_parameters} parameters for {len(log.epoch_loss)} epochs "
      f"(early stop: {log.stopped_early})")
print(f"epoch loss: {log.epoch_loss[0]:.4f} -> {log.epoch_loss[-1]:.4f}")

(OUT / "training_loss.csv").write_text(log.to_csv())
svg_path = OUT / "training_loss.svg"
svg_path.write_text(line_plot(
    [("mean epoch loss", list(range(len(log.epoch_loss))), list(log.epoch_loss))],
    title="Training loss by epoch", x_label="epoch", y_label="MSE (standardized)",
))
print(f"wrote {OUT / 'training_loss.csv'} and {svg_path}")

# Recursive two-hour forecast from the end of the training slice, against
# what actually happened next.
k = 24
forecast = predict_timeglu(params, train_series, scaler, k, cfg.window)
actual = series.values[750 : 750 + k]
mae = float(np.mean(np.abs(np.asarray(forecast.values) - actual)))
persistence = float(np.mean(np.abs(train_series.values[-1] - actual)))
print(f"\n2-hour recursive forecast: MAE {mae:.2f} mg/dL "
      f"(persistence baseline {persistence:.2f})")

hours = series.timestamps[750 : 750 + k] / 3600.0
svg_path = OUT / "neural_forecast.svg"
svg_path.write_text(line_plot(
    [
        ("actual", hours.tolist(), actual.tolist()),
        ("forecast", hours.tolist(), list(forecast.values)),
    ],
    title="Attention forecaster, two hours ahead",
    x_label="hours since epoch", y_label="mg/dL",
))
print(f"wrote {svg_path}")

"""Training loop (Adam + MSE on noise-augmented windows) and inference.

Windows slide over the standardized series: the input is the ``window``
values before t plus seeded Gaussian noise, the target is the clean value at
t.  Noise, shuffling and weight init all derive from the config seed through
separate streams, so a (seed, data, config) triple pins the trained weights
exactly.  Multi-step prediction feeds the model its own outputs; inference
adds no noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Forecast, ModelId, TimeSeries
from ..ingest import Standardization
from .model import TimeGluConfig, TimeGluParams, init_params, timeglu_forward
from .tensor import Tensor

__all__ = [
    "TrainConfig",
    "TrainingLog",
    "mse_loss",
    "make_windows",
    "Adam",
    "train",
    "evaluate_mean_loss",
    "predict_timeglu",
    "gradient_check",
]


@dataclass(frozen=True)
class TrainConfig:
    window: int = 24
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    noise_sigma: float = 0.05  # standardized units
    seed: int = 0
    patience: int = 10

    def __post_init__(self) -> None:
        if self.window < 2:
            raise ValueError("window must be >= 2")
        for name in ("learning_rate", "beta1", "beta2", "eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    def to_dict(self) -> dict:
        return {
            "window": self.window, "epochs": self.epochs,
            "batch_size": self.batch_size, "learning_rate": self.learning_rate,
            "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
            "noise_sigma": self.noise_sigma, "seed": self.seed,
            "patience": self.patience,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass(frozen=True)
class TrainingLog:
    """Per-epoch mean training loss, in epoch order."""

    epoch_loss: tuple[float, ...]
    stopped_early: bool

    def best_so_far(self) -> list[float]:
        out, best = [], math.inf
        for v in self.epoch_loss:
            best = min(best, v)
            out.append(best)
        return out

    def to_csv(self) -> str:
        lines = ["epoch,mean_loss"]
        lines += [f"{i},{v!r}" for i, v in enumerate(self.epoch_loss)]
        return "\n".join(lines) + "\n"


def mse_loss(pred: Tensor, target: Tensor | np.ndarray) -> Tensor:
    """Mean of squared elementwise differences (batch-mean convention)."""
    target = target if isinstance(target, Tensor) else Tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return (diff * diff).mean()


def make_windows(values: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Sliding (inputs, next-value targets): X (N, window), y (N,)."""
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n <= window + 1:
        raise ValueError(f"need more than window+1={window + 1} points, got {n}")
    count = n - window
    x = np.stack([values[i : i + window] for i in range(count)])
    y = values[window:]
    return x, y


class Adam:
    """First/second-moment adaptive updates over a fixed tensor order."""

    def __init__(self, tensors: list[Tensor], lr: float, beta1: float, beta2: float, eps: float):
        self.tensors = tensors
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in tensors]
        self.v = [np.zeros_like(p.data) for p in tensors]

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for i, p in enumerate(self.tensors):
            g = p.grad
            if g is None:
                continue
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            m_hat = self.m[i] / bias1
            v_hat = self.v[i] / bias2
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def evaluate_mean_loss(params: TimeGluParams, x: np.ndarray, y: np.ndarray) -> float:
    """Mean per-window squared error with frozen parameters (no updates).

    Computed as the mean over windows, so it is invariant to any reordering
    of the window set.
    """
    preds = timeglu_forward(x[:, :, None], params).data[:, 0]
    return float(np.mean((preds - y) ** 2))


def train(
    series: TimeSeries,
    arch: TimeGluConfig,
    cfg: TrainConfig,
) -> tuple[TimeGluParams, TrainingLog]:
    """Train on a standardized series; returns weights plus the loss log.

    Noise lands on the inputs only (targets stay clean) and is attached to a
    window, not to a batch position, so the epoch-mean loss does not depend
    on batch order.  Stops early after ``patience`` epochs without a 1e-6
    improvement over the best epoch loss.
    """
    x, y = make_windows(series.values, cfg.window)
    n = len(x)

    init_rng = np.random.default_rng([cfg.seed, 0])
    noise_rng = np.random.default_rng([cfg.seed, 1])
    shuffle_rng = np.random.default_rng([cfg.seed, 2])
    params = init_params(arch, seed=int(init_rng.integers(2**63)))
    tensors = params.tensors()
    adam = Adam(tensors, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)

    log: list[float] = []
    best = math.inf
    stale = 0
    stopped_early = False
    for _ in range(cfg.epochs):
        if cfg.noise_sigma > 0:
            noise = noise_rng.normal(0.0, cfg.noise_sigma, size=x.shape)
        else:
            noise = np.zeros_like(x)
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb = (x[idx] + noise[idx])[:, :, None]
            yb = y[idx][:, None]
            params.zero_grad()
            pred = timeglu_forward(xb, params)
            loss = mse_loss(pred, yb)
            loss.backward()
            adam.step()
            total += float(loss.data) * len(idx)
        epoch_loss = total / n
        log.append(epoch_loss)
        if epoch_loss < best - 1e-6:
            best = epoch_loss
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                stopped_early = True
                break
    return params, TrainingLog(epoch_loss=tuple(log), stopped_early=stopped_early)


def predict_timeglu(
    params: TimeGluParams,
    history: TimeSeries,
    standardization: Standardization,
    k: int,
    window: int,
) -> Forecast:
    """k-step forecast in mg/dL; steps past the first feed predictions back in."""
    if k < 1:
        raise ValueError("horizon must be >= 1")
    if len(history) < window:
        raise ValueError(f"history of {len(history)} points is shorter than window {window}")
    buf = list(standardization.apply(history.values)[-window:])
    preds = []
    for _ in range(k):
        x = np.asarray(buf[-window:], dtype=np.float64)[None, :, None]
        value = float(timeglu_forward(x, params).data[0, 0])
        preds.append(value)
        buf.append(value)
    out = standardization.invert(np.asarray(preds))
    return Forecast(
        origin_timestamp=history.end_timestamp,
        horizon=k,
        values=tuple(float(v) for v in out),
        model_id=ModelId.TimeGlu,
    )


# ---------------------------------------------------------------------------
# Finite-difference gate
# ---------------------------------------------------------------------------

def gradient_check(
    seed: int = 0,
    step: float = 1e-5,
    arch: TimeGluConfig | None = None,
    steps: int = 5,
    batch: int = 2,
) -> dict[str, float]:
    """Max relative error, per parameter group, of analytic vs central
    finite-difference gradients on a tiny random model."""
    if arch is None:
        arch = TimeGluConfig(encoder_hidden=3, encoder_layers=2, attn_dim=2, decoder_hidden=3)
    rng = np.random.default_rng(seed)
    params = init_params(arch, seed=seed)
    x = rng.normal(0.0, 1.0, size=(batch, steps, 1))
    y = rng.normal(0.0, 1.0, size=(batch, 1))

    def loss_value() -> float:
        return float(mse_loss(timeglu_forward(x, params), y).data)

    params.zero_grad()
    loss = mse_loss(timeglu_forward(x, params), y)
    loss.backward()

    errors: dict[str, float] = {}
    for name, tensor in params.named_tensors():
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        worst = 0.0
        flat = tensor.data.ravel()
        a_flat = analytic.ravel()
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            up = loss_value()
            flat[j] = orig - step
            down = loss_value()
            flat[j] = orig
            numeric = (up - down) / (2.0 * step)
            denom = max(abs(a_flat[j]), abs(numeric), 1e-6)
            worst = max(worst, abs(a_flat[j] - numeric) / denom)
        errors[name] = worst
    return errors

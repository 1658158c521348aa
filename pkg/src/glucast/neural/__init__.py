"""Neural forecaster: Bi-LSTM encoder, additive attention, reverse-mode training."""

from .tensor import Tensor
from .layers import AttentionWeights, LstmWeights, additive_attention, bilstm, lstm_cell
from .model import TimeGluConfig, TimeGluParams, init_params, timeglu_forward
from .training import (
    TrainConfig,
    TrainingLog,
    gradient_check,
    mse_loss,
    predict_timeglu,
    train,
)

__all__ = [
    "Tensor",
    "LstmWeights",
    "AttentionWeights",
    "lstm_cell",
    "bilstm",
    "additive_attention",
    "TimeGluConfig",
    "TimeGluParams",
    "init_params",
    "timeglu_forward",
    "TrainConfig",
    "TrainingLog",
    "mse_loss",
    "train",
    "predict_timeglu",
    "gradient_check",
]

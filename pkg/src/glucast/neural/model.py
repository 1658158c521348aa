"""The full forecaster network: stacked Bi-LSTM encoder, additive
self-attention fused by concatenation, lightweight Bi-LSTM + dense decoder.

The pipeline maps a standardized input window (B, T, 1) to one scalar
prediction per window: encoder output h (B, T, d) is fused with its
attention as x' = [h || attn(h)], a small decoder LSTM consumes x', and a
dense head reads the decoder's final timestep.  Ablation switches cover
unidirectional encoder/decoder and disabling attention; shapes adjust so the
pass stays consistent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .layers import GATES, AttentionWeights, LstmWeights, additive_attention, bilstm, lstm_sequence
from .tensor import Tensor, concat

__all__ = [
    "TimeGluConfig",
    "TimeGluParams",
    "init_params",
    "timeglu_forward",
    "params_to_json",
    "params_from_json",
]

WEIGHTS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TimeGluConfig:
    """Architecture switches and sizes (training settings live in TrainConfig)."""

    encoder_hidden: int = 32
    encoder_layers: int = 2
    attn_dim: int = 32
    decoder_hidden: int = 32
    encoder_bidirectional: bool = True
    decoder_bidirectional: bool = True
    use_attention: bool = True

    def __post_init__(self) -> None:
        if self.encoder_layers < 1:
            raise ValueError("need at least one encoder layer")
        for v in (self.encoder_hidden, self.attn_dim, self.decoder_hidden):
            if v < 1:
                raise ValueError("sizes must be positive")

    @property
    def d_model(self) -> int:
        """Encoder output width per timestep."""
        return self.encoder_hidden * (2 if self.encoder_bidirectional else 1)

    @property
    def decoder_input(self) -> int:
        return self.d_model * (2 if self.use_attention else 1)

    @property
    def decoder_output(self) -> int:
        return self.decoder_hidden * (2 if self.decoder_bidirectional else 1)

    def to_dict(self) -> dict:
        return {
            "encoder_hidden": self.encoder_hidden,
            "encoder_layers": self.encoder_layers,
            "attn_dim": self.attn_dim,
            "decoder_hidden": self.decoder_hidden,
            "encoder_bidirectional": self.encoder_bidirectional,
            "decoder_bidirectional": self.decoder_bidirectional,
            "use_attention": self.use_attention,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TimeGluConfig":
        return cls(**d)


@dataclass
class TimeGluParams:
    """Every trainable tensor in the network, grouped by layer."""

    config: TimeGluConfig
    encoder: list[tuple[LstmWeights, LstmWeights | None]]
    attention: AttentionWeights | None
    decoder: tuple[LstmWeights, LstmWeights | None]
    head_w: Tensor  # (1, decoder_output)
    head_b: Tensor  # (1,)

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        """Stable (name, tensor) enumeration: optimizer + serialization order."""
        out: list[tuple[str, Tensor]] = []
        for i, (fwd, bwd) in enumerate(self.encoder):
            out.extend(fwd.named_tensors(f"encoder.{i}.fwd"))
            if bwd is not None:
                out.extend(bwd.named_tensors(f"encoder.{i}.bwd"))
        if self.attention is not None:
            out.extend(self.attention.named_tensors("attention"))
        fwd, bwd = self.decoder
        out.extend(fwd.named_tensors("decoder.fwd"))
        if bwd is not None:
            out.extend(bwd.named_tensors("decoder.bwd"))
        out.append(("head.w", self.head_w))
        out.append(("head.b", self.head_b))
        return out

    def tensors(self) -> list[Tensor]:
        return [t for _, t in self.named_tensors()]

    def zero_grad(self) -> None:
        for t in self.tensors():
            t.zero_grad()

    @property
    def n_parameters(self) -> int:
        return sum(t.data.size for t in self.tensors())


def _init_lstm(rng: np.random.Generator, hidden: int, inp: int) -> LstmWeights:
    # Uniform in +/- 1/sqrt(fan_in): fan_in is the multiplied-against width
    # (input for W, hidden for U and b).
    w_bound = 1.0 / np.sqrt(inp)
    u_bound = 1.0 / np.sqrt(hidden)
    W = {g: Tensor(rng.uniform(-w_bound, w_bound, (hidden, inp)), requires_grad=True) for g in GATES}
    U = {g: Tensor(rng.uniform(-u_bound, u_bound, (hidden, hidden)), requires_grad=True) for g in GATES}
    b = {g: Tensor(rng.uniform(-u_bound, u_bound, hidden), requires_grad=True) for g in GATES}
    return LstmWeights(W=W, U=U, b=b, hidden_size=hidden, input_size=inp)


def init_params(config: TimeGluConfig, seed: int) -> TimeGluParams:
    """Seeded deterministic initialization (PCG64; fixed draw order)."""
    rng = np.random.default_rng(seed)
    encoder = []
    inp = 1
    for _ in range(config.encoder_layers):
        fwd = _init_lstm(rng, config.encoder_hidden, inp)
        bwd = _init_lstm(rng, config.encoder_hidden, inp) if config.encoder_bidirectional else None
        encoder.append((fwd, bwd))
        inp = config.d_model
    attention = None
    if config.use_attention:
        d = config.d_model
        a = config.attn_dim
        qb = 1.0 / np.sqrt(d)
        vb = 1.0 / np.sqrt(a)
        attention = AttentionWeights(
            W_q=Tensor(rng.uniform(-qb, qb, (a, d)), requires_grad=True),
            W_k=Tensor(rng.uniform(-qb, qb, (a, d)), requires_grad=True),
            v=Tensor(rng.uniform(-vb, vb, a), requires_grad=True),
        )
    dec_fwd = _init_lstm(rng, config.decoder_hidden, config.decoder_input)
    dec_bwd = (
        _init_lstm(rng, config.decoder_hidden, config.decoder_input)
        if config.decoder_bidirectional
        else None
    )
    hb = 1.0 / np.sqrt(config.decoder_output)
    head_w = Tensor(rng.uniform(-hb, hb, (1, config.decoder_output)), requires_grad=True)
    head_b = Tensor(rng.uniform(-hb, hb, 1), requires_grad=True)
    return TimeGluParams(
        config=config,
        encoder=encoder,
        attention=attention,
        decoder=(dec_fwd, dec_bwd),
        head_w=head_w,
        head_b=head_b,
    )


def timeglu_forward(windows: Tensor | np.ndarray, params: TimeGluParams) -> Tensor:
    """Batched forward pass: (B, T, 1) windows -> (B, 1) predictions."""
    x = windows if isinstance(windows, Tensor) else Tensor(windows)
    if x.ndim == 2:  # (T, 1) single window
        x = x.reshape(1, *x.shape)
    if x.ndim != 3 or x.shape[-1] != 1:
        raise ValueError(f"expected (B, T, 1) windows, got {x.shape}")

    h = x
    for fwd, bwd in params.encoder:
        h = bilstm(h, fwd, bwd) if bwd is not None else lstm_sequence(h, fwd)

    if params.attention is not None:
        fused = concat([h, additive_attention(h, params.attention)], axis=-1)
    else:
        fused = h

    dec_fwd, dec_bwd = params.decoder
    dec = bilstm(fused, dec_fwd, dec_bwd) if dec_bwd is not None else lstm_sequence(fused, dec_fwd)
    last = dec[:, -1, :]  # (B, decoder_output)
    return last @ params.head_w.swap_last_axes() + params.head_b


# ---------------------------------------------------------------------------
# Serialization: versioned JSON with shape metadata (deterministic bytes)
# ---------------------------------------------------------------------------

def params_to_json(params: TimeGluParams) -> str:
    arrays = {
        name: {"shape": list(t.shape), "data": t.data.ravel().tolist()}
        for name, t in params.named_tensors()
    }
    doc = {
        "format": "glucast-timeglu-weights",
        "version": WEIGHTS_FORMAT_VERSION,
        "config": params.config.to_dict(),
        "arrays": arrays,
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def params_from_json(text: str) -> TimeGluParams:
    doc = json.loads(text)
    if doc.get("format") != "glucast-timeglu-weights":
        raise ValueError("not a weights file")
    if doc.get("version") != WEIGHTS_FORMAT_VERSION:
        raise ValueError(f"unsupported weights version {doc.get('version')}")
    config = TimeGluConfig.from_dict(doc["config"])
    params = init_params(config, seed=0)
    arrays = doc["arrays"]
    for name, t in params.named_tensors():
        spec = arrays[name]
        t.data = np.asarray(spec["data"], dtype=np.float64).reshape(spec["shape"])
    return params

"""LSTM cell, bidirectional sequence pass, and additive attention.

Everything works on batched tensors: sequences are (batch, time, features).
The LSTM uses the standard four-gate form with logistic gate activations and
a tanh candidate; bidirectional output is the per-timestep concatenation
[forward || backward].  Attention is additive self-attention: scores
v . tanh(W_q h_i + W_k h_j), softmax over j, output rows are convex
combinations of the input rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, concat, softmax, stack

__all__ = [
    "GATES",
    "LstmWeights",
    "AttentionWeights",
    "lstm_cell",
    "lstm_sequence",
    "bilstm",
    "additive_attention",
]

GATES = ("input", "forget", "cell", "output")


@dataclass
class LstmWeights:
    """Per-gate parameter triplets: W (hidden x input), U (hidden x hidden), b (hidden)."""

    W: dict[str, Tensor]
    U: dict[str, Tensor]
    b: dict[str, Tensor]
    hidden_size: int
    input_size: int

    def __post_init__(self) -> None:
        for g in GATES:
            if self.W[g].shape != (self.hidden_size, self.input_size):
                raise ValueError(
                    f"W[{g}] has shape {self.W[g].shape}, expected "
                    f"({self.hidden_size}, {self.input_size})"
                )
            if self.U[g].shape != (self.hidden_size, self.hidden_size):
                raise ValueError(f"U[{g}] has shape {self.U[g].shape}")
            if self.b[g].shape != (self.hidden_size,):
                raise ValueError(f"b[{g}] has shape {self.b[g].shape}")

    def named_tensors(self, prefix: str):
        for g in GATES:
            yield f"{prefix}.W_{g}", self.W[g]
            yield f"{prefix}.U_{g}", self.U[g]
            yield f"{prefix}.b_{g}", self.b[g]


@dataclass
class AttentionWeights:
    """Additive attention: query/key projections plus the scoring vector."""

    W_q: Tensor  # (attn_dim, d_model)
    W_k: Tensor  # (attn_dim, d_model)
    v: Tensor    # (attn_dim,)

    def __post_init__(self) -> None:
        if self.W_q.shape != self.W_k.shape:
            raise ValueError("W_q and W_k must share shape")
        if self.v.shape != (self.W_q.shape[0],):
            raise ValueError("v length must equal attn_dim")

    @property
    def attn_dim(self) -> int:
        return self.W_q.shape[0]

    @property
    def d_model(self) -> int:
        return self.W_q.shape[1]

    def named_tensors(self, prefix: str):
        yield f"{prefix}.W_q", self.W_q
        yield f"{prefix}.W_k", self.W_k
        yield f"{prefix}.v", self.v


def lstm_cell(
    x: Tensor, h_prev: Tensor, c_prev: Tensor, w: LstmWeights
) -> tuple[Tensor, Tensor]:
    """One LSTM step on a batch: x (B, input), h/c (B, hidden)."""
    if x.shape[-1] != w.input_size:
        raise ValueError(f"input width {x.shape[-1]} != weights input_size {w.input_size}")
    if h_prev.shape[-1] != w.hidden_size or c_prev.shape[-1] != w.hidden_size:
        raise ValueError("state width does not match weights hidden_size")

    def gate(name: str) -> Tensor:
        return x @ w.W[name].swap_last_axes() + h_prev @ w.U[name].swap_last_axes() + w.b[name]

    i = gate("input").sigmoid()
    f = gate("forget").sigmoid()
    g = gate("cell").tanh()
    o = gate("output").sigmoid()
    c = f * c_prev + i * g
    h = o * c.tanh()
    return h, c


def lstm_sequence(xs: Tensor, w: LstmWeights, reverse: bool = False) -> Tensor:
    """Run the cell over (B, T, input) from a zero state; returns (B, T, hidden).

    Output row t always describes timestep t; with ``reverse`` the recursion
    just runs right-to-left first.
    """
    batch, steps, _ = xs.shape
    h = Tensor(np.zeros((batch, w.hidden_size)))
    c = Tensor(np.zeros((batch, w.hidden_size)))
    outputs: list[Tensor | None] = [None] * steps
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    for t in order:
        h, c = lstm_cell(xs[:, t, :], h, c, w)
        outputs[t] = h
    return stack(outputs, axis=1)


def bilstm(xs: Tensor, wf: LstmWeights, wb: LstmWeights) -> Tensor:
    """Forward and backward passes concatenated per timestep: (B, T, 2*hidden)."""
    fwd = lstm_sequence(xs, wf, reverse=False)
    bwd = lstm_sequence(xs, wb, reverse=True)
    return concat([fwd, bwd], axis=-1)


def additive_attention(h: Tensor, w: AttentionWeights) -> Tensor:
    """Self-attention over the timesteps of h (B, T, d) -> (B, T, d)."""
    if h.shape[-1] != w.d_model:
        raise ValueError(f"feature width {h.shape[-1]} != attention d_model {w.d_model}")
    batch, steps, d = h.shape
    a = w.attn_dim
    q = h @ w.W_q.swap_last_axes()  # (B, T, a)
    k = h @ w.W_k.swap_last_axes()
    combined = (q.reshape(batch, steps, 1, a) + k.reshape(batch, 1, steps, a)).tanh()
    scores = (combined @ w.v.reshape(a, 1)).reshape(batch, steps, steps)
    weights = softmax(scores, axis=-1)
    return weights @ h

"""Shared building blocks: seeded initialization, masked attention
pooling, packed bidirectional GRUs, and the layer-normalized LSTM cell."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

LEAKY_SLOPE = 0.01
LAYER_NORM_EPS = 1e-8


def leaky(x: torch.Tensor) -> torch.Tensor:
    return F.leaky_relu(x, LEAKY_SLOPE)


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> torch.Tensor:
    limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
    values = rng.uniform(-limit, limit, size=shape).astype(np.float32)
    return torch.from_numpy(values)


def init_linear(rng: np.random.Generator, linear: nn.Linear) -> None:
    out_dim, in_dim = linear.weight.shape
    with torch.no_grad():
        linear.weight.copy_(glorot_uniform(rng, (out_dim, in_dim), in_dim, out_dim))
        if linear.bias is not None:
            linear.bias.zero_()


def init_conv(rng: np.random.Generator, conv: nn.Conv2d) -> None:
    out_ch, in_ch, kh, kw = conv.weight.shape
    with torch.no_grad():
        conv.weight.copy_(
            glorot_uniform(rng, (out_ch, in_ch, kh, kw), in_ch * kh * kw, out_ch * kh * kw)
        )
        if conv.bias is not None:
            conv.bias.zero_()


def init_gru(rng: np.random.Generator, gru: nn.GRU) -> None:
    """Per-gate Glorot blocks; biases zero."""
    hidden = gru.hidden_size
    with torch.no_grad():
        for name, param in gru.named_parameters():
            if name.startswith("bias"):
                param.zero_()
                continue
            in_dim = param.shape[1]
            for gate in range(3):
                block = glorot_uniform(rng, (hidden, in_dim), in_dim, hidden)
                param[gate * hidden : (gate + 1) * hidden].copy_(block)


class GatedBlockLinear(nn.Linear):
    """Linear layer whose output stacks per-gate blocks of equal width."""

    def __init__(self, in_dim: int, hidden: int, n_gates: int):
        super().__init__(in_dim, n_gates * hidden)
        self.hidden = hidden
        self.n_gates = n_gates

    def init_seeded(self, rng: np.random.Generator) -> None:
        in_dim = self.weight.shape[1]
        with torch.no_grad():
            for gate in range(self.n_gates):
                block = glorot_uniform(rng, (self.hidden, in_dim), in_dim, self.hidden)
                self.weight[gate * self.hidden : (gate + 1) * self.hidden].copy_(block)
            self.bias.zero_()


def run_bidirectional_gru(
    gru: nn.GRU, inputs: torch.Tensor, lengths: torch.Tensor
) -> torch.Tensor:
    """Run a batch-first bidirectional GRU over variable-length rows.

    Rows with length 0 are packed with length 1 (their output is garbage
    and must be masked by the caller); positions beyond a row's length
    come back zero-filled.
    """
    total = inputs.shape[1]
    clamped = lengths.clamp(min=1).to(torch.int64).cpu()
    packed = nn.utils.rnn.pack_padded_sequence(
        inputs, clamped, batch_first=True, enforce_sorted=False
    )
    out, _ = gru(packed)
    padded, _ = nn.utils.rnn.pad_packed_sequence(
        out, batch_first=True, total_length=total
    )
    return padded


class ImageConditionedAttention(nn.Module):
    """Additive attention whose query is an affine map of the image feature.

    Masked positions get weight exactly 0; a row with no real position
    pools to the zero vector.
    """

    def __init__(self, state_dim: int, condition_dim: int, attention_dim: int):
        super().__init__()
        self.state_proj = nn.Linear(state_dim, attention_dim)
        self.condition_proj = nn.Linear(condition_dim, attention_dim)

    def init_seeded(self, rng: np.random.Generator) -> None:
        init_linear(rng, self.state_proj)
        init_linear(rng, self.condition_proj)

    def forward(
        self, states: torch.Tensor, mask: torch.Tensor, condition: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """states (N, T, D), mask (N, T) bool, condition (N, C) ->
        pooled (N, D), weights (N, T)."""
        keys = torch.tanh(self.state_proj(states))
        query = self.condition_proj(condition).unsqueeze(1)
        scores = (keys * query).sum(-1)
        masked_scores = scores.masked_fill(~mask, float("-inf"))
        row_max = masked_scores.max(dim=-1, keepdim=True).values
        row_max = torch.where(torch.isfinite(row_max), row_max, torch.zeros_like(row_max))
        exp = torch.where(mask, torch.exp(scores - row_max), torch.zeros_like(scores))
        denom = exp.sum(dim=-1, keepdim=True)
        denom = denom + (denom == 0).to(denom.dtype)
        weights = exp / denom
        pooled = (weights.unsqueeze(-1) * states).sum(dim=1)
        return pooled, weights


class LayerNormLSTMCell(nn.Module):
    """LSTM cell with a layer-normalized output tap.

    Recurrence uses the raw hidden state; the tap normalizes it to mean 0
    and variance 1 per step, then applies a learned gain and bias.
    """

    def __init__(self, input_dim: int, hidden_dim: int):
        super().__init__()
        self.hidden_dim = hidden_dim
        self.gates = GatedBlockLinear(input_dim + hidden_dim, hidden_dim, n_gates=4)
        self.norm_gain = nn.Parameter(torch.ones(hidden_dim))
        self.norm_bias = nn.Parameter(torch.zeros(hidden_dim))

    def init_seeded(self, rng: np.random.Generator) -> None:
        self.gates.init_seeded(rng)
        with torch.no_grad():
            self.norm_gain.fill_(1.0)
            self.norm_bias.zero_()

    def forward(
        self, x: torch.Tensor, h: torch.Tensor, c: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Returns (h_next, c_next, normalized_tap)."""
        gate_input = torch.cat([x, h], dim=-1)
        in_gate, forget_gate, candidate, out_gate = self.gates(gate_input).chunk(4, dim=-1)
        c_next = torch.sigmoid(forget_gate) * c + torch.sigmoid(in_gate) * torch.tanh(candidate)
        h_next = torch.sigmoid(out_gate) * torch.tanh(c_next)
        mean = h_next.mean(dim=-1, keepdim=True)
        var = h_next.var(dim=-1, unbiased=False, keepdim=True)
        normalized = (h_next - mean) / torch.sqrt(var + LAYER_NORM_EPS)
        return h_next, c_next, normalized * self.norm_gain + self.norm_bias

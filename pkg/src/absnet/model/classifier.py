"""Abstractness classifier head and its loss."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ..corpus.types import AbsLabel
from ..errors import WidthMismatch
from .layers import init_linear, leaky


class AbstractnessClassifier(nn.Module):
    """Fully-connected head (two hidden layers, then 3 class logits)."""

    def __init__(self, embedding_dim: int, hidden: tuple[int, ...] = (512, 512)):
        super().__init__()
        self.embedding_dim = embedding_dim
        dims = [embedding_dim, *hidden]
        self.hidden_layers = nn.ModuleList(
            nn.Linear(dims[i], dims[i + 1]) for i in range(len(hidden))
        )
        self.output = nn.Linear(dims[-1], len(AbsLabel))

    def init_seeded(self, rng: np.random.Generator) -> None:
        for layer in self.hidden_layers:
            init_linear(rng, layer)
        init_linear(rng, self.output)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        """z (B, embedding_dim) -> logits (B, 3)."""
        if z.shape[-1] != self.embedding_dim:
            raise WidthMismatch(
                f"embedding width {z.shape[-1]} != configured {self.embedding_dim}"
            )
        x = z
        for layer in self.hidden_layers:
            x = leaky(layer(x))
        return self.output(x)


def build_classifier(
    embedding_dim: int, rng: np.random.Generator, hidden: tuple[int, ...] = (512, 512)
) -> AbstractnessClassifier:
    head = AbstractnessClassifier(embedding_dim, hidden=hidden)
    head.init_seeded(rng)
    return head


@dataclass(frozen=True)
class ClassProbabilities:
    """Softmax class probabilities in canonical label order, with the
    raw logits kept for numerically stable loss evaluation."""

    probabilities: tuple[float, float, float]
    logits: tuple[float, float, float]

    def __post_init__(self):
        total = sum(self.probabilities)
        if not math.isclose(total, 1.0, abs_tol=1e-6):
            raise ValueError(f"probabilities sum to {total}, expected 1")


def _log_softmax(logits: tuple[float, ...]) -> list[float]:
    top = max(logits)
    log_norm = top + math.log(sum(math.exp(l - top) for l in logits))
    return [l - log_norm for l in logits]


def classify(z: torch.Tensor, head: AbstractnessClassifier) -> ClassProbabilities:
    """Class probabilities for one article embedding."""
    with torch.no_grad():
        logits = head(z.reshape(1, -1))[0].double()
    logit_values = tuple(float(v) for v in logits)
    log_probs = _log_softmax(logit_values)
    return ClassProbabilities(
        probabilities=tuple(math.exp(lp) for lp in log_probs),
        logits=logit_values,
    )


def classification_loss(probs: ClassProbabilities, label: AbsLabel) -> float:
    """Cross-entropy -log p(true class), computed from the stored logits."""
    return -_log_softmax(probs.logits)[label.index]


def classification_loss_from_logits(
    logits: torch.Tensor, labels: torch.Tensor
) -> torch.Tensor:
    """Batched stable cross-entropy: logsumexp(logits) - logit[true]."""
    log_norm = torch.logsumexp(logits, dim=-1)
    true_logit = logits.gather(-1, labels.unsqueeze(-1)).squeeze(-1)
    return (log_norm - true_logit).mean()


def predict(z: torch.Tensor, head: AbstractnessClassifier) -> AbsLabel:
    """Argmax class; ties break toward the first class in canonical order."""
    probs = classify(z, head)
    return AbsLabel.from_index(int(np.argmax(probs.probabilities)))

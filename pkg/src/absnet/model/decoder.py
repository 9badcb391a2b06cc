"""Decoders and reconstruction losses.

The image decoder grows a seed map through alternating nearest-neighbor
upsampling and 3x3 convolutions; the text decoder is a hierarchical
unidirectional LSTM with layer-normalized output taps, generating word
vectors compared against fixed embedding rows by cosine."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..config import DecoderConfig
from ..errors import EmptyMask, ShapeMismatch, WidthMismatch
from ..vocab import EmbeddingTable, Vocabulary
from .layers import LayerNormLSTMCell, init_conv, init_linear, leaky


class ImageDecoder(nn.Module):
    """Affine seed (seed_side x seed_side x C0), upsample/conv stages,
    final 3-channel conv with tanh output."""

    def __init__(self, cfg: DecoderConfig):
        super().__init__()
        self.cfg = cfg
        self.seed_proj = nn.Linear(
            cfg.embedding_dim, cfg.seed_side * cfg.seed_side * cfg.seed_channels
        )
        self.convs = nn.ModuleList()
        in_ch = cfg.seed_channels
        for out_ch in cfg.conv_channels:
            self.convs.append(nn.Conv2d(in_ch, out_ch, kernel_size=3, padding=1))
            in_ch = out_ch

    def init_seeded(self, rng: np.random.Generator) -> None:
        init_linear(rng, self.seed_proj)
        for conv in self.convs:
            init_conv(rng, conv)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        """z (B, embedding_dim) -> images (B, 3, size, size) in [-1, 1]."""
        if z.shape[-1] != self.cfg.embedding_dim:
            raise WidthMismatch(
                f"embedding width {z.shape[-1]} != configured {self.cfg.embedding_dim}"
            )
        side = self.cfg.seed_side
        x = self.seed_proj(z).reshape(-1, self.cfg.seed_channels, side, side)
        for i, conv in enumerate(self.convs[:-1]):
            x = F.interpolate(x, scale_factor=self.cfg.upsample_factors[i], mode="nearest")
            x = leaky(conv(x))
        return torch.tanh(self.convs[-1](x))


class TextDecoder(nn.Module):
    """Sentence-level then word-level LSTM unrolling with LN output taps.

    The sentence cell starts from an affine map of the article embedding
    and receives the embedding as input at every step; each normalized
    sentence feature then seeds (and feeds) a word-level cell whose
    normalized states map affinely to word-vector space."""

    def __init__(self, cfg: DecoderConfig):
        super().__init__()
        self.cfg = cfg
        self.sentence_init_h = nn.Linear(cfg.embedding_dim, cfg.sentence_hidden)
        self.sentence_init_c = nn.Linear(cfg.embedding_dim, cfg.sentence_hidden)
        self.sentence_cell = LayerNormLSTMCell(cfg.embedding_dim, cfg.sentence_hidden)
        self.word_init_h = nn.Linear(cfg.sentence_hidden, cfg.word_hidden)
        self.word_init_c = nn.Linear(cfg.sentence_hidden, cfg.word_hidden)
        self.word_cell = LayerNormLSTMCell(cfg.sentence_hidden, cfg.word_hidden)
        self.word_proj = nn.Linear(cfg.word_hidden, cfg.word_embed_dim)

    def init_seeded(self, rng: np.random.Generator) -> None:
        init_linear(rng, self.sentence_init_h)
        init_linear(rng, self.sentence_init_c)
        self.sentence_cell.init_seeded(rng)
        init_linear(rng, self.word_init_h)
        init_linear(rng, self.word_init_c)
        self.word_cell.init_seeded(rng)
        init_linear(rng, self.word_proj)

    def forward(
        self,
        z: torch.Tensor,
        n_sentences: int | None = None,
        n_words: int | None = None,
    ) -> torch.Tensor:
        """z (B, embedding_dim) -> word-vector grid (B, S, W, E).

        The unroll lengths default to the configured caps; training may
        shorten them to the batch's real extent (later positions never
        enter the loss)."""
        if z.shape[-1] != self.cfg.embedding_dim:
            raise WidthMismatch(
                f"embedding width {z.shape[-1]} != configured {self.cfg.embedding_dim}"
            )
        n_sentences = n_sentences or self.cfg.max_sentences
        n_words = n_words or self.cfg.max_words
        batch = z.shape[0]

        h = self.sentence_init_h(z)
        c = self.sentence_init_c(z)
        taps = []
        for _ in range(n_sentences):
            h, c, tap = self.sentence_cell(z, h, c)
            taps.append(tap)
        sentence_features = torch.stack(taps, dim=1)  # (B, S, H_s)

        flat_features = sentence_features.reshape(batch * n_sentences, -1)
        wh = self.word_init_h(flat_features)
        wc = self.word_init_c(flat_features)
        word_vectors = []
        for _ in range(n_words):
            wh, wc, tap = self.word_cell(flat_features, wh, wc)
            word_vectors.append(self.word_proj(tap))
        grid = torch.stack(word_vectors, dim=1)  # (B*S, W, E)
        return grid.reshape(batch, n_sentences, n_words, -1)


def build_image_decoder(cfg: DecoderConfig, rng: np.random.Generator) -> ImageDecoder:
    decoder = ImageDecoder(cfg)
    decoder.init_seeded(rng)
    return decoder


def build_text_decoder(cfg: DecoderConfig, rng: np.random.Generator) -> TextDecoder:
    decoder = TextDecoder(cfg)
    decoder.init_seeded(rng)
    return decoder


def image_loss(original: torch.Tensor, reconstructed: torch.Tensor) -> torch.Tensor:
    """Mean squared error over all pixels and channels."""
    if original.shape != reconstructed.shape:
        raise ShapeMismatch(
            f"image shapes differ: {tuple(original.shape)} vs {tuple(reconstructed.shape)}"
        )
    diff = original - reconstructed
    return (diff * diff).mean()


def cosine_to_targets(
    predicted: torch.Tensor, targets: torch.Tensor
) -> torch.Tensor:
    """Cosine similarity along the last axis; zero-norm inputs give 0."""
    dot = (predicted * targets).sum(dim=-1)
    denom = predicted.norm(dim=-1) * targets.norm(dim=-1)
    safe = torch.where(denom > 0, denom, torch.ones_like(denom))
    return torch.where(denom > 0, dot / safe, torch.zeros_like(dot))


def text_loss(
    predicted: torch.Tensor,
    target_ids: torch.Tensor,
    mask: torch.Tensor,
    table: torch.Tensor,
) -> torch.Tensor:
    """Mean of (1 - cosine(predicted, target row)) over real positions.

    `predicted` is (..., E), `target_ids`/`mask` match its leading shape,
    `table` is the (rows, E) embedding matrix. Masked positions never
    contribute."""
    if predicted.shape[:-1] != target_ids.shape or target_ids.shape != mask.shape:
        raise ShapeMismatch(
            f"grids misaligned: predicted {tuple(predicted.shape)}, "
            f"targets {tuple(target_ids.shape)}, mask {tuple(mask.shape)}"
        )
    if not bool(mask.any()):
        raise EmptyMask("text loss over a grid with no real tokens")
    targets = table[target_ids]
    similarity = cosine_to_targets(predicted, targets)
    return (1.0 - similarity)[mask].mean()


def nearest_token(
    vector: np.ndarray, embeddings: EmbeddingTable, vocab: Vocabulary
) -> str:
    """Token whose embedding row has the highest cosine similarity.

    Ties (including the all-zero query, where every cosine is 0) break
    lexicographically. Used for qualitative reconstruction dumps."""
    query = np.asarray(vector, dtype=np.float64)
    rows = embeddings.vectors.astype(np.float64)
    row_norms = np.linalg.norm(rows, axis=1)
    query_norm = np.linalg.norm(query)
    denom = row_norms * query_norm
    with np.errstate(invalid="ignore", divide="ignore"):
        cosines = np.where(denom > 0, rows @ query / np.where(denom > 0, denom, 1.0), 0.0)
    best = cosines.max()
    candidates = [vocab.token_of(i) for i in np.flatnonzero(cosines == best)]
    return min(candidates)

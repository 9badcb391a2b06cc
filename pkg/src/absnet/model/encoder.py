"""Article encoder: image CNN (or injected external features), the
image-conditioned hierarchical bidirectional GRU text encoder, and the
concatenation into the fused article embedding."""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from ..config import DESK_CNN_CHANNELS, EncoderConfig
from ..errors import FeatureDimMismatch, ShapeMismatch, WidthMismatch
from .layers import (
    ImageConditionedAttention,
    init_conv,
    init_gru,
    init_linear,
    leaky,
    run_bidirectional_gru,
)


class ImageEncoder(nn.Module):
    """Five stride-2 3x3 conv blocks, global average pooling, affine map."""

    def __init__(self, cfg: EncoderConfig, channels: tuple[int, ...] = DESK_CNN_CHANNELS):
        super().__init__()
        self.image_size = cfg.image_size
        self.convs = nn.ModuleList()
        in_ch = 3
        for out_ch in channels:
            self.convs.append(nn.Conv2d(in_ch, out_ch, kernel_size=3, stride=2, padding=1))
            in_ch = out_ch
        self.proj = nn.Linear(in_ch, cfg.image_feature_dim)

    def init_seeded(self, rng: np.random.Generator) -> None:
        for conv in self.convs:
            init_conv(rng, conv)
        init_linear(rng, self.proj)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """images (B, 3, H, W) -> features (B, image_feature_dim)."""
        if images.shape[-2:] != (self.image_size, self.image_size):
            raise ShapeMismatch(
                f"expected {self.image_size}x{self.image_size} images, "
                f"got {tuple(images.shape[-2:])}"
            )
        x = images
        for conv in self.convs:
            x = leaky(conv(x))
        pooled = x.mean(dim=(2, 3))
        return self.proj(pooled)


def check_external_features(features: torch.Tensor, cfg: EncoderConfig) -> torch.Tensor:
    """Validate precomputed image features loaded alongside a pair."""
    if features.shape[-1] != cfg.image_feature_dim:
        raise FeatureDimMismatch(
            f"external feature width {features.shape[-1]} != configured "
            f"{cfg.image_feature_dim}"
        )
    return features


class TextEncoder(nn.Module):
    """Hierarchical bidirectional GRU encoder with image-conditioned
    attention at the word and sentence levels."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        hidden = cfg.gru_hidden
        self.word_gru = nn.GRU(
            cfg.word_embed_dim, hidden, bidirectional=True, batch_first=True
        )
        self.word_attention = ImageConditionedAttention(
            2 * hidden, cfg.image_feature_dim, cfg.attention_dim
        )
        self.sentence_gru = nn.GRU(2 * hidden, hidden, bidirectional=True, batch_first=True)
        self.sentence_attention = ImageConditionedAttention(
            2 * hidden, cfg.image_feature_dim, cfg.attention_dim
        )

    def init_seeded(self, rng: np.random.Generator) -> None:
        init_gru(rng, self.word_gru)
        self.word_attention.init_seeded(rng)
        init_gru(rng, self.sentence_gru)
        self.sentence_attention.init_seeded(rng)

    def forward(
        self,
        embedded: torch.Tensor,
        mask: torch.Tensor,
        image_features: torch.Tensor,
        return_weights: bool = False,
    ):
        """embedded (B, S, W, E), mask (B, S, W) bool, image features
        (B, d_img) -> text features (B, d_txt).

        Token grids are prefix-aligned: real tokens fill a prefix of each
        sentence and real sentences a prefix of each grid.
        """
        batch, n_sent, n_words, _ = embedded.shape
        flat_embedded = embedded.reshape(batch * n_sent, n_words, -1)
        flat_mask = mask.reshape(batch * n_sent, n_words)
        word_lengths = flat_mask.sum(dim=-1)
        word_states = run_bidirectional_gru(self.word_gru, flat_embedded, word_lengths)
        condition = (
            image_features.unsqueeze(1)
            .expand(batch, n_sent, image_features.shape[-1])
            .reshape(batch * n_sent, -1)
        )
        sentence_vectors, word_weights = self.word_attention(
            word_states, flat_mask, condition
        )
        sentence_vectors = sentence_vectors.reshape(batch, n_sent, -1)

        sentence_mask = mask.any(dim=-1)
        sentence_lengths = sentence_mask.sum(dim=-1)
        sentence_states = run_bidirectional_gru(
            self.sentence_gru, sentence_vectors, sentence_lengths
        )
        text_features, sentence_weights = self.sentence_attention(
            sentence_states, sentence_mask, image_features
        )
        if return_weights:
            return text_features, word_weights.reshape(batch, n_sent, n_words), sentence_weights
        return text_features


def fuse(image_features: torch.Tensor, text_features: torch.Tensor,
         cfg: EncoderConfig | None = None) -> torch.Tensor:
    """Concatenate image and text features, image part first."""
    if image_features.shape[:-1] != text_features.shape[:-1]:
        raise WidthMismatch(
            f"batch shapes differ: {tuple(image_features.shape)} vs "
            f"{tuple(text_features.shape)}"
        )
    if cfg is not None:
        if image_features.shape[-1] != cfg.image_feature_dim:
            raise WidthMismatch(
                f"image feature width {image_features.shape[-1]} != configured "
                f"{cfg.image_feature_dim}"
            )
        if text_features.shape[-1] != cfg.text_feature_dim:
            raise WidthMismatch(
                f"text feature width {text_features.shape[-1]} != configured "
                f"{cfg.text_feature_dim}"
            )
    return torch.cat([image_features, text_features], dim=-1)


class ArticleEncoder(nn.Module):
    """Full encoder: image features + text features -> article embedding."""

    def __init__(self, cfg: EncoderConfig, cnn_channels: tuple[int, ...] = DESK_CNN_CHANNELS):
        super().__init__()
        self.cfg = cfg
        self.image_encoder = (
            ImageEncoder(cfg, channels=cnn_channels) if cfg.backbone == "desk_cnn" else None
        )
        self.text_encoder = TextEncoder(cfg)

    def init_seeded(self, rng: np.random.Generator) -> None:
        if self.image_encoder is not None:
            self.image_encoder.init_seeded(rng)
        self.text_encoder.init_seeded(rng)

    def encode_image(
        self, images: torch.Tensor | None, external: torch.Tensor | None = None
    ) -> torch.Tensor:
        if self.image_encoder is not None:
            return self.image_encoder(images)
        if external is None:
            raise FeatureDimMismatch(
                "backbone is external_features but no external features were given"
            )
        return check_external_features(external, self.cfg)

    def forward(
        self,
        images: torch.Tensor | None,
        embedded: torch.Tensor,
        mask: torch.Tensor,
        external: torch.Tensor | None = None,
    ) -> torch.Tensor:
        image_features = self.encode_image(images, external)
        text_features = self.text_encoder(embedded, mask, image_features)
        return fuse(image_features, text_features, self.cfg)


def build_article_encoder(
    cfg: EncoderConfig,
    rng: np.random.Generator,
    cnn_channels: tuple[int, ...] = DESK_CNN_CHANNELS,
) -> ArticleEncoder:
    encoder = ArticleEncoder(cfg, cnn_channels=cnn_channels)
    encoder.init_seeded(rng)
    return encoder

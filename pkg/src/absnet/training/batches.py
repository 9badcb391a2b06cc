"""Dataset encoding into stacked arrays and minibatch assembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..config import EncoderConfig
from ..corpus.types import ImageTextPair
from ..vocab import Vocabulary, encode_tokens


@dataclass
class EncodedDataset:
    """Pairs stacked into arrays ready for minibatch slicing."""

    pair_ids: list[str]
    images: np.ndarray  # (N, 3, H, W) float32
    token_ids: np.ndarray  # (N, S, W) int64
    token_mask: np.ndarray  # (N, S, W) bool
    labels: np.ndarray | None  # (N,) int64, None when any pair is unlabeled

    def __len__(self) -> int:
        return len(self.pair_ids)


def encode_dataset(
    pairs: list[ImageTextPair], vocab: Vocabulary, cfg: EncoderConfig
) -> EncodedDataset:
    n = len(pairs)
    images = np.empty((n, 3, cfg.image_size, cfg.image_size), dtype=np.float32)
    token_ids = np.empty((n, cfg.max_sentences, cfg.max_words), dtype=np.int64)
    token_mask = np.empty((n, cfg.max_sentences, cfg.max_words), dtype=bool)
    labels = np.zeros(n, dtype=np.int64)
    all_labeled = True
    for i, pair in enumerate(pairs):
        images[i] = pair.image.pixels.transpose(2, 0, 1)
        ids, mask = encode_tokens(pair.text, vocab, cfg.max_sentences, cfg.max_words)
        token_ids[i] = ids
        token_mask[i] = mask
        if pair.label is None:
            all_labeled = False
        else:
            labels[i] = pair.label.index
    return EncodedDataset(
        pair_ids=[p.pair_id for p in pairs],
        images=images,
        token_ids=token_ids,
        token_mask=token_mask,
        labels=labels if all_labeled else None,
    )


def real_extents(mask: np.ndarray) -> tuple[int, int]:
    """Smallest (sentence, word) extents covering every real token.

    Grids are prefix-aligned, so truncating to these extents changes
    nothing downstream (masked positions are inert by contract)."""
    sentence_any = mask.any(axis=2)
    n_sentences = int(sentence_any.sum(axis=1).max()) if mask.size else 0
    n_words = int(mask.sum(axis=2).max()) if mask.size else 0
    return max(1, n_sentences), max(1, n_words)


def batch_tensors(
    dataset: EncodedDataset, indices: np.ndarray, truncate: bool = True
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Stack one minibatch as torch tensors (images, token ids, mask)."""
    images = torch.from_numpy(dataset.images[indices])
    ids = dataset.token_ids[indices]
    mask = dataset.token_mask[indices]
    if truncate:
        s_max, w_max = real_extents(mask)
        ids = ids[:, :s_max, :w_max]
        mask = mask[:, :s_max, :w_max]
    return images, torch.from_numpy(np.ascontiguousarray(ids)), torch.from_numpy(
        np.ascontiguousarray(mask)
    )


def minibatch_indices(
    n: int, batch_size: int, iterations: int, rng: np.random.Generator
):
    """Yield per-iteration index arrays, reshuffling at each epoch boundary."""
    batch_size = min(batch_size, n)
    order = rng.permutation(n)
    pos = 0
    for _ in range(iterations):
        if pos + batch_size > n:
            order = rng.permutation(n)
            pos = 0
        yield order[pos : pos + batch_size]
        pos += batch_size

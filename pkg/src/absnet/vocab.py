"""Frequency-ranked vocabulary, token-grid encoding, and word embeddings.

The vocabulary keeps the most frequent corpus tokens (ties broken
lexicographically) plus the specials `<unk>` and `<pad>`; coverage is
the fraction of corpus token occurrences mapped to non-`<unk>` ids.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus.text import MAX_SENTENCES, MAX_WORDS_PER_SENTENCE
from .corpus.types import TokenizedText
from .errors import DimensionMismatch, EmptyCorpus, MalformedVectorFile

UNK_TOKEN = "<unk>"
PAD_TOKEN = "<pad>"
DEFAULT_VOCAB_SIZE = 25_000
DEFAULT_EMBED_DIM = 300


@dataclass
class Vocabulary:
    """Rank-ordered token list with `<unk>`/`<pad>` specials appended."""

    tokens: list[str]
    counts: dict[str, int]
    coverage: float | None = None
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {tok: i for i, tok in enumerate(self.tokens)}

    @property
    def unk_id(self) -> int:
        return len(self.tokens)

    @property
    def pad_id(self) -> int:
        return len(self.tokens) + 1

    @property
    def n_rows(self) -> int:
        """Token rows plus the two specials."""
        return len(self.tokens) + 2

    def id_of(self, token: str) -> int:
        return self.index.get(token, self.unk_id)

    def token_of(self, token_id: int) -> str:
        if token_id == self.unk_id:
            return UNK_TOKEN
        if token_id == self.pad_id:
            return PAD_TOKEN
        return self.tokens[token_id]


def build_vocab(
    corpus: Iterable[TokenizedText], max_size: int = DEFAULT_VOCAB_SIZE
) -> Vocabulary:
    """Select the `max_size` most frequent tokens and compute coverage."""
    if max_size < 1:
        raise ValueError(f"max_size must be positive, got {max_size}")
    frequencies: Counter[str] = Counter()
    for text in corpus:
        for sentence in text.sentences:
            frequencies.update(sentence)
    total = sum(frequencies.values())
    if total == 0:
        raise EmptyCorpus("corpus contains no tokens")
    ranked = sorted(frequencies.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
    retained = sum(count for _, count in ranked)
    return Vocabulary(
        tokens=[tok for tok, _ in ranked],
        counts={tok: count for tok, count in ranked},
        coverage=retained / total,
    )


def encode_tokens(
    text: TokenizedText,
    vocab: Vocabulary,
    max_sentences: int = MAX_SENTENCES,
    max_words: int = MAX_WORDS_PER_SENTENCE,
) -> tuple[np.ndarray, np.ndarray]:
    """Map text onto a fixed `<pad>`-filled id grid plus a real-token mask."""
    ids = np.full((max_sentences, max_words), vocab.pad_id, dtype=np.int64)
    mask = np.zeros((max_sentences, max_words), dtype=bool)
    for s, sentence in enumerate(text.sentences[:max_sentences]):
        for w, token in enumerate(sentence[:max_words]):
            ids[s, w] = vocab.id_of(token)
            mask[s, w] = True
    return ids, mask


def decode_ids(ids: np.ndarray, mask: np.ndarray, vocab: Vocabulary) -> TokenizedText:
    """Inverse of `encode_tokens` on real positions."""
    sentences = []
    for s in range(ids.shape[0]):
        tokens = [vocab.token_of(int(ids[s, w])) for w in range(ids.shape[1]) if mask[s, w]]
        if tokens:
            sentences.append(tokens)
    return TokenizedText(sentences=sentences)


@dataclass
class EmbeddingTable:
    """One row per vocabulary id (`<pad>` row is all zeros)."""

    vectors: np.ndarray

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def row(self, token_id: int) -> np.ndarray:
        return self.vectors[token_id]


def _random_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    return rng.uniform(-0.1, 0.1, size=(n, dim)).astype(np.float32)


def init_random_embeddings(
    vocab: Vocabulary, dimension: int = DEFAULT_EMBED_DIM, seed: int = 0
) -> EmbeddingTable:
    """Seeded uniform [-0.1, 0.1] rows for all tokens and `<unk>`; zero `<pad>`."""
    rng = np.random.default_rng(seed)
    vectors = np.zeros((vocab.n_rows, dimension), dtype=np.float32)
    vectors[: vocab.unk_id + 1] = _random_rows(rng, vocab.unk_id + 1, dimension)
    return EmbeddingTable(vectors=vectors)


def load_embeddings(
    path: str | Path,
    vocab: Vocabulary,
    dimension: int = DEFAULT_EMBED_DIM,
    seed: int = 0,
) -> EmbeddingTable:
    """Load word vectors from the standard text format.

    Header line is `<count> <dim>`; each following line is a token and
    `dim` space-separated decimals. Vocabulary tokens absent from the
    file, and the `<unk>` row, get seeded uniform [-0.1, 0.1] rows.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise MalformedVectorFile(f"{path}: header must be '<count> <dim>'")
        try:
            declared_count, file_dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise MalformedVectorFile(f"{path}: non-integer header: {exc}") from exc
        if file_dim != dimension:
            raise DimensionMismatch(
                f"{path}: file dimension {file_dim} != configured {dimension}"
            )
        file_vectors: dict[str, np.ndarray] = {}
        for line_no, line in enumerate(f, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2 and not line.strip():
                continue
            token, values = parts[0], parts[1:]
            if len(values) != dimension:
                raise MalformedVectorFile(
                    f"{path}:{line_no}: expected {dimension} values, found {len(values)}"
                )
            try:
                file_vectors[token] = np.asarray(values, dtype=np.float32)
            except ValueError as exc:
                raise MalformedVectorFile(f"{path}:{line_no}: bad decimal: {exc}") from exc
    if len(file_vectors) != declared_count:
        raise MalformedVectorFile(
            f"{path}: header declares {declared_count} vectors, found {len(file_vectors)}"
        )
    rng = np.random.default_rng(seed)
    vectors = np.zeros((vocab.n_rows, dimension), dtype=np.float32)
    # Missing rows draw from the rng in vocabulary order (then <unk>),
    # so the result is independent of the file's line order.
    for i, token in enumerate(vocab.tokens):
        if token in file_vectors:
            vectors[i] = file_vectors[token]
        else:
            vectors[i] = _random_rows(rng, 1, dimension)[0]
    vectors[vocab.unk_id] = _random_rows(rng, 1, dimension)[0]
    return EmbeddingTable(vectors=vectors)


def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    """Write `rank<TAB>token<TAB>count` lines."""
    with open(path, "w", encoding="utf-8") as out:
        for rank, token in enumerate(vocab.tokens):
            out.write(f"{rank}\t{token}\t{vocab.counts[token]}\n")


def load_vocab(path: str | Path) -> Vocabulary:
    tokens: list[str] = []
    counts: dict[str, int] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            _, token, count = line.rstrip("\n").split("\t")
            tokens.append(token)
            counts[token] = int(count)
    return Vocabulary(tokens=tokens, counts=counts, coverage=None)

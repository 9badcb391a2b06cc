"""Core corpus data types."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class AbsLabel(enum.Enum):
    """Relative abstractness of an image with respect to its text.

    Ordering of the members is the canonical class order used by the
    classifier output, confusion matrices, and tie-breaking.
    """

    IMAGE_LESS_ABSTRACT = "I<aT"
    IMAGE_MORE_ABSTRACT = "I>aT"
    EQUAL_ABSTRACTNESS = "I=aT"

    @property
    def index(self) -> int:
        return list(AbsLabel).index(self)

    @classmethod
    def from_index(cls, i: int) -> "AbsLabel":
        return list(cls)[i]

    @classmethod
    def from_string(cls, s: str) -> "AbsLabel":
        for member in cls:
            if member.value == s:
                return member
        raise ValueError(f"unknown abstractness label: {s!r}")


class Split(enum.Enum):
    TRAIN = "train"
    TEST = "test"
    UNSPLIT = "unsplit"


@dataclass
class TokenizedText:
    """Sentence-segmented, lowercased token lists.

    Hard caps: at most 30 sentences, each at most 50 tokens.
    """

    sentences: list[list[str]]

    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)

    def all_tokens(self) -> list[str]:
        return [tok for sent in self.sentences for tok in sent]


@dataclass
class PreprocessedImage:
    """H x W x 3 float array with channel values in [-1, 1]."""

    pixels: np.ndarray

    @property
    def size(self) -> int:
        return self.pixels.shape[0]


@dataclass
class Paragraph:
    paragraph_id: str
    text: str


@dataclass
class Figure:
    figure_id: str
    ordinal: int
    image_bytes: bytes
    caption: str
    referencing_paragraphs: list[str] = field(default_factory=list)


@dataclass
class ArticleDocument:
    article_id: str
    journal: str
    paragraphs: list[Paragraph]
    figures: list[Figure]
    warnings: list[str] = field(default_factory=list)


@dataclass
class ImageTextPair:
    """One preprocessed image with its tokenized text; the dataset atom."""

    pair_id: str
    image: PreprocessedImage
    text: TokenizedText
    label: AbsLabel | None = None
    source: str = ""
    split: Split = Split.UNSPLIT

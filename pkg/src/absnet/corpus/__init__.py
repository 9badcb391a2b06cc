from .types import (
    AbsLabel,
    ArticleDocument,
    Figure,
    ImageTextPair,
    Paragraph,
    PreprocessedImage,
    Split,
    TokenizedText,
)
from .text import MAX_SENTENCES, MAX_WORDS_PER_SENTENCE, clean_text, concat_texts
from .images import image_to_png_bytes, preprocess_image
from .articles import XmlSchema, extract_pairs, parse_article
from .synthetic import generate_synthetic_corpus, generate_synthetic_corpus_with_log
from .store import load_dataset, save_dataset, split_dataset

__all__ = [
    "AbsLabel",
    "ArticleDocument",
    "Figure",
    "ImageTextPair",
    "Paragraph",
    "PreprocessedImage",
    "Split",
    "TokenizedText",
    "MAX_SENTENCES",
    "MAX_WORDS_PER_SENTENCE",
    "clean_text",
    "concat_texts",
    "image_to_png_bytes",
    "preprocess_image",
    "XmlSchema",
    "extract_pairs",
    "parse_article",
    "generate_synthetic_corpus",
    "generate_synthetic_corpus_with_log",
    "load_dataset",
    "save_dataset",
    "split_dataset",
]

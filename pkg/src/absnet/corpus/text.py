"""Text preprocessing: markup stripping, formula replacement, sentence
splitting, tokenization, and truncation to the 30x50 grid caps."""

from __future__ import annotations

import html
import re

from .types import TokenizedText

MAX_SENTENCES = 30
MAX_WORDS_PER_SENTENCE = 50

FORMULA_TOKEN = "formula"

# Inline markup elements that denote formulas; the whole element
# (including its content) collapses to the single token `formula`.
_FORMULA_ELEM = re.compile(
    r"<\s*(formula|inline-formula|disp-formula|math)\b[^>]*>.*?<\s*/\s*\1\s*>",
    re.IGNORECASE | re.DOTALL,
)
_SELF_CLOSED_FORMULA = re.compile(
    r"<\s*(formula|inline-formula|disp-formula|math)\b[^>]*/\s*>", re.IGNORECASE
)
_ANY_TAG = re.compile(r"<[^>]*>")
_WORD = re.compile(r"[a-z0-9]+")

# Tokens after which a period does not end a sentence.
_ABBREVIATIONS = frozenset(
    {
        "al",
        "cf",
        "dr",
        "e.g",
        "eq",
        "eqs",
        "et",
        "etc",
        "fig",
        "figs",
        "i.e",
        "mr",
        "mrs",
        "no",
        "prof",
        "ref",
        "refs",
        "sec",
        "vs",
    }
)


def _strip_markup(raw: str) -> str:
    text = _FORMULA_ELEM.sub(f" {FORMULA_TOKEN} ", raw)
    text = _SELF_CLOSED_FORMULA.sub(f" {FORMULA_TOKEN} ", text)
    text = _ANY_TAG.sub(" ", text)
    text = html.unescape(text)
    # Drop control characters; keep whitespace as separators.
    return "".join(ch if ch.isprintable() else " " for ch in text)


def _split_sentences(text: str) -> list[str]:
    sentences = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in ".!?":
            # Consume a run of terminators ("?!", "...").
            j = i
            while j + 1 < n and text[j + 1] in ".!?":
                j += 1
            at_end = j + 1 >= n
            followed_by_space = not at_end and text[j + 1].isspace()
            if followed_by_space or at_end:
                word_start = i
                while word_start > start and not text[word_start - 1].isspace():
                    word_start -= 1
                last_word = text[word_start:i].lower().rstrip(".")
                if ch != "." or last_word not in _ABBREVIATIONS:
                    sentences.append(text[start : j + 1])
                    start = j + 1
            i = j + 1
        else:
            i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def clean_text(raw: str) -> TokenizedText:
    """Normalize raw (possibly markup-bearing) text into capped token lists.

    Formula elements become the literal token `formula`; remaining markup
    and control characters are removed; sentences are split on `.`/`!`/`?`
    followed by whitespace (with an abbreviation guard), lowercased, and
    truncated to 50 tokens each; at most 30 sentences are kept.
    """
    if not raw:
        return TokenizedText(sentences=[])
    stripped = _strip_markup(raw)
    sentences: list[list[str]] = []
    for sentence in _split_sentences(stripped):
        tokens = _WORD.findall(sentence.lower())
        if not tokens:
            continue
        sentences.append(tokens[:MAX_WORDS_PER_SENTENCE])
        if len(sentences) == MAX_SENTENCES:
            break
    return TokenizedText(sentences=sentences)


def concat_texts(first: TokenizedText, second: TokenizedText) -> TokenizedText:
    """Concatenate two tokenized texts, re-applying the sentence cap."""
    sentences = (first.sentences + second.sentences)[:MAX_SENTENCES]
    return TokenizedText(sentences=[list(s) for s in sentences])

"""Label-bearing synthetic corpus.

Scenes are rasterized from axis-aligned rectangles, circles, and line
segments, constructed so each abstractness label holds by design:

* image-less-abstract: a dense, colorful scene paired with one generic
  one-line description;
* image-more-abstract: a sparse monochrome outline schematic paired with
  multi-sentence text enumerating attributes the drawing omits;
* equal: a scene whose shapes, colors, sizes, and positions are exactly
  enumerated by the text, one sentence per shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .text import clean_text
from .types import AbsLabel, ImageTextPair, PreprocessedImage, Split

GENERATOR_VERSION = "1"

PALETTE = {
    "red": (220, 45, 45),
    "green": (45, 165, 70),
    "blue": (50, 85, 220),
    "yellow": (235, 200, 45),
    "purple": (150, 60, 200),
    "orange": (240, 140, 35),
}
MONO_COLORS = {"black": (0, 0, 0), "gray": (120, 120, 120)}
SHAPE_KINDS = ("rectangle", "circle", "line")
SIZE_WORDS = ("small", "large")
ANCHORS = {
    "top left": (0.27, 0.27),
    "top right": (0.73, 0.27),
    "bottom left": (0.27, 0.73),
    "bottom right": (0.73, 0.73),
    "center": (0.5, 0.5),
}

_GENERIC_SENTENCES = (
    "a detailed diagram with many shapes.",
    "an illustration of a complex scene.",
    "a colorful figure.",
    "a drawing with several objects.",
    "a busy picture full of elements.",
    "a rich graphical composition.",
)
_ORDINALS = ("first", "second", "third", "fourth", "fifth", "sixth")
_NOUNS = ("module", "sensor", "filter", "node", "buffer", "channel")
_NUMBERS = ("two", "three", "four", "five", "six", "seven", "eight", "nine")
_UNITS = ("values", "signals", "items", "entries", "messages")


@dataclass
class SceneRecord:
    """Construction log for one generated pair."""

    pair_id: str
    label: AbsLabel
    shape_names: list[str] = field(default_factory=list)
    color_names: list[str] = field(default_factory=list)


def _blank_canvas(size: int) -> np.ndarray:
    return np.full((size, size, 3), 255, dtype=np.uint8)


def _draw_rectangle(canvas, cx, cy, half, color, fill, thickness):
    size = canvas.shape[0]
    x0, x1 = max(0, cx - half), min(size - 1, cx + half)
    y0, y1 = max(0, cy - half), min(size - 1, cy + half)
    if fill:
        canvas[y0 : y1 + 1, x0 : x1 + 1] = color
    else:
        t = thickness
        canvas[y0 : y0 + t, x0 : x1 + 1] = color
        canvas[max(y0, y1 - t + 1) : y1 + 1, x0 : x1 + 1] = color
        canvas[y0 : y1 + 1, x0 : x0 + t] = color
        canvas[y0 : y1 + 1, max(x0, x1 - t + 1) : x1 + 1] = color


def _draw_circle(canvas, cx, cy, radius, color, fill, thickness):
    size = canvas.shape[0]
    yy, xx = np.ogrid[:size, :size]
    dist2 = (xx - cx) ** 2 + (yy - cy) ** 2
    if fill:
        mask = dist2 <= radius * radius
    else:
        inner = max(0, radius - thickness)
        mask = (dist2 <= radius * radius) & (dist2 >= inner * inner)
    canvas[mask] = color


def _draw_line(canvas, cx, cy, half_len, horizontal, color, thickness):
    size = canvas.shape[0]
    t = thickness
    if horizontal:
        x0, x1 = max(0, cx - half_len), min(size - 1, cx + half_len)
        y0 = max(0, cy - t // 2)
        canvas[y0 : min(size, y0 + t), x0 : x1 + 1] = color
    else:
        y0, y1 = max(0, cy - half_len), min(size - 1, cy + half_len)
        x0 = max(0, cx - t // 2)
        canvas[y0 : y1 + 1, x0 : min(size, x0 + t)] = color


def _draw_shape(canvas, kind, cx, cy, extent, color, fill, rng, thickness):
    if kind == "rectangle":
        _draw_rectangle(canvas, cx, cy, extent, color, fill, thickness)
    elif kind == "circle":
        _draw_circle(canvas, cx, cy, extent, color, fill, thickness)
    else:
        _draw_line(canvas, cx, cy, extent, bool(rng.integers(2)), color, thickness)


def _shape_geometry(rng, size, size_word, position_word):
    frac = rng.uniform(0.08, 0.12) if size_word == "small" else rng.uniform(0.16, 0.24)
    extent = max(2, round(size * frac))
    ax, ay = ANCHORS[position_word]
    jitter = size * 0.06
    cx = int(np.clip(ax * size + rng.uniform(-jitter, jitter), extent, size - 1 - extent))
    cy = int(np.clip(ay * size + rng.uniform(-jitter, jitter), extent, size - 1 - extent))
    return cx, cy, extent


def _pick(rng, options):
    return options[int(rng.integers(len(options)))]


def _scene_equal(rng, size, canvas, record):
    sentences = []
    for _ in range(int(rng.integers(3, 7))):
        kind = _pick(rng, SHAPE_KINDS)
        color_name = _pick(rng, tuple(PALETTE))
        size_word = _pick(rng, SIZE_WORDS)
        position = _pick(rng, tuple(ANCHORS))
        cx, cy, extent = _shape_geometry(rng, size, size_word, position)
        _draw_shape(
            canvas, kind, cx, cy, extent, PALETTE[color_name], True, rng,
            thickness=max(2, size // 30),
        )
        record.shape_names.append(kind)
        record.color_names.append(color_name)
        sentences.append(f"a {size_word} {color_name} {kind} in the {position}.")
    return " ".join(sentences)


def _scene_image_detailed(rng, size, canvas, record):
    for _ in range(int(rng.integers(8, 15))):
        kind = _pick(rng, SHAPE_KINDS)
        color_name = _pick(rng, tuple(PALETTE))
        size_word = _pick(rng, SIZE_WORDS)
        position = _pick(rng, tuple(ANCHORS))
        cx, cy, extent = _shape_geometry(rng, size, size_word, position)
        _draw_shape(
            canvas, kind, cx, cy, extent, PALETTE[color_name], True, rng,
            thickness=max(2, size // 30),
        )
        record.shape_names.append(kind)
        record.color_names.append(color_name)
    return _pick(rng, _GENERIC_SENTENCES)


def _scene_image_schematic(rng, size, canvas, record):
    for _ in range(int(rng.integers(1, 4))):
        kind = _pick(rng, SHAPE_KINDS)
        color_name = _pick(rng, tuple(MONO_COLORS))
        size_word = _pick(rng, SIZE_WORDS)
        position = _pick(rng, tuple(ANCHORS))
        cx, cy, extent = _shape_geometry(rng, size, size_word, position)
        _draw_shape(
            canvas, kind, cx, cy, extent, MONO_COLORS[color_name], False, rng,
            thickness=max(2, size // 30),
        )
        record.shape_names.append(kind)
        record.color_names.append(color_name)
    sentences = []
    for i in range(int(rng.integers(4, 7))):
        ordinal = _ORDINALS[min(i, len(_ORDINALS) - 1)]
        noun = _pick(rng, _NOUNS)
        if rng.integers(2):
            sentences.append(
                f"the {ordinal} {noun} is {_pick(rng, SIZE_WORDS)} and "
                f"{_pick(rng, tuple(PALETTE))}."
            )
        else:
            sentences.append(
                f"the {ordinal} {noun} holds {_pick(rng, _NUMBERS)} "
                f"{_pick(rng, _UNITS)}."
            )
    return " ".join(sentences)


_SCENE_BUILDERS = {
    AbsLabel.IMAGE_LESS_ABSTRACT: _scene_image_detailed,
    AbsLabel.IMAGE_MORE_ABSTRACT: _scene_image_schematic,
    AbsLabel.EQUAL_ABSTRACTNESS: _scene_equal,
}
_LABEL_TAGS = {
    AbsLabel.IMAGE_LESS_ABSTRACT: "lt",
    AbsLabel.IMAGE_MORE_ABSTRACT: "gt",
    AbsLabel.EQUAL_ABSTRACTNESS: "eq",
}


def generate_synthetic_corpus_with_log(
    n_per_class: int, seed: int, size: int = 300
) -> tuple[list[ImageTextPair], list[SceneRecord]]:
    """Generate the synthetic corpus along with per-pair construction logs."""
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be positive, got {n_per_class}")
    rng = np.random.default_rng(seed)
    pairs: list[ImageTextPair] = []
    records: list[SceneRecord] = []
    for label in AbsLabel:
        for i in range(n_per_class):
            pair_id = f"syn-{_LABEL_TAGS[label]}-{i:05d}"
            record = SceneRecord(pair_id=pair_id, label=label)
            canvas = _blank_canvas(size)
            raw_text = _SCENE_BUILDERS[label](rng, size, canvas, record)
            image = PreprocessedImage(
                pixels=canvas.astype(np.float32) / 127.5 - 1.0
            )
            pairs.append(
                ImageTextPair(
                    pair_id=pair_id,
                    image=image,
                    text=clean_text(raw_text),
                    label=label,
                    source="synthetic",
                    split=Split.UNSPLIT,
                )
            )
            records.append(record)
    return pairs, records


def generate_synthetic_corpus(
    n_per_class: int, seed: int, size: int = 300
) -> list[ImageTextPair]:
    """Deterministically generate `n_per_class` labeled pairs per class."""
    pairs, _ = generate_synthetic_corpus_with_log(n_per_class, seed, size=size)
    return pairs

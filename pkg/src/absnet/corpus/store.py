"""On-disk dataset format and split management.

A dataset directory holds `images/` (one PNG per pair), `pairs.jsonl`
(one JSON record per line: pair_id, image_path, sentences, label,
source, split), and `manifest.json` (counts per class/split, seed,
generator version, image size).
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import DataError, InsufficientClassMembers, UnlabeledPair
from .images import array_to_image
from .types import AbsLabel, ImageTextPair, PreprocessedImage, Split, TokenizedText

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]")


def _safe_filename(pair_id: str, used: set[str]) -> str:
    base = _UNSAFE.sub("_", pair_id) or "pair"
    name = base
    suffix = 1
    while name in used:
        suffix += 1
        name = f"{base}-{suffix}"
    used.add(name)
    return name


def dataset_counts(pairs: list[ImageTextPair]) -> dict:
    counts: dict[str, dict[str, int]] = {}
    for pair in pairs:
        split_key = pair.split.value
        label_key = pair.label.value if pair.label is not None else "unlabeled"
        counts.setdefault(split_key, {}).setdefault(label_key, 0)
        counts[split_key][label_key] += 1
    return counts


def save_dataset(
    pairs: list[ImageTextPair],
    path: str | Path,
    seed: int | None = None,
    generator_version: str | None = None,
) -> Path:
    """Write a dataset directory; returns its path."""
    root = Path(path)
    (root / "images").mkdir(parents=True, exist_ok=True)
    used_names: set[str] = set()
    image_size = pairs[0].image.size if pairs else 0
    with open(root / "pairs.jsonl", "w", encoding="utf-8") as out:
        for pair in pairs:
            image_path = f"images/{_safe_filename(pair.pair_id, used_names)}.png"
            array_to_image(pair.image.pixels).save(root / image_path, format="PNG")
            record = {
                "pair_id": pair.pair_id,
                "image_path": image_path,
                "sentences": pair.text.sentences,
                "label": pair.label.value if pair.label is not None else None,
                "source": pair.source,
                "split": pair.split.value,
            }
            out.write(json.dumps(record) + "\n")
    manifest = {
        "counts": dataset_counts(pairs),
        "image_size": image_size,
        "n_pairs": len(pairs),
        "seed": seed,
        "generator_version": generator_version,
    }
    with open(root / "manifest.json", "w", encoding="utf-8") as out:
        json.dump(manifest, out, indent=2, sort_keys=True)
        out.write("\n")
    return root


def load_dataset(path: str | Path) -> list[ImageTextPair]:
    """Read a dataset directory back into memory."""
    root = Path(path)
    pairs_file = root / "pairs.jsonl"
    if not pairs_file.exists():
        raise DataError(f"not a dataset directory (missing pairs.jsonl): {root}")
    pairs: list[ImageTextPair] = []
    with open(pairs_file, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{pairs_file}:{line_no}: bad JSON record: {exc}") from exc
            with Image.open(root / record["image_path"]) as im:
                arr = np.asarray(im.convert("RGB"), dtype=np.float32)
            pairs.append(
                ImageTextPair(
                    pair_id=record["pair_id"],
                    image=PreprocessedImage(pixels=arr / 127.5 - 1.0),
                    text=TokenizedText(sentences=record["sentences"]),
                    label=(
                        AbsLabel.from_string(record["label"])
                        if record.get("label")
                        else None
                    ),
                    source=record.get("source", ""),
                    split=Split(record.get("split", "unsplit")),
                )
            )
    return pairs


def update_manifest(path: str | Path, extra: dict) -> None:
    """Merge extra keys into an existing dataset manifest."""
    manifest_path = Path(path) / "manifest.json"
    manifest = {}
    if manifest_path.exists():
        with open(manifest_path, encoding="utf-8") as f:
            manifest = json.load(f)
    manifest.update(extra)
    with open(manifest_path, "w", encoding="utf-8") as out:
        json.dump(manifest, out, indent=2, sort_keys=True)
        out.write("\n")


def split_dataset(
    pairs: list[ImageTextPair], test_per_class: int, seed: int
) -> list[ImageTextPair]:
    """Assign exactly `test_per_class` test pairs per class, rest train.

    Deterministic in `seed`; requires every class to keep at least one
    training member.
    """
    if test_per_class < 1:
        raise ValueError(f"test_per_class must be positive, got {test_per_class}")
    by_label: dict[AbsLabel, list[int]] = {label: [] for label in AbsLabel}
    for i, pair in enumerate(pairs):
        if pair.label is None:
            raise UnlabeledPair(f"pair {pair.pair_id} has no label; cannot split")
        by_label[pair.label].append(i)
    for label, indices in by_label.items():
        if len(indices) <= test_per_class:
            raise InsufficientClassMembers(
                f"class {label.value} has {len(indices)} members; "
                f"need more than {test_per_class}"
            )
    rng = np.random.default_rng(seed)
    for label in AbsLabel:
        indices = by_label[label]
        order = rng.permutation(len(indices))
        for rank, j in enumerate(order):
            pairs[indices[j]].split = Split.TEST if rank < test_per_class else Split.TRAIN
    return pairs

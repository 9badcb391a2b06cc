"""Per-pair external image features.

Lets full-scale users inject features from a real pretrained backbone
instead of the built-in CNN. Storage: `features.bin` holds one
little-endian 32-bit float array of fixed width per pair; `index.json`
maps pair_id to its byte offset and records the width."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DataError, FeatureDimMismatch

BIN_NAME = "features.bin"
INDEX_NAME = "index.json"


def write_feature_file(
    directory: str | Path, features: Mapping[str, np.ndarray]
) -> Path:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    width = None
    offsets: dict[str, int] = {}
    offset = 0
    with open(root / BIN_NAME, "wb") as out:
        for pair_id in sorted(features):
            row = np.asarray(features[pair_id], dtype="<f4").reshape(-1)
            if width is None:
                width = row.shape[0]
            elif row.shape[0] != width:
                raise FeatureDimMismatch(
                    f"{pair_id}: width {row.shape[0]} differs from {width}"
                )
            offsets[pair_id] = offset
            raw = row.tobytes()
            out.write(raw)
            offset += len(raw)
    index = {"width": width or 0, "entries": offsets}
    with open(root / INDEX_NAME, "w", encoding="utf-8") as out:
        json.dump(index, out, indent=2, sort_keys=True)
        out.write("\n")
    return root


class ExternalFeatureFile:
    """Read access to a feature directory."""

    def __init__(self, width: int, entries: dict[str, int], raw: bytes):
        self.width = width
        self._entries = entries
        self._raw = raw

    @classmethod
    def open(cls, directory: str | Path) -> "ExternalFeatureFile":
        root = Path(directory)
        try:
            with open(root / INDEX_NAME, encoding="utf-8") as f:
                index = json.load(f)
            raw = (root / BIN_NAME).read_bytes()
        except FileNotFoundError as exc:
            raise DataError(f"not a feature directory: {root} ({exc})") from exc
        return cls(width=int(index["width"]), entries=index["entries"], raw=raw)

    def __contains__(self, pair_id: str) -> bool:
        return pair_id in self._entries

    def get(self, pair_id: str) -> np.ndarray:
        if pair_id not in self._entries:
            raise DataError(f"no external features for pair {pair_id!r}")
        start = self._entries[pair_id]
        end = start + 4 * self.width
        if end > len(self._raw):
            raise DataError(f"feature file truncated at pair {pair_id!r}")
        return np.frombuffer(self._raw[start:end], dtype="<f4").copy()

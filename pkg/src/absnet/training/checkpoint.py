"""Checkpoint directory format.

A checkpoint is a directory holding `manifest.json` (entry name, shape,
dtype, byte offset), `params.bin` (raw little-endian float arrays in
manifest order), `config.json` (run/train config and iteration),
`history.jsonl` (one metric record per line), and `vocab.tsv` so the
checkpoint is self-contained for prediction."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from ..config import RunConfig, TrainConfig
from ..errors import CorruptCheckpoint
from ..model.classifier import AbstractnessClassifier
from ..model.decoder import ImageDecoder, TextDecoder
from ..model.encoder import ArticleEncoder
from ..model.params import ParameterStore
from ..vocab import Vocabulary, load_vocab, save_vocab

FORMAT_NAME = "absnet-checkpoint"
FORMAT_VERSION = 1

_DTYPES = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}


@dataclass
class Checkpoint:
    params: ParameterStore
    run_config: RunConfig
    train_config: TrainConfig
    iteration: int = 0
    history: list[dict] = field(default_factory=list)
    vocab: Vocabulary | None = None


def _dtype_tag(tensor: torch.Tensor) -> str:
    if tensor.dtype == torch.float32:
        return "<f4"
    if tensor.dtype == torch.float64:
        return "<f8"
    raise CorruptCheckpoint(f"unsupported parameter dtype: {tensor.dtype}")


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> Path:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    with open(root / "params.bin", "wb") as bin_out:
        for name, tensor in ckpt.params.items():
            array = tensor.detach().cpu().numpy()
            tag = _dtype_tag(tensor)
            raw = array.astype(_DTYPES[tag], copy=False).tobytes()
            entries.append(
                {
                    "name": name,
                    "shape": list(array.shape),
                    "dtype": tag,
                    "offset": offset,
                    "nbytes": len(raw),
                }
            )
            bin_out.write(raw)
            offset += len(raw)
    manifest = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "entries": entries}
    with open(root / "manifest.json", "w", encoding="utf-8") as out:
        json.dump(manifest, out, indent=2, sort_keys=True)
        out.write("\n")
    config = {
        "run": ckpt.run_config.to_dict(),
        "train": dataclasses.asdict(ckpt.train_config),
        "iteration": ckpt.iteration,
    }
    with open(root / "config.json", "w", encoding="utf-8") as out:
        json.dump(config, out, indent=2, sort_keys=True)
        out.write("\n")
    with open(root / "history.jsonl", "w", encoding="utf-8") as out:
        for record in ckpt.history:
            out.write(json.dumps(record, sort_keys=True) + "\n")
    if ckpt.vocab is not None:
        save_vocab(ckpt.vocab, root / "vocab.tsv")
    return root


def load_checkpoint(path: str | Path) -> Checkpoint:
    root = Path(path)
    try:
        with open(root / "manifest.json", encoding="utf-8") as f:
            manifest = json.load(f)
        raw = (root / "params.bin").read_bytes()
        with open(root / "config.json", encoding="utf-8") as f:
            config = json.load(f)
    except FileNotFoundError as exc:
        raise CorruptCheckpoint(f"not a checkpoint directory: {root} ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise CorruptCheckpoint(f"{root}: bad checkpoint JSON: {exc}") from exc
    if manifest.get("format") != FORMAT_NAME:
        raise CorruptCheckpoint(f"{root}: unrecognized checkpoint format")

    params = ParameterStore()
    end = 0
    for entry in manifest["entries"]:
        name = entry["name"]
        shape = tuple(entry["shape"])
        if entry["dtype"] not in _DTYPES:
            raise CorruptCheckpoint(f"{name}: unsupported dtype {entry['dtype']!r}")
        dtype = _DTYPES[entry["dtype"]]
        expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if entry["nbytes"] != expected:
            raise CorruptCheckpoint(
                f"{name}: manifest nbytes {entry['nbytes']} does not match "
                f"shape {list(shape)} ({expected} bytes)"
            )
        start, end = entry["offset"], entry["offset"] + entry["nbytes"]
        if end > len(raw):
            raise CorruptCheckpoint(f"{name}: params.bin truncated")
        array = np.frombuffer(raw[start:end], dtype=dtype).reshape(shape).copy()
        params.add(name, torch.from_numpy(array))
    if end != len(raw):
        raise CorruptCheckpoint(f"{root}: params.bin has {len(raw) - end} trailing bytes")

    history = []
    history_path = root / "history.jsonl"
    if history_path.exists():
        with open(history_path, encoding="utf-8") as f:
            history = [json.loads(line) for line in f if line.strip()]
    vocab = None
    vocab_path = root / "vocab.tsv"
    if vocab_path.exists():
        vocab = load_vocab(vocab_path)
    return Checkpoint(
        params=params,
        run_config=RunConfig.from_dict(config["run"]).validate(),
        train_config=TrainConfig(**config["train"]),
        iteration=config.get("iteration", 0),
        history=history,
        vocab=vocab,
    )


def rebuild_modules(
    ckpt: Checkpoint,
    run_config: RunConfig | None = None,
    with_decoders: bool = False,
) -> tuple[dict[str, nn.Module], torch.Tensor]:
    """Reconstruct model modules from a checkpoint and load its values.

    Shape mismatches (e.g. loading into a different encoder config) raise
    CorruptCheckpoint naming the offending entry."""
    rc = run_config or ckpt.run_config
    modules: dict[str, nn.Module] = {}
    if "encoder.text_encoder.word_gru.weight_ih_l0" in ckpt.params:
        modules["encoder"] = ArticleEncoder(rc.encoder_config())
    if with_decoders:
        modules["image_decoder"] = ImageDecoder(rc.decoder_config())
        modules["text_decoder"] = TextDecoder(rc.decoder_config())
    if "classifier.output.weight" in ckpt.params:
        modules["classifier"] = AbstractnessClassifier(
            rc.embedding_dim, hidden=rc.classifier_hidden
        )
    ckpt.params.load_into(modules)
    if "embeddings.table" not in ckpt.params:
        raise CorruptCheckpoint("checkpoint has no embeddings.table entry")
    return modules, ckpt.params["embeddings.table"].to(torch.float32)

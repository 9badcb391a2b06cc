import json

import numpy as np
import pytest

from absnet.corpus import generate_synthetic_corpus, load_dataset, save_dataset, split_dataset
from absnet.corpus.types import AbsLabel, Split
from absnet.errors import InsufficientClassMembers, UnlabeledPair


def test_save_load_round_trip(tmp_path):
    pairs = generate_synthetic_corpus(2, seed=4, size=16)
    save_dataset(pairs, tmp_path / "ds", seed=4, generator_version="1")
    loaded = load_dataset(tmp_path / "ds")
    assert [p.pair_id for p in loaded] == [p.pair_id for p in pairs]
    for original, restored in zip(pairs, loaded):
        assert restored.text.sentences == original.text.sentences
        assert restored.label == original.label
        assert restored.split == original.split
        assert restored.source == original.source
        # PNG is 8-bit: quantization moves values at most one step.
        assert np.abs(restored.image.pixels - original.image.pixels).max() <= 2.0 / 255.0


def test_saved_dataset_loads_byte_identically_after_resave(tmp_path):
    """PNG quantization is exact once values sit on the 8-bit grid."""
    pairs = generate_synthetic_corpus(1, seed=4, size=16)
    save_dataset(pairs, tmp_path / "a")
    first = load_dataset(tmp_path / "a")
    save_dataset(first, tmp_path / "b")
    second = load_dataset(tmp_path / "b")
    for pa, pb in zip(first, second):
        assert pa.image.pixels.tobytes() == pb.image.pixels.tobytes()


def test_manifest_counts(tmp_path):
    pairs = generate_synthetic_corpus(3, seed=1, size=16)
    split_dataset(pairs, test_per_class=1, seed=0)
    save_dataset(pairs, tmp_path / "ds", seed=1, generator_version="1")
    manifest = json.loads((tmp_path / "ds" / "manifest.json").read_text())
    assert manifest["seed"] == 1
    assert manifest["image_size"] == 16
    for label in AbsLabel:
        assert manifest["counts"]["test"][label.value] == 1
        assert manifest["counts"]["train"][label.value] == 2


def test_split_counts_match_paper_protocol():
    """600 balanced pairs with 100 test per class -> 300 test / 300 train."""
    pairs = generate_synthetic_corpus(200, seed=2, size=8)
    split_dataset(pairs, test_per_class=100, seed=9)
    test = [p for p in pairs if p.split == Split.TEST]
    train = [p for p in pairs if p.split == Split.TRAIN]
    assert len(test) == 300 and len(train) == 300
    for label in AbsLabel:
        assert sum(1 for p in test if p.label == label) == 100


def test_split_deterministic_in_seed():
    a = generate_synthetic_corpus(5, seed=3, size=8)
    b = generate_synthetic_corpus(5, seed=3, size=8)
    split_dataset(a, test_per_class=2, seed=42)
    split_dataset(b, test_per_class=2, seed=42)
    assert [p.split for p in a] == [p.split for p in b]


def test_split_changes_with_seed():
    a = generate_synthetic_corpus(20, seed=3, size=8)
    b = generate_synthetic_corpus(20, seed=3, size=8)
    split_dataset(a, test_per_class=10, seed=1)
    split_dataset(b, test_per_class=10, seed=2)
    assert [p.split for p in a] != [p.split for p in b]


def test_split_zero_is_input_validation_not_insufficiency():
    pairs = generate_synthetic_corpus(2, seed=0, size=8)
    with pytest.raises(ValueError):
        split_dataset(pairs, test_per_class=0, seed=0)


def test_split_insufficient_members():
    pairs = generate_synthetic_corpus(2, seed=0, size=8)
    with pytest.raises(InsufficientClassMembers):
        split_dataset(pairs, test_per_class=2, seed=0)


def test_split_rejects_unlabeled():
    pairs = generate_synthetic_corpus(2, seed=0, size=8)
    pairs[0].label = None
    with pytest.raises(UnlabeledPair):
        split_dataset(pairs, test_per_class=1, seed=0)

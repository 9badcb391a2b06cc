import numpy as np
import pytest

from absnet.corpus import generate_synthetic_corpus, generate_synthetic_corpus_with_log
from absnet.corpus.types import AbsLabel


def test_deterministic_in_seed():
    a = generate_synthetic_corpus(2, seed=7, size=24)
    b = generate_synthetic_corpus(2, seed=7, size=24)
    assert [p.pair_id for p in a] == [p.pair_id for p in b]
    for pa, pb in zip(a, b):
        assert pa.image.pixels.tobytes() == pb.image.pixels.tobytes()
        assert pa.text.sentences == pb.text.sentences
        assert pa.label == pb.label


def test_different_seeds_differ():
    a = generate_synthetic_corpus(2, seed=7, size=24)
    b = generate_synthetic_corpus(2, seed=8, size=24)
    assert any(
        pa.image.pixels.tobytes() != pb.image.pixels.tobytes() for pa, pb in zip(a, b)
    )


def test_cardinality_and_exact_balance():
    pairs = generate_synthetic_corpus(5, seed=3, size=16)
    assert len(pairs) == 15
    for label in AbsLabel:
        assert sum(1 for p in pairs if p.label == label) == 5


def test_equal_class_text_enumerates_drawn_shapes():
    """Token multiset contains every drawn shape name (and color)."""
    pairs, records = generate_synthetic_corpus_with_log(6, seed=11, size=24)
    by_id = {p.pair_id: p for p in pairs}
    checked = 0
    for record in records:
        if record.label is not AbsLabel.EQUAL_ABSTRACTNESS:
            continue
        tokens = by_id[record.pair_id].text.all_tokens()
        for name in set(record.shape_names):
            assert tokens.count(name) >= record.shape_names.count(name)
        for name in set(record.color_names):
            assert tokens.count(name) >= record.color_names.count(name)
        checked += 1
    assert checked == 6


def test_detailed_image_class_has_short_generic_text():
    pairs = generate_synthetic_corpus(4, seed=2, size=24)
    for pair in pairs:
        if pair.label is AbsLabel.IMAGE_LESS_ABSTRACT:
            assert len(pair.text.sentences) == 1


def test_schematic_class_has_multi_sentence_text_and_monochrome_image():
    pairs, records = generate_synthetic_corpus_with_log(4, seed=9, size=24)
    by_id = {p.pair_id: p for p in pairs}
    for record in records:
        if record.label is not AbsLabel.IMAGE_MORE_ABSTRACT:
            continue
        pair = by_id[record.pair_id]
        assert len(pair.text.sentences) >= 4
        # Monochrome drawing: all channels equal everywhere.
        px = pair.image.pixels
        assert np.array_equal(px[..., 0], px[..., 1])
        assert np.array_equal(px[..., 1], px[..., 2])


def test_images_within_range_and_size():
    for pair in generate_synthetic_corpus(2, seed=1, size=20):
        assert pair.image.pixels.shape == (20, 20, 3)
        assert pair.image.pixels.min() >= -1.0
        assert pair.image.pixels.max() <= 1.0


def test_nonpositive_count_rejected():
    with pytest.raises(ValueError):
        generate_synthetic_corpus(0, seed=1)

import numpy as np
import pytest

from absnet.corpus.types import TokenizedText
from absnet.errors import DimensionMismatch, EmptyCorpus, MalformedVectorFile
from absnet.vocab import (
    PAD_TOKEN,
    UNK_TOKEN,
    Vocabulary,
    build_vocab,
    decode_ids,
    encode_tokens,
    init_random_embeddings,
    load_embeddings,
    load_vocab,
    save_vocab,
)


def _text(*sentences):
    return TokenizedText(sentences=[s.split() for s in sentences])


def brute_force_selection(texts, max_size):
    """Independent frequency recount: dict counting + stable sort."""
    counts = {}
    for text in texts:
        for sentence in text.sentences:
            for token in sentence:
                counts[token] = counts.get(token, 0) + 1
    ranked = sorted(counts, key=lambda t: (-counts[t], t))[:max_size]
    total = sum(counts.values())
    retained = sum(counts[t] for t in ranked)
    return ranked, retained / total


def _zipf_corpus(rng, n_tokens, n_types=400):
    tokens = [f"t{i:04d}" for i in range(n_types)]
    weights = 1.0 / np.arange(1, n_types + 1)
    weights /= weights.sum()
    drawn = rng.choice(n_types, size=n_tokens, p=weights)
    sentences = [
        [tokens[j] for j in drawn[k : k + 12]] for k in range(0, n_tokens, 12)
    ]
    return [TokenizedText(sentences=[s]) for s in sentences if s]


class TestBuildVocab:
    def test_tiny_example(self):
        vocab = build_vocab([_text("a a b")], max_size=1)
        assert vocab.tokens == ["a"]
        assert vocab.coverage == pytest.approx(2 / 3)

    def test_lexicographic_tie_break(self):
        vocab = build_vocab([_text("z q m z q m")], max_size=2)
        assert vocab.tokens == ["m", "q"]

    def test_matches_brute_force_on_zipf_corpora(self):
        rng = np.random.default_rng(0)
        for trial in range(5):
            texts = _zipf_corpus(rng, n_tokens=5000)
            max_size = int(rng.integers(10, 300))
            vocab = build_vocab(texts, max_size=max_size)
            expected_tokens, expected_coverage = brute_force_selection(texts, max_size)
            assert vocab.tokens == expected_tokens
            assert vocab.coverage == pytest.approx(expected_coverage, abs=0)

    def test_coverage_non_decreasing_in_size(self):
        rng = np.random.default_rng(1)
        texts = _zipf_corpus(rng, n_tokens=3000)
        coverages = [
            build_vocab(texts, max_size=k).coverage for k in (5, 20, 100, 400)
        ]
        assert coverages == sorted(coverages)
        assert all(0.0 <= c <= 1.0 for c in coverages)

    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpus):
            build_vocab([TokenizedText(sentences=[])], max_size=10)


class TestEncodeTokens:
    def test_all_in_vocab_has_no_unk(self):
        vocab = build_vocab([_text("cat sat mat")], max_size=10)
        ids, mask = encode_tokens(_text("cat mat"), vocab)
        assert ids.shape == (30, 50) and mask.shape == (30, 50)
        assert not np.any(ids[mask] == vocab.unk_id)
        assert mask.sum() == 2

    def test_empty_text_all_pad(self):
        vocab = build_vocab([_text("a")], max_size=10)
        ids, mask = encode_tokens(TokenizedText(sentences=[]), vocab)
        assert np.all(ids == vocab.pad_id)
        assert not mask.any()

    def test_single_oov_token_maps_to_unk(self):
        vocab = build_vocab([_text("known words here")], max_size=10)
        ids, mask = encode_tokens(_text("known mystery here"), vocab)
        unk_positions = (ids == vocab.unk_id) & mask
        assert unk_positions.sum() == 1
        assert unk_positions[0, 1]

    def test_round_trip_identity_on_in_vocab_tokens(self):
        vocab = build_vocab([_text("alpha beta gamma", "delta epsilon")], max_size=10)
        text = _text("alpha gamma", "delta")
        ids, mask = encode_tokens(text, vocab)
        assert decode_ids(ids, mask, vocab).sentences == text.sentences


class TestEmbeddings:
    def test_random_init_deterministic(self, tiny_vocab):
        a = init_random_embeddings(tiny_vocab, dimension=4, seed=3)
        b = init_random_embeddings(tiny_vocab, dimension=4, seed=3)
        assert np.array_equal(a.vectors, b.vectors)

    def test_pad_row_is_zero(self, tiny_vocab):
        table = init_random_embeddings(tiny_vocab, dimension=4, seed=3)
        assert np.all(table.vectors[tiny_vocab.pad_id] == 0.0)

    def test_shape_includes_specials(self):
        vocab = Vocabulary(tokens=["a", "b", "c"], counts={"a": 1, "b": 1, "c": 1})
        table = init_random_embeddings(vocab, dimension=4, seed=0)
        assert table.vectors.shape == (5, 4)

    def test_rows_within_init_range(self, tiny_vocab):
        table = init_random_embeddings(tiny_vocab, dimension=4, seed=3)
        assert np.abs(table.vectors).max() <= 0.1

    def test_self_cosine_is_one_for_nonzero_rows(self, tiny_vocab):
        table = init_random_embeddings(tiny_vocab, dimension=16, seed=5)
        for i in range(tiny_vocab.unk_id + 1):
            row = table.vectors[i]
            cos = float(row @ row / (np.linalg.norm(row) ** 2))
            assert abs(cos - 1.0) <= 1e-6


class TestLoadEmbeddings:
    def _vocab(self):
        return Vocabulary(tokens=["cat", "dog"], counts={"cat": 2, "dog": 1})

    def test_present_token_uses_file_row(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("1 3\ncat 1.0 2.0 3.0\n")
        table = load_embeddings(path, self._vocab(), dimension=3, seed=0)
        assert table.vectors[0].tolist() == [1.0, 2.0, 3.0]

    def test_missing_token_row_deterministic(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("1 3\ncat 1.0 2.0 3.0\n")
        a = load_embeddings(path, self._vocab(), dimension=3, seed=7)
        b = load_embeddings(path, self._vocab(), dimension=3, seed=7)
        assert np.array_equal(a.vectors, b.vectors)
        assert np.abs(a.vectors[1]).max() <= 0.1  # dog drawn from the rng

    def test_wrong_value_count_rejected(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("2 300\ncat " + " ".join(["0.1"] * 299) + "\n")
        with pytest.raises(MalformedVectorFile):
            load_embeddings(path, self._vocab(), dimension=300, seed=0)

    def test_dimension_mismatch(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("1 4\ncat 1 2 3 4\n")
        with pytest.raises(DimensionMismatch):
            load_embeddings(path, self._vocab(), dimension=3, seed=0)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("not a header\n")
        with pytest.raises(MalformedVectorFile):
            load_embeddings(path, self._vocab(), dimension=3, seed=0)

    def test_declared_count_mismatch(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("2 3\ncat 1 2 3\n")
        with pytest.raises(MalformedVectorFile):
            load_embeddings(path, self._vocab(), dimension=3, seed=0)

    def test_pad_row_zero(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("1 3\ncat 1.0 2.0 3.0\n")
        vocab = self._vocab()
        table = load_embeddings(path, vocab, dimension=3, seed=0)
        assert np.all(table.vectors[vocab.pad_id] == 0.0)


def test_vocab_tsv_round_trip(tmp_path, tiny_vocab):
    save_vocab(tiny_vocab, tmp_path / "vocab.tsv")
    restored = load_vocab(tmp_path / "vocab.tsv")
    assert restored.tokens == tiny_vocab.tokens
    assert restored.counts == tiny_vocab.counts


def test_special_ids_follow_tokens(tiny_vocab):
    assert tiny_vocab.unk_id == len(tiny_vocab.tokens)
    assert tiny_vocab.pad_id == len(tiny_vocab.tokens) + 1
    assert tiny_vocab.token_of(tiny_vocab.unk_id) == UNK_TOKEN
    assert tiny_vocab.token_of(tiny_vocab.pad_id) == PAD_TOKEN

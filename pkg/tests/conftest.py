from pathlib import Path

import pytest

from absnet.config import make_run_config
from absnet.corpus import generate_synthetic_corpus
from absnet.vocab import build_vocab, init_random_embeddings

FIXTURE_DIR = Path(__file__).parent / "fixtures"

# Small but structurally complete dimensions for model-level tests.
TINY = dict(
    image_size=20,
    seed_side=2,
    d_img=16,
    d_txt=16,
    embedding_dim=32,
    attention_dim=8,
    word_embed_dim=8,
    sentence_hidden=16,
    word_hidden=16,
    seed_channels=8,
    decoder_channels=(8, 6, 4, 3),
    vocab_max=200,
    classifier_hidden=(16, 16),
    batch_size=4,
    log_interval=5,
    checkpoint_interval=1000,
)


@pytest.fixture(scope="session")
def fixture_dir():
    return FIXTURE_DIR


@pytest.fixture
def tiny_config():
    return make_run_config("desk", **TINY)


@pytest.fixture(scope="session")
def tiny_corpus():
    return generate_synthetic_corpus(4, seed=5, size=20)


@pytest.fixture(scope="session")
def tiny_vocab(tiny_corpus):
    return build_vocab((p.text for p in tiny_corpus), max_size=200)


@pytest.fixture(scope="session")
def tiny_embeddings(tiny_vocab):
    return init_random_embeddings(tiny_vocab, dimension=8, seed=11)

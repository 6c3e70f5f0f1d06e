"""Shared fixtures. Thread pinning must happen before numpy loads: on the
small runners this suite targets, single-threaded BLAS is both faster and
run-to-run deterministic."""

import os

for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import pytest

from swapbert.corpus import CleanCorpus
from swapbert.datagen import DataGenParams, create_instances
from swapbert.model import ModelConfig
from swapbert.datagen import documents_from_corpus
from swapbert.synthetic import SyntheticLanguageSpec, gen_synthetic_corpus
from swapbert.wordpiece import TokenizerConfig, train_vocab

TOY_MODEL = ModelConfig(
    num_layers=2,
    hidden_size=32,
    num_heads=2,
    vocab_size=128,
    max_positions=64,
    dropout_prob=0.0,
)


@pytest.fixture(scope="session")
def toy_config() -> ModelConfig:
    return TOY_MODEL


@pytest.fixture(scope="session")
def small_corpus() -> CleanCorpus:
    spec = SyntheticLanguageSpec(name="fixture", word_types=60, sentence_count=400)
    return gen_synthetic_corpus(spec, seed=11)


@pytest.fixture(scope="session")
def small_tokenizer_cfg() -> TokenizerConfig:
    return TokenizerConfig(target_size=TOY_MODEL.vocab_size, min_frequency=1)


@pytest.fixture(scope="session")
def small_vocab(small_corpus, small_tokenizer_cfg):
    return train_vocab(small_corpus, small_tokenizer_cfg)


@pytest.fixture(scope="session")
def small_documents(small_corpus, small_vocab, small_tokenizer_cfg):
    return documents_from_corpus(small_corpus, small_vocab, small_tokenizer_cfg)


@pytest.fixture(scope="session")
def small_instances(small_documents, small_vocab):
    params = DataGenParams(
        max_seq_length=40,
        max_predictions_per_seq=6,
        dupe_factor=1,
        seed=5,
    )
    return create_instances(small_documents, small_vocab, params)

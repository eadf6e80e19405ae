"""Shared fixtures: a tiny trained model bundle reused across retrieval and
service tests (session scope keeps the suite fast)."""

import warnings

import pytest

from clamp.ablation import make_bundle
from clamp.contrastive import ContrastiveConfig, train_clamp
from clamp.model import ModelConfig, OptimizerConfig
from clamp.retrieval import build_index
from clamp.synthetic import make_toy_corpus

TINY_CFG = ModelConfig(hidden_dim=32, encoder_layers=1, decoder_layers=1, heads=2, max_patches=64)


@pytest.fixture(scope="session")
def toy_pairs():
    return make_toy_corpus(24, seed=11)


@pytest.fixture(scope="session")
def tiny_bundle(toy_pairs):
    """A briefly trained model: functional, deterministic, not accurate."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model, vocab, _ = train_clamp(
            toy_pairs,
            TINY_CFG,
            OptimizerConfig(lr=2e-3, epochs=3, beta2=0.98),
            ContrastiveConfig(batch_size=8),
            max_patches=64,
            seed=0,
        )
    return make_bundle(model, vocab, 64)


@pytest.fixture(scope="session")
def tiny_index(toy_pairs, tiny_bundle):
    return build_index(toy_pairs, tiny_bundle)

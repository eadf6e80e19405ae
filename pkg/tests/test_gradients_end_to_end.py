"""Finite-difference verification through the full training losses at
64-bit precision."""

import numpy as np
import torch

from clamp.contrastive import ContrastiveConfig, build_clamp_model, collate_music, collate_texts, contrastive_loss
from clamp.m3 import NoiseConfig, apply_noise, build_m3_model, m3_loss
from clamp.m3 import sequences_for_pairs
from clamp.model import ModelConfig, grad_check
from clamp.synthetic import make_toy_corpus
from clamp.textproc import TextVocabulary

MICRO = ModelConfig(hidden_dim=16, encoder_layers=1, decoder_layers=1, heads=2, max_patches=32)


def test_m3_loss_gradients_match_finite_differences():
    pairs = make_toy_corpus(2, seed=9)
    seq = sequences_for_pairs(pairs, 32)[0]
    noised = apply_noise(seq, NoiseConfig(ratio=0.5), np.random.default_rng(4))
    model = build_m3_model(MICRO, seed=0).double()
    params = dict(model.named_parameters())
    err = grad_check(lambda: m3_loss(model, noised), params, max_coords=100, seed=1)
    assert err < 1e-3


def test_contrastive_training_loss_gradients_match_finite_differences():
    pairs = make_toy_corpus(3, seed=10)
    vocab = TextVocabulary.build(t for p in pairs for t in p.texts)
    model = build_clamp_model(MICRO, len(vocab), seed=2).double()
    sequences = sequences_for_pairs(pairs, 32)
    mtokens, mmask = collate_music(sequences)
    tids, tmask = collate_texts(vocab, [" ".join(p.texts) for p in pairs])
    mmask, tmask = mmask.double(), tmask.double()
    cfg = ContrastiveConfig(temperature=0.2, batch_size=3)

    def loss_fn():
        return contrastive_loss(model.music(mtokens, mmask).pooled, model.text(tids, tmask).pooled, cfg)

    err = grad_check(loss_fn, dict(model.named_parameters()), max_coords=100, seed=2)
    assert err < 1e-3

"""Contrastive objective: closed forms, invariances, gradients, training."""

import math

import numpy as np
import pytest
import torch

from clamp.contrastive import (
    EQ1,
    INFONCE,
    ContrastiveConfig,
    apply_m3_initialization,
    build_clamp_model,
    contrastive_loss,
    contrastive_loss_from_logits,
    load_clamp_checkpoint,
    save_clamp_checkpoint,
    train_clamp,
)
from clamp.errors import BatchTooSmallError, ConfigMismatchError, NonFiniteInputError
from clamp.m3 import NoiseConfig, pretrain_m3
from clamp.model import ModelConfig, OptimizerConfig, grad_check
from clamp.synthetic import make_toy_corpus
from clamp.textproc import TextDropoutConfig, TextVocabulary

TINY = ModelConfig(hidden_dim=32, encoder_layers=1, decoder_layers=1, heads=2, max_patches=64)


def unit_rows(n, d, seed=0):
    rng = np.random.default_rng(seed)
    x = torch.from_numpy(rng.standard_normal((n, d)))
    return x / x.norm(dim=-1, keepdim=True)


class TestClosedForms:
    @pytest.mark.parametrize("n", [2, 4, 8])
    def test_uniform_similarities_eq1(self, n):
        f = torch.ones(n, 6, dtype=torch.float64)
        cfg = ContrastiveConfig(temperature=1.0, variant=EQ1)
        assert float(contrastive_loss(f, f.clone(), cfg)) == pytest.approx(math.log(n - 1), abs=1e-9)

    @pytest.mark.parametrize("n", [2, 4, 8])
    def test_uniform_similarities_infonce(self, n):
        f = torch.ones(n, 6, dtype=torch.float64)
        cfg = ContrastiveConfig(temperature=1.0, variant=INFONCE)
        assert float(contrastive_loss(f, f.clone(), cfg)) == pytest.approx(math.log(n), abs=1e-9)

    def test_orthogonal_n2_eq1_is_minus_one(self):
        # four-term hand computation: every log term equals 1
        f = torch.eye(2, dtype=torch.float64)
        cfg = ContrastiveConfig(temperature=1.0, variant=EQ1, normalize=False)
        assert float(contrastive_loss(f, f.clone(), cfg)) == pytest.approx(-1.0, abs=1e-9)

    def test_temperature_scales_logits(self):
        logits = torch.tensor([[2.0, 0.0], [0.0, 2.0]], dtype=torch.float64)
        a = contrastive_loss_from_logits(logits, EQ1)
        f = torch.eye(2, dtype=torch.float64)
        cfg = ContrastiveConfig(temperature=0.5, variant=EQ1, normalize=False)
        assert float(contrastive_loss(f, f.clone(), cfg)) == pytest.approx(float(a))


class TestInvariances:
    def test_music_text_symmetry(self):
        m, t = unit_rows(5, 8, 1), unit_rows(5, 8, 2)
        cfg = ContrastiveConfig(variant=EQ1)
        assert float(contrastive_loss(m, t, cfg)) == pytest.approx(float(contrastive_loss(t, m, cfg)))

    def test_common_permutation_invariance(self):
        m, t = unit_rows(6, 8, 3), unit_rows(6, 8, 4)
        perm = torch.tensor([4, 2, 0, 5, 1, 3])
        for variant in (EQ1, INFONCE):
            cfg = ContrastiveConfig(variant=variant)
            a = float(contrastive_loss(m, t, cfg))
            b = float(contrastive_loss(m[perm], t[perm], cfg))
            assert a == pytest.approx(b, rel=1e-9)

    @pytest.mark.parametrize("variant", [EQ1, INFONCE])
    def test_diagonal_monotonicity(self, variant):
        rng = np.random.default_rng(0)
        logits = torch.from_numpy(rng.standard_normal((5, 5)))
        lower = contrastive_loss_from_logits(logits, variant)
        boosted = logits + torch.eye(5) * 0.5
        assert float(contrastive_loss_from_logits(boosted, variant)) < float(lower)

    def test_infonce_nonneg_eq1_can_be_negative(self):
        strong = torch.eye(4, dtype=torch.float64) * 20
        assert float(contrastive_loss_from_logits(strong, INFONCE)) >= 0
        assert float(contrastive_loss_from_logits(strong, EQ1)) < 0


class TestGradients:
    @pytest.mark.parametrize("variant", [EQ1, INFONCE])
    def test_matches_finite_differences(self, variant):
        rng = np.random.default_rng(7)
        m = torch.tensor(rng.standard_normal((4, 6)), requires_grad=True)
        t = torch.tensor(rng.standard_normal((4, 6)), requires_grad=True)
        cfg = ContrastiveConfig(temperature=0.2, variant=variant)
        err = grad_check(lambda: contrastive_loss(m, t, cfg), {"m": m, "t": t})
        assert err < 1e-3


class TestValidation:
    def test_batch_too_small(self):
        f = torch.ones(1, 4)
        with pytest.raises(BatchTooSmallError):
            contrastive_loss(f, f.clone(), ContrastiveConfig())

    def test_non_finite_rejected(self):
        f = torch.ones(3, 4)
        g = f.clone()
        g[0, 0] = float("nan")
        with pytest.raises(NonFiniteInputError):
            contrastive_loss(f, g, ContrastiveConfig())

    def test_shape_mismatch(self):
        with pytest.raises(NonFiniteInputError):
            contrastive_loss(torch.ones(3, 4), torch.ones(3, 5), ContrastiveConfig())

    def test_bad_config(self):
        with pytest.raises(ValueError):
            ContrastiveConfig(temperature=0.0)
        with pytest.raises(ValueError):
            ContrastiveConfig(variant="other")


class TestTrainClamp:
    def test_zero_epochs_returns_init(self):
        pairs = make_toy_corpus(8, seed=2)
        vocab = TextVocabulary.build(t for p in pairs for t in p.texts)
        model, _, history = train_clamp(
            pairs, TINY, OptimizerConfig(epochs=0), ContrastiveConfig(batch_size=4), seed=9, vocab=vocab
        )
        reference = build_clamp_model(TINY, len(vocab), seed=9)
        assert history == []
        for a, b in zip(model.parameters(), reference.parameters()):
            assert torch.equal(a, b)

    def test_m3_init_copies_encoder_and_discards_decoder(self, tmp_path):
        pairs = make_toy_corpus(6, seed=1)
        m3_path = tmp_path / "m3.clmp"
        m3_model, _ = pretrain_m3(pairs, TINY, OptimizerConfig(lr=1e-3, epochs=1), NoiseConfig(),
                                  batch_size=4, seed=0, out_path=m3_path)
        vocab = TextVocabulary.build(t for p in pairs for t in p.texts)
        model = build_clamp_model(TINY, len(vocab), seed=1)
        apply_m3_initialization(model, m3_path)
        m3_state = m3_model.state_dict()
        for name, value in model.music.state_dict().items():
            assert torch.equal(value, m3_state[f"encoder.{name}"])

    def test_m3_init_geometry_mismatch(self, tmp_path):
        pairs = make_toy_corpus(4, seed=1)
        m3_path = tmp_path / "m3.clmp"
        pretrain_m3(pairs, TINY, OptimizerConfig(epochs=0), NoiseConfig(), seed=0, out_path=m3_path)
        other = ModelConfig(hidden_dim=16, encoder_layers=1, decoder_layers=1, heads=2, max_patches=64)
        model = build_clamp_model(other, 50)
        with pytest.raises(ConfigMismatchError):
            apply_m3_initialization(model, m3_path)

    def test_small_corpus_warns_and_trains(self):
        pairs = make_toy_corpus(4, seed=6)
        with pytest.warns(UserWarning, match="smaller than batch size"):
            _, _, history = train_clamp(
                pairs, TINY, OptimizerConfig(lr=1e-3, epochs=1), ContrastiveConfig(batch_size=32), seed=0
            )
        assert len(history) == 1

    def test_determinism(self):
        pairs = make_toy_corpus(8, seed=2)
        runs = []
        for _ in range(2):
            model, _, history = train_clamp(
                pairs, TINY, OptimizerConfig(lr=1e-3, epochs=2), ContrastiveConfig(batch_size=4), seed=3
            )
            runs.append((history, [p.detach().clone() for p in model.parameters()]))
        assert runs[0][0] == runs[1][0]
        for a, b in zip(runs[0][1], runs[1][1]):
            assert torch.equal(a, b)

    def test_checkpoint_round_trip(self, tmp_path):
        pairs = make_toy_corpus(6, seed=4)
        model, vocab, _ = train_clamp(
            pairs, TINY, OptimizerConfig(lr=1e-3, epochs=1), ContrastiveConfig(batch_size=4), seed=0
        )
        path = tmp_path / "clamp.clmp"
        save_clamp_checkpoint(model, vocab, ContrastiveConfig(batch_size=4), 64, path)
        bundle = load_clamp_checkpoint(path)
        assert bundle.config["kind"] == "clamp"
        for name, value in bundle.model.state_dict().items():
            assert torch.allclose(value, model.state_dict()[name], atol=0)

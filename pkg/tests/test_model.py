"""Neural core: embeddings, encoder stack, decoder causality, AdamW, and the
finite-difference gradient harness."""

import numpy as np
import pytest
import torch

from clamp.errors import EmptyPoolError, NonFiniteGradientError, SequenceTooLongError
from clamp.model import (
    AdamWState,
    ClampModel,
    M3Model,
    ModelConfig,
    MusicEncoder,
    OptimizerConfig,
    PatchDecoder,
    adamw_step,
    grad_check,
    init_parameters,
)
from clamp.model.optim import cosine_lr
from clamp.patches import PATCH_LEN, VOCAB_SIZE, encode_patch

TINY = ModelConfig(hidden_dim=16, encoder_layers=2, decoder_layers=1, heads=2, max_patches=32)


def make_encoder(cfg=TINY, seed=0) -> MusicEncoder:
    enc = MusicEncoder(cfg)
    init_parameters(enc, cfg.init_std, torch.Generator().manual_seed(seed))
    return enc


def random_tokens(batch, patches, seed=0):
    rng = np.random.default_rng(seed)
    return torch.from_numpy(rng.integers(0, VOCAB_SIZE, (batch, patches, PATCH_LEN)).astype(np.int64))


class TestPatchEmbedding:
    def test_projection_matches_flattened_matmul(self):
        # matrix-multiply oracle: one-hot flatten @ table == indexed sum
        enc = make_encoder()
        tokens = random_tokens(1, 3, seed=1)
        out = enc.patch_embed(tokens)
        table = enc.patch_embed.table.weight.detach().numpy()
        pos = enc.patch_embed.position.weight.detach().numpy()
        bias = enc.patch_embed.bias.detach().numpy()
        for p in range(3):
            one_hot = np.zeros((PATCH_LEN * VOCAB_SIZE,), dtype=np.float64)
            for slot, tok in enumerate(tokens[0, p].tolist()):
                one_hot[slot * VOCAB_SIZE + tok] = 1.0
            expected = one_hot @ table + bias + pos[p]
            np.testing.assert_allclose(out[0, p].detach().numpy(), expected, rtol=1e-5, atol=1e-6)

    def test_identical_patches_differ_only_by_position(self):
        enc = make_encoder()
        row = torch.from_numpy(encode_patch("CDEF |").astype(np.int64))
        tokens = torch.stack([row, row]).unsqueeze(0)
        out = enc.patch_embed(tokens)
        pos = enc.patch_embed.position.weight
        np.testing.assert_allclose(
            (out[0, 0] - out[0, 1]).detach().numpy(),
            (pos[0] - pos[1]).detach().numpy(),
            rtol=1e-5,
            atol=1e-6,
        )

    def test_sequence_too_long(self):
        enc = make_encoder()
        with pytest.raises(SequenceTooLongError):
            enc.patch_embed(random_tokens(1, 33))


class TestEncoderForward:
    def test_pooled_unit_norm(self):
        enc = make_encoder()
        tokens = random_tokens(2, 5)
        mask = torch.ones(2, 5)
        out = enc(tokens, mask)
        norms = out.pooled.norm(dim=-1)
        assert torch.allclose(norms, torch.ones(2), atol=1e-6)

    def test_single_patch_pool_equals_hidden(self):
        enc = make_encoder()
        tokens = random_tokens(1, 1)
        out = enc(tokens, torch.ones(1, 1))
        normalized = out.hidden[0, 0] / out.hidden[0, 0].norm()
        assert torch.allclose(out.pooled[0], normalized, atol=1e-6)

    def test_zero_layer_stack_is_identity(self):
        cfg = ModelConfig(hidden_dim=16, encoder_layers=0, decoder_layers=1, heads=2, max_patches=32)
        enc = make_encoder(cfg)
        tokens = random_tokens(1, 4)
        mask = torch.ones(1, 4)
        out = enc(tokens, mask)
        embeddings = enc.patch_embed(tokens)
        pooled = embeddings.mean(dim=1)
        pooled = pooled / pooled.norm(dim=-1, keepdim=True)
        assert torch.allclose(out.pooled, pooled, atol=1e-6)

    def test_masked_positions_excluded_from_pool(self):
        enc = make_encoder().double()
        tokens = random_tokens(1, 4)
        mask = torch.tensor([[1.0, 1.0, 0.0, 0.0]], dtype=torch.float64)
        out_masked = enc(tokens, mask)
        out_short = enc(tokens[:, :2], torch.ones(1, 2, dtype=torch.float64))
        assert torch.allclose(out_masked.pooled, out_short.pooled, atol=1e-10)

    def test_all_masked_raises(self):
        enc = make_encoder()
        with pytest.raises(EmptyPoolError):
            enc(random_tokens(1, 3), torch.zeros(1, 3))

    def test_permutation_with_positions_preserves_pool(self):
        # permutation-equivariance oracle: permute patches AND their position
        # indices; attention plus mean pooling must not care
        cfg = ModelConfig(hidden_dim=16, encoder_layers=2, decoder_layers=1, heads=2, max_patches=32)
        enc = make_encoder(cfg).double()
        tokens = random_tokens(1, 5, seed=3)
        mask = torch.ones(1, 5, dtype=torch.float64)
        base_emb = enc.patch_embed(tokens).detach()
        perm = [3, 1, 4, 0, 2]
        permuted_emb = base_emb[:, perm]

        def pool_from(embeddings):
            hidden, _ = enc.stack(embeddings, key_mask=mask)
            pooled = hidden.mean(dim=1)
            return pooled / pooled.norm(dim=-1, keepdim=True)

        a = pool_from(base_emb)
        b = pool_from(permuted_emb)
        assert torch.allclose(a, b, atol=1e-10)

    def test_attention_rows_sum_to_one(self):
        enc = make_encoder()
        tokens = random_tokens(2, 6)
        mask = torch.ones(2, 6)
        mask[1, 4:] = 0
        _, weights = enc(tokens, mask, need_weights=True)
        for w in weights:
            sums = w.sum(dim=-1)
            assert torch.allclose(sums, torch.ones_like(sums), atol=1e-6)


class TestDecoder:
    def _decoder(self, seed=0):
        dec = PatchDecoder(TINY)
        init_parameters(dec, TINY.init_std, torch.Generator().manual_seed(seed))
        return dec

    def test_causality(self):
        dec = self._decoder()
        feature = torch.randn(1, TINY.hidden_dim, generator=torch.Generator().manual_seed(1))
        targets = random_tokens(1, 1)[:, 0]
        logits = dec(feature, targets)
        t = 20
        altered = targets.clone()
        altered[0, t + 1 :] = (altered[0, t + 1 :] + 7) % VOCAB_SIZE
        logits2 = dec(feature, altered)
        assert torch.equal(logits[0, : t + 1], logits2[0, : t + 1])

    def test_finite_logits_untrained(self):
        dec = self._decoder()
        feature = torch.randn(2, TINY.hidden_dim)
        logits = dec(feature, random_tokens(1, 2)[0])
        assert torch.isfinite(logits).all()
        assert logits.shape == (2, PATCH_LEN, VOCAB_SIZE)

    def test_memorize_one_patch(self):
        # memorization oracle: a decoder overfit to a single patch must
        # reproduce it by argmax decoding
        torch.manual_seed(0)
        dec = self._decoder()
        feature = torch.randn(1, TINY.hidden_dim, generator=torch.Generator().manual_seed(2))
        target = torch.from_numpy(encode_patch("CDEF GABc |").astype(np.int64)).unsqueeze(0)
        state = AdamWState(dict(dec.named_parameters()))
        cfg = OptimizerConfig(lr=5e-3, weight_decay=0.0)
        for _ in range(300):
            logits = dec(feature, target)
            loss = torch.nn.functional.cross_entropy(logits.view(-1, VOCAB_SIZE), target.view(-1))
            loss.backward()
            params = dict(dec.named_parameters())
            adamw_step(params, {k: p.grad for k, p in params.items()}, state, cfg)
            dec.zero_grad()
        assert (dec(feature, target).argmax(dim=-1) == target).all()


class TestAdamW:
    def test_zero_grad_no_decay_is_identity(self):
        p = torch.ones(3)
        params = {"w": p}
        state = AdamWState(params)
        adamw_step(params, {"w": torch.zeros(3)}, state, OptimizerConfig(lr=0.1, weight_decay=0.0))
        assert torch.allclose(p, torch.ones(3))

    def test_zero_grad_decay_scales(self):
        p = torch.full((4,), 2.0)
        params = {"w": p}
        state = AdamWState(params)
        adamw_step(params, {"w": torch.zeros(4)}, state, OptimizerConfig(lr=0.1, weight_decay=0.01))
        assert torch.allclose(p, torch.full((4,), 2.0 * (1 - 0.001)))

    def test_quadratic_bowl_converges(self):
        # scalar optimization oracle: f(w) = w^2
        w = torch.tensor([1.0], requires_grad=True)
        params = {"w": w}
        state = AdamWState(params)
        cfg = OptimizerConfig(lr=0.05, weight_decay=0.0)
        for _ in range(500):
            loss = (w**2).sum()
            grad = torch.autograd.grad(loss, w)[0]
            adamw_step(params, {"w": grad}, state, cfg)
        assert abs(w.item()) < 1e-3

    def test_non_finite_gradient_rejected(self):
        p = torch.ones(2)
        params = {"w": p}
        state = AdamWState(params)
        with pytest.raises(NonFiniteGradientError):
            adamw_step(params, {"w": torch.tensor([float("nan"), 0.0])}, state, OptimizerConfig())

    def test_cosine_schedule_shape(self):
        lrs = [cosine_lr(s, 100, 1.0) for s in range(100)]
        assert lrs[0] < lrs[4] == max(lrs)
        assert lrs[-1] < 0.01


class TestGradCheck:
    def test_linear_function_exact(self):
        w = torch.randn(5, dtype=torch.float64, requires_grad=True)
        c = torch.randn(5, dtype=torch.float64)
        err = grad_check(lambda: (w * c).sum(), {"w": w})
        assert err < 1e-9

    def test_corrupted_gradient_detected(self):
        # harness sensitivity check: a custom op with a wrong backward
        class BadSquare(torch.autograd.Function):
            @staticmethod
            def forward(ctx, x):
                ctx.save_for_backward(x)
                return x**2

            @staticmethod
            def backward(ctx, grad):
                (x,) = ctx.saved_tensors
                return grad * 3.0 * x  # should be 2x

        w = torch.randn(4, dtype=torch.float64, requires_grad=True) + 1.0
        err = grad_check(lambda: BadSquare.apply(w).sum(), {"w": w})
        assert err > 1e-1

    def test_tiny_transformer_end_to_end(self):
        cfg = ModelConfig(hidden_dim=16, encoder_layers=2, decoder_layers=1, heads=2, max_patches=8)
        enc = make_encoder(cfg).double()
        tokens = random_tokens(1, 4, seed=5)
        mask = torch.ones(1, 4, dtype=torch.float64)
        params = dict(enc.named_parameters())

        def loss_fn():
            out = enc(tokens, mask)
            return (out.pooled * torch.arange(16, dtype=torch.float64)).sum()

        err = grad_check(loss_fn, params, max_coords=120, seed=0)
        assert err < 1e-3


class TestModelComposition:
    def test_m3_and_clamp_share_encoder_geometry(self):
        m3 = M3Model(TINY)
        clamp_model = ClampModel(TINY, text_vocab_size=50)
        m3_keys = {k for k in m3.state_dict() if k.startswith("encoder.")}
        music_keys = {f"encoder.{k[len('music.'):]}" for k in clamp_model.state_dict() if k.startswith("music.")}
        assert m3_keys == music_keys

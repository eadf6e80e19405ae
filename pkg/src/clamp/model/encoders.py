"""The music encoder, text encoder, and the character decoder used by the
masked-music objective."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import torch
from torch import nn

from ..errors import SequenceTooLongError
from ..patches import PATCH_LEN, VOCAB_SIZE
from .config import ModelConfig
from .layers import EncoderStack, l2_normalize, masked_mean_pool


@dataclass
class EncoderOutput:
    hidden: torch.Tensor  # (B, S, H) last hidden states
    pooled: torch.Tensor  # (B, H) mask-weighted mean, unit norm if configured


class PatchEmbedding(nn.Module):
    """Linear projection of the flattened 64x98 one-hot patch matrix.

    The projection is computed by indexed lookup: the weight row for slot p
    holding token id t is `table[p * 98 + t]`, and the 64 rows are summed.
    This equals flattening the one-hot matrix and applying a dense layer.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.table = nn.Embedding(PATCH_LEN * VOCAB_SIZE, cfg.hidden_dim)
        self.bias = nn.Parameter(torch.zeros(cfg.hidden_dim))
        self.position = nn.Embedding(cfg.max_patches, cfg.hidden_dim)
        self.max_patches = cfg.max_patches

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        """tokens: (B, S, 64) integer ids -> (B, S, H) embeddings."""
        bsz, seq, _ = tokens.shape
        if seq > self.max_patches:
            raise SequenceTooLongError(f"{seq} patches exceeds max_patches={self.max_patches}")
        offsets = torch.arange(PATCH_LEN, device=tokens.device) * VOCAB_SIZE
        projected = self.table(tokens.long() + offsets).sum(dim=2) + self.bias
        positions = torch.arange(seq, device=tokens.device)
        return projected + self.position(positions)


class MusicEncoder(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.patch_embed = PatchEmbedding(cfg)
        self.stack = EncoderStack(cfg, cfg.encoder_layers)

    def forward(self, tokens, patch_mask, need_weights: bool = False):
        """tokens: (B, S, 64); patch_mask: (B, S) with 1 for real patches."""
        x = self.patch_embed(tokens)
        hidden, weights = self.stack(x, key_mask=patch_mask, need_weights=need_weights)
        pooled = masked_mean_pool(hidden, patch_mask)
        if self.cfg.normalize_features:
            pooled = l2_normalize(pooled)
        out = EncoderOutput(hidden=hidden, pooled=pooled)
        return (out, weights) if need_weights else out


class TextEncoder(nn.Module):
    def __init__(self, cfg: ModelConfig, vocab_size: int, max_len: int = 128):
        super().__init__()
        self.cfg = cfg
        self.max_len = max_len
        self.token_embed = nn.Embedding(vocab_size, cfg.hidden_dim)
        self.position = nn.Embedding(max_len, cfg.hidden_dim)
        self.stack = EncoderStack(cfg, cfg.encoder_layers)

    def forward(self, ids, mask, need_weights: bool = False):
        """ids: (B, T) token ids; mask: (B, T) with 1 for real tokens."""
        seq = ids.shape[1]
        if seq > self.max_len:
            raise SequenceTooLongError(f"{seq} tokens exceeds max_len={self.max_len}")
        positions = torch.arange(seq, device=ids.device)
        x = self.token_embed(ids.long()) + self.position(positions)
        hidden, weights = self.stack(x, key_mask=mask, need_weights=need_weights)
        pooled = masked_mean_pool(hidden, mask)
        if self.cfg.normalize_features:
            pooled = l2_normalize(pooled)
        out = EncoderOutput(hidden=hidden, pooled=pooled)
        return (out, weights) if need_weights else out


class PatchDecoder(nn.Module):
    """Lightweight causal decoder that reconstructs a patch's 64 characters.

    The input sequence is the patch feature at slot 0 followed by the target
    character embeddings shifted right; the hidden state at slot t predicts
    character t, so each prediction sees the feature and characters < t.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.char_embed = nn.Embedding(VOCAB_SIZE, cfg.hidden_dim)
        self.position = nn.Embedding(PATCH_LEN, cfg.hidden_dim)
        self.stack = EncoderStack(cfg, cfg.decoder_layers, causal=True)
        self.out = nn.Linear(cfg.hidden_dim, VOCAB_SIZE)

    def forward(self, feature: torch.Tensor, target_chars: torch.Tensor) -> torch.Tensor:
        """feature: (B, H); target_chars: (B, 64) ids -> logits (B, 64, 98)."""
        shifted = self.char_embed(target_chars.long()[:, : PATCH_LEN - 1])
        x = torch.cat([feature.unsqueeze(1), shifted], dim=1)
        x = x + self.position(torch.arange(PATCH_LEN, device=feature.device))
        hidden, _ = self.stack(x)
        return self.out(hidden)


class M3Model(nn.Module):
    """Masked-music model: encoder over noised patches plus character decoder."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.encoder = MusicEncoder(cfg)
        self.decoder = PatchDecoder(cfg)


class ClampModel(nn.Module):
    """Joint music and text encoders sharing one feature dimensionality."""

    def __init__(self, cfg: ModelConfig, text_vocab_size: int, text_max_len: int = 128):
        super().__init__()
        self.cfg = cfg
        self.music = MusicEncoder(cfg)
        self.text = TextEncoder(cfg, text_vocab_size, text_max_len)


def init_parameters(module: nn.Module, std: float, generator: Optional[torch.Generator] = None) -> None:
    """Normal(0, std) for weight matrices, ones for norm scales, zeros for biases."""
    with torch.no_grad():
        for name, param in module.named_parameters():
            if param.dim() >= 2:
                param.normal_(0.0, std, generator=generator)
            elif name.endswith("bias"):
                param.zero_()
            else:
                param.fill_(1.0)

"""Transformer building blocks: masked multi-head attention, pre-norm blocks,
and mask-aware mean pooling."""

from __future__ import annotations

from typing import Optional

import torch
from torch import nn

from ..errors import EmptyPoolError
from .config import ModelConfig


class MultiHeadSelfAttention(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.heads = cfg.heads
        self.head_dim = cfg.hidden_dim // cfg.heads
        self.qkv = nn.Linear(cfg.hidden_dim, 3 * cfg.hidden_dim)
        self.out = nn.Linear(cfg.hidden_dim, cfg.hidden_dim)

    def forward(
        self,
        x: torch.Tensor,
        key_mask: Optional[torch.Tensor] = None,
        causal: bool = False,
        need_weights: bool = False,
    ):
        """x: (B, S, H); key_mask: (B, S) bool, True for real positions.

        Every query row keeps its own diagonal key even when masked out, so
        fully padded rows attend to themselves instead of producing NaNs;
        those rows are excluded downstream by pooling and loss masks.
        """
        bsz, seq, _ = x.shape
        q, k, v = self.qkv(x).chunk(3, dim=-1)
        shape = (bsz, seq, self.heads, self.head_dim)
        q = q.view(shape).transpose(1, 2)
        k = k.view(shape).transpose(1, 2)
        v = v.view(shape).transpose(1, 2)
        scores = (q @ k.transpose(-2, -1)) / self.head_dim**0.5

        allowed = torch.ones(bsz, seq, seq, dtype=torch.bool, device=x.device)
        if key_mask is not None:
            allowed &= key_mask.bool().unsqueeze(1)
        if causal:
            allowed &= torch.ones(seq, seq, dtype=torch.bool, device=x.device).tril()
        eye = torch.eye(seq, dtype=torch.bool, device=x.device)
        allowed |= eye
        scores = scores.masked_fill(~allowed.unsqueeze(1), float("-inf"))

        weights = torch.softmax(scores, dim=-1)
        ctx = (weights @ v).transpose(1, 2).reshape(bsz, seq, -1)
        out = self.out(ctx)
        return (out, weights) if need_weights else (out, None)


class TransformerBlock(nn.Module):
    """Pre-norm block: attention and GELU feed-forward, each with a residual."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.hidden_dim)
        self.attn = MultiHeadSelfAttention(cfg)
        self.ln2 = nn.LayerNorm(cfg.hidden_dim)
        self.ff = nn.Sequential(
            nn.Linear(cfg.hidden_dim, cfg.ff_mult * cfg.hidden_dim),
            nn.GELU(),
            nn.Linear(cfg.ff_mult * cfg.hidden_dim, cfg.hidden_dim),
        )
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x, key_mask=None, causal=False, need_weights=False):
        attn_out, weights = self.attn(self.ln1(x), key_mask, causal, need_weights)
        x = x + self.drop(attn_out)
        x = x + self.drop(self.ff(self.ln2(x)))
        return x, weights


class EncoderStack(nn.Module):
    """Pre-norm blocks with a final LayerNorm; with zero layers it is the
    identity (no final norm either), so an empty stack passes inputs through."""

    def __init__(self, cfg: ModelConfig, layers: int, causal: bool = False):
        super().__init__()
        self.blocks = nn.ModuleList(TransformerBlock(cfg) for _ in range(layers))
        self.final_ln = nn.LayerNorm(cfg.hidden_dim) if layers > 0 else None
        self.causal = causal

    def forward(self, x, key_mask=None, need_weights=False):
        all_weights = []
        for block in self.blocks:
            x, weights = block(x, key_mask, self.causal, need_weights)
            if need_weights:
                all_weights.append(weights)
        if self.final_ln is not None:
            x = self.final_ln(x)
        return (x, all_weights) if need_weights else (x, None)


def masked_mean_pool(hidden: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Mean of hidden states over real positions. hidden: (B, S, H), mask: (B, S)."""
    mask = mask.to(hidden.dtype)
    counts = mask.sum(dim=1, keepdim=True)
    if (counts == 0).any():
        raise EmptyPoolError("cannot pool an all-masked sequence")
    return (hidden * mask.unsqueeze(-1)).sum(dim=1) / counts


def l2_normalize(x: torch.Tensor) -> torch.Tensor:
    return x / x.norm(dim=-1, keepdim=True).clamp_min(1e-12)

"""AdamW with decoupled weight decay, operating on named parameter dicts."""

from __future__ import annotations

import math
from dataclasses import replace

import torch

from ..errors import NonFiniteGradientError
from .config import OptimizerConfig


class AdamWState:
    """First/second moment estimates plus the shared step counter."""

    def __init__(self, params: dict[str, torch.Tensor]):
        self.step = 0
        self.m = {name: torch.zeros_like(p) for name, p in params.items()}
        self.v = {name: torch.zeros_like(p) for name, p in params.items()}


def adamw_step(
    params: dict[str, torch.Tensor],
    grads: dict[str, torch.Tensor],
    state: AdamWState,
    cfg: OptimizerConfig,
) -> dict[str, torch.Tensor]:
    """One update in place: p <- p - lr*wd*p - lr * m_hat / (sqrt(v_hat) + eps)."""
    for name, g in grads.items():
        if g is not None and not torch.isfinite(g).all():
            raise NonFiniteGradientError(f"non-finite gradient for {name}")
    state.step += 1
    bc1 = 1.0 - cfg.beta1**state.step
    bc2 = 1.0 - cfg.beta2**state.step
    with torch.no_grad():
        for name, p in params.items():
            g = grads.get(name)
            if g is None:
                g = torch.zeros_like(p)
            m = state.m[name]
            v = state.v[name]
            m.mul_(cfg.beta1).add_(g, alpha=1.0 - cfg.beta1)
            v.mul_(cfg.beta2).addcmul_(g, g, value=1.0 - cfg.beta2)
            p.mul_(1.0 - cfg.lr * cfg.weight_decay)
            p.addcdiv_(m / bc1, (v / bc2).sqrt().add_(cfg.eps), value=-cfg.lr)
    return params


def module_step(
    model: torch.nn.Module,
    state: AdamWState,
    cfg: OptimizerConfig,
    lr: float | None = None,
    grad_clip: float | None = 1.0,
) -> None:
    """adamw_step over a module's parameters using their .grad fields, with
    optional global-norm clipping and a per-step learning rate override."""
    if grad_clip is not None:
        torch.nn.utils.clip_grad_norm_(model.parameters(), grad_clip)
    params = dict(model.named_parameters())
    grads = {name: p.grad for name, p in params.items()}
    step_cfg = cfg if lr is None else replace(cfg, lr=lr)
    adamw_step(params, grads, state, step_cfg)
    model.zero_grad(set_to_none=True)


def cosine_lr(step: int, total_steps: int, base_lr: float, warmup_frac: float = 0.05) -> float:
    """Linear warmup then cosine decay to zero."""
    warmup = max(1, int(total_steps * warmup_frac))
    if step < warmup:
        return base_lr * (step + 1) / warmup
    if total_steps <= warmup:
        return base_lr
    progress = (step - warmup) / (total_steps - warmup)
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))

"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
import torch


def grad_check(
    loss_fn: Callable[[], torch.Tensor],
    params: dict[str, torch.Tensor],
    eps: float = 1e-4,
    max_coords: Optional[int] = None,
    seed: int = 0,
) -> float:
    """Compare autograd gradients with central finite differences.

    loss_fn must be a pure, deterministic zero-argument callable reading the
    given parameter tensors (float64 recommended). Returns the maximum
    relative error |a - n| / max(|a|, |n|, 1e-8) over checked coordinates;
    max_coords subsamples coordinates reproducibly for large models.
    """
    analytic = torch.autograd.grad(loss_fn(), list(params.values()), allow_unused=True)
    analytic = {
        name: (g if g is not None else torch.zeros_like(p))
        for (name, p), g in zip(params.items(), analytic)
    }

    coords = [(name, i) for name, p in params.items() for i in range(p.numel())]
    if max_coords is not None and len(coords) > max_coords:
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[int(i)] for i in picks]

    worst = 0.0
    with torch.no_grad():
        for name, i in coords:
            flat = params[name].view(-1)
            original = flat[i].item()
            flat[i] = original + eps
            f_plus = float(loss_fn())
            flat[i] = original - eps
            f_minus = float(loss_fn())
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = float(analytic[name].view(-1)[i])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, rel)
    return worst

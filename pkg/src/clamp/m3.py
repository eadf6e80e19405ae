"""Masked-music pretraining: patch-level noising (mask/shuffle/unchanged),
character reconstruction loss, and the epoch loop."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F

from .corpus import MusicTextPair, segment_score
from .errors import NoBarsToNoiseError, NoLossTargetsError
from .model import AdamWState, M3Model, ModelConfig, OptimizerConfig, init_parameters, module_step
from .model.optim import cosine_lr
from .model.checkpoint import load_checkpoint, save_checkpoint
from .patches import END_ID, MASK_ID, PAD_ID, PATCH_LEN, PatchSequence, encode_score

UNTOUCHED = "untouched"
MASKED = "masked"
SHUFFLED = "shuffled"
UNCHANGED = "unchanged"


@dataclass
class NoiseConfig:
    ratio: float = 0.45
    mask_prob: float = 0.8
    shuffle_prob: float = 0.1
    unchanged_prob: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError("noise ratio must be in [0, 1]")
        total = self.mask_prob + self.shuffle_prob + self.unchanged_prob
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"noise split must sum to 1, got {total}")

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "mask_prob": self.mask_prob,
            "shuffle_prob": self.shuffle_prob,
            "unchanged_prob": self.unchanged_prob,
            "seed": self.seed,
        }


@dataclass
class NoisedSequence:
    tokens: np.ndarray  # noised rows, (P, 64) uint8
    originals: np.ndarray  # pre-noise rows, the reconstruction targets
    kinds: list[str]
    mask: np.ndarray
    tags: list[str] = field(default_factory=list)  # per patch, UNTOUCHED/MASKED/...

    @property
    def selected_indices(self) -> list[int]:
        return [i for i, tag in enumerate(self.tags) if tag != UNTOUCHED]


def _shuffle_row(row: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniformly permute the characters before [END]; [END]/[PAD] stay put."""
    end = int(np.argmax(row == END_ID))
    shuffled = row.copy()
    shuffled[:end] = row[:end][rng.permutation(end)]
    return shuffled


def apply_noise(seq: PatchSequence, cfg: NoiseConfig, rng: np.random.Generator) -> NoisedSequence:
    """Select exactly round(ratio * B) bar patches uniformly without
    replacement and noise each one independently: mask (all-[MASK] row),
    shuffle (character permutation), or leave unchanged. Headers are never
    touched. The count uses Python round (half-to-even at exact .5)."""
    bars = seq.bar_indices
    if not bars:
        raise NoBarsToNoiseError("sequence has no bar patches")
    n_select = int(round(cfg.ratio * len(bars)))
    chosen = sorted(int(bars[i]) for i in rng.permutation(len(bars))[:n_select])

    tokens = seq.tokens.copy()
    tags = [UNTOUCHED] * len(seq)
    for idx in chosen:
        draw = rng.random()
        if draw < cfg.mask_prob:
            tokens[idx] = MASK_ID
            tags[idx] = MASKED
        elif draw < cfg.mask_prob + cfg.shuffle_prob:
            tokens[idx] = _shuffle_row(seq.tokens[idx], rng)
            tags[idx] = SHUFFLED
        else:
            tags[idx] = UNCHANGED
    return NoisedSequence(
        tokens=tokens,
        originals=seq.tokens.copy(),
        kinds=list(seq.kinds),
        mask=seq.mask.copy(),
        tags=tags,
    )


def _batched_loss(model: M3Model, batch: list[NoisedSequence]) -> torch.Tensor:
    device = next(model.parameters()).device
    width = max(len(n.kinds) for n in batch)
    tokens = torch.full((len(batch), width, PATCH_LEN), PAD_ID, dtype=torch.long, device=device)
    mask = torch.zeros(len(batch), width, device=device)
    gather_b, gather_p, targets = [], [], []
    for b, noised in enumerate(batch):
        n = len(noised.kinds)
        tokens[b, :n] = torch.from_numpy(noised.tokens.astype(np.int64))
        mask[b, :n] = torch.from_numpy(noised.mask.astype(np.float32))
        for idx in noised.selected_indices:
            gather_b.append(b)
            gather_p.append(idx)
            targets.append(noised.originals[idx].astype(np.int64))
    if not targets:
        raise NoLossTargetsError("no patches were selected for reconstruction")

    hidden = model.encoder(tokens, mask).hidden
    features = hidden[gather_b, gather_p]
    target_rows = torch.from_numpy(np.stack(targets)).to(device)
    logits = model.decoder(features, target_rows)
    keep = target_rows != PAD_ID
    return F.cross_entropy(logits[keep], target_rows[keep])


def m3_loss(model: M3Model, noised: NoisedSequence) -> torch.Tensor:
    """Cross-entropy of the decoder's character predictions for every
    selected patch, averaged over all non-[PAD] target positions."""
    return _batched_loss(model, [noised])


def build_m3_model(cfg: ModelConfig, seed: int = 0) -> M3Model:
    model = M3Model(cfg)
    gen = torch.Generator().manual_seed(seed)
    init_parameters(model, cfg.init_std, gen)
    return model


def sequences_for_pairs(pairs: list[MusicTextPair], max_patches: int) -> list[PatchSequence]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return [encode_score(segment_score(p.music), max_patches) for p in pairs]


def pretrain_m3(
    pairs: list[MusicTextPair],
    model_cfg: ModelConfig,
    opt_cfg: OptimizerConfig,
    noise_cfg: NoiseConfig,
    max_patches: int = 512,
    batch_size: int = 8,
    seed: int = 0,
    out_path: Optional[str | Path] = None,
    log_path: Optional[str | Path] = None,
) -> tuple[M3Model, list[float]]:
    """Train the masked-music model; returns the model and per-epoch losses.

    Noise is redrawn every epoch from seeds derived per (epoch, piece). On a
    non-finite loss the run aborts and the last end-of-epoch parameters are
    restored. The decoder is kept in the checkpoint; contrastive training
    initializes its music encoder from the encoder half only.
    """
    torch.set_num_threads(1)  # bit-stable reductions run to run
    model = build_m3_model(model_cfg, seed)
    sequences = [s for s in sequences_for_pairs(pairs, max_patches) if s.bar_indices]
    if len(sequences) < len(pairs):
        warnings.warn(f"skipping {len(pairs) - len(sequences)} piece(s) without bar patches")
    if not sequences:
        raise NoBarsToNoiseError("corpus has no pieces with bar patches")

    state = AdamWState(dict(model.named_parameters()))
    history: list[float] = []
    snapshot = {k: v.detach().clone() for k, v in model.state_dict().items()}
    steps_per_epoch = -(-len(sequences) // batch_size)
    total_steps = max(1, opt_cfg.epochs * steps_per_epoch)
    global_step = 0
    diverged = False
    for epoch in range(opt_cfg.epochs):
        order = np.random.default_rng((seed, epoch, 0, 1)).permutation(len(sequences))
        epoch_losses = []
        for start in range(0, len(order), batch_size):
            chunk = order[start : start + batch_size]
            batch = [
                apply_noise(sequences[i], noise_cfg, np.random.default_rng((seed, epoch, int(i), 0)))
                for i in chunk
            ]
            batch = [n for n in batch if n.selected_indices]
            if not batch:
                continue
            loss = _batched_loss(model, batch)
            if not torch.isfinite(loss):
                warnings.warn(f"loss diverged at epoch {epoch}; restoring last good parameters")
                model.load_state_dict(snapshot)
                diverged = True
                break
            loss.backward()
            module_step(model, state, opt_cfg, lr=cosine_lr(global_step, total_steps, opt_cfg.lr))
            global_step += 1
            epoch_losses.append(loss.item())
        if diverged:
            break
        snapshot = {k: v.detach().clone() for k, v in model.state_dict().items()}
        mean_loss = float(np.mean(epoch_losses)) if epoch_losses else float("nan")
        history.append(mean_loss)
        if log_path is not None:
            with open(log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"epoch": epoch, "loss": mean_loss}) + "\n")

    if out_path is not None:
        save_m3_checkpoint(model, noise_cfg, max_patches, out_path)
    return model, history


def save_m3_checkpoint(model: M3Model, noise_cfg: NoiseConfig, max_patches: int, path: str | Path) -> None:
    config = {
        "kind": "m3",
        "model": model.cfg.to_dict(),
        "max_patches": max_patches,
        "noise": noise_cfg.to_dict(),
    }
    save_checkpoint(path, config, dict(model.state_dict()))


def load_m3_checkpoint(path: str | Path) -> tuple[M3Model, dict]:
    config, tensors = load_checkpoint(path)
    if config.get("kind") != "m3":
        raise ValueError(f"expected an m3 checkpoint, got kind={config.get('kind')!r}")
    model = M3Model(ModelConfig.from_dict(config["model"]))
    model.load_state_dict(tensors)
    return model, config

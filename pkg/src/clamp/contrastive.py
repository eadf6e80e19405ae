"""The contrastive batch objective and joint training of both encoders."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
import torch

from .corpus import MusicTextPair
from .errors import BatchTooSmallError, ConfigMismatchError, NonFiniteInputError
from .m3 import sequences_for_pairs
from .model import AdamWState, ClampModel, ModelConfig, OptimizerConfig, init_parameters, module_step
from .model.optim import cosine_lr
from .model.checkpoint import load_checkpoint, save_checkpoint
from .patches import PAD_ID, PATCH_LEN, PatchSequence
from .textproc import MAX_TEXT_LEN, TextDropoutConfig, TextVocabulary, concat_candidates, text_dropout

EQ1 = "eq1"  # denominators exclude the positive pair (the literal objective)
INFONCE = "infonce"  # standard variant, positive included

_MUSIC_PREFIX = "music."
_M3_ENCODER_PREFIX = "encoder."


@dataclass
class ContrastiveConfig:
    temperature: float = 0.2
    batch_size: int = 32
    variant: str = EQ1
    normalize: bool = True

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.batch_size < 2:
            raise ValueError("batch size must be at least 2")
        if self.variant not in (EQ1, INFONCE):
            raise ValueError(f"unknown variant {self.variant!r}")

    def to_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "batch_size": self.batch_size,
            "variant": self.variant,
            "normalize": self.normalize,
        }


def contrastive_loss_from_logits(logits: torch.Tensor, variant: str = EQ1) -> torch.Tensor:
    """Symmetric loss over an N x N similarity-logit matrix whose diagonal
    holds the positives. Under EQ1 the positive is excluded from each
    denominator, so the loss can be negative; INFONCE keeps it."""
    n = logits.shape[0]
    diag = logits.diagonal()
    if variant == EQ1:
        eye = torch.eye(n, dtype=torch.bool, device=logits.device)
        masked = logits.masked_fill(eye, float("-inf"))
        lse_rows = torch.logsumexp(masked, dim=1)
        lse_cols = torch.logsumexp(masked, dim=0)
    else:
        lse_rows = torch.logsumexp(logits, dim=1)
        lse_cols = torch.logsumexp(logits, dim=0)
    return -0.5 * ((diag - lse_rows).mean() + (diag - lse_cols).mean())


def contrastive_loss(
    music_features: torch.Tensor,
    text_features: torch.Tensor,
    cfg: ContrastiveConfig,
) -> torch.Tensor:
    """Contrastive loss over a batch of N paired features, each (N, H)."""
    if music_features.shape != text_features.shape:
        raise NonFiniteInputError(
            f"feature shapes differ: {tuple(music_features.shape)} vs {tuple(text_features.shape)}"
        )
    n = music_features.shape[0]
    if n < 2:
        raise BatchTooSmallError("contrastive loss needs at least 2 pairs")
    if not (torch.isfinite(music_features).all() and torch.isfinite(text_features).all()):
        raise NonFiniteInputError("features contain NaN or inf")
    if cfg.normalize:
        music_features = music_features / music_features.norm(dim=-1, keepdim=True).clamp_min(1e-12)
        text_features = text_features / text_features.norm(dim=-1, keepdim=True).clamp_min(1e-12)
    logits = music_features @ text_features.T / cfg.temperature
    return contrastive_loss_from_logits(logits, cfg.variant)


class ClampBundle(NamedTuple):
    """A loaded model plus everything needed to encode raw inputs."""

    model: ClampModel
    vocab: TextVocabulary
    config: dict


def build_clamp_model(
    cfg: ModelConfig, vocab_size: int, text_max_len: int = MAX_TEXT_LEN, seed: int = 0
) -> ClampModel:
    model = ClampModel(cfg, vocab_size, text_max_len)
    gen = torch.Generator().manual_seed(seed)
    init_parameters(model, cfg.init_std, gen)
    return model


def apply_m3_initialization(model: ClampModel, m3_path: str | Path) -> None:
    """Copy the pretrained encoder into the music encoder; the decoder in the
    checkpoint is discarded."""
    config, tensors = load_checkpoint(m3_path)
    if config.get("kind") != "m3":
        raise ValueError(f"expected an m3 checkpoint, got kind={config.get('kind')!r}")
    if config["model"] != model.cfg.to_dict():
        raise ConfigMismatchError("m3 checkpoint geometry differs from the model config")
    encoder_state = {
        name[len(_M3_ENCODER_PREFIX) :]: tensor
        for name, tensor in tensors.items()
        if name.startswith(_M3_ENCODER_PREFIX)
    }
    model.music.load_state_dict(encoder_state)


def collate_music(sequences: list[PatchSequence], device=None) -> tuple[torch.Tensor, torch.Tensor]:
    width = max(len(s) for s in sequences)
    tokens = torch.full((len(sequences), width, PATCH_LEN), PAD_ID, dtype=torch.long, device=device)
    mask = torch.zeros(len(sequences), width, device=device)
    for i, seq in enumerate(sequences):
        tokens[i, : len(seq)] = torch.from_numpy(seq.tokens.astype(np.int64))
        mask[i, : len(seq)] = torch.from_numpy(seq.mask.astype(np.float32))
    return tokens, mask


def collate_texts(vocab: TextVocabulary, texts: list[str], max_len: int = MAX_TEXT_LEN, device=None):
    rows = [vocab.tokenize(t, max_len) for t in texts]
    width = max(len(r) for r in rows)
    ids = torch.zeros(len(rows), width, dtype=torch.long, device=device)
    mask = torch.zeros(len(rows), width, device=device)
    for i, row in enumerate(rows):
        ids[i, : len(row)] = torch.from_numpy(row.ids)
        mask[i, : len(row)] = torch.from_numpy(row.mask.astype(np.float32))
    return ids, mask


def train_clamp(
    pairs: list[MusicTextPair],
    model_cfg: ModelConfig,
    opt_cfg: OptimizerConfig,
    cl_cfg: ContrastiveConfig,
    m3_checkpoint: Optional[str | Path] = None,
    dropout: Optional[TextDropoutConfig] = None,
    max_patches: int = 512,
    text_max_len: int = MAX_TEXT_LEN,
    seed: int = 0,
    vocab: Optional[TextVocabulary] = None,
    out_path: Optional[str | Path] = None,
    log_path: Optional[str | Path] = None,
) -> tuple[ClampModel, TextVocabulary, list[float]]:
    """Jointly train both encoders with the contrastive objective.

    Per pair and epoch, the input text is a fresh text-dropout draw (or the
    plain concatenation when disabled). Returns (model, vocab, epoch losses).
    """
    torch.set_num_threads(1)
    dropout = dropout if dropout is not None else TextDropoutConfig(enabled=True, seed=seed)
    vocab = vocab or TextVocabulary.build(t for p in pairs for t in p.texts)
    model = build_clamp_model(model_cfg, len(vocab), text_max_len, seed)
    if m3_checkpoint is not None:
        apply_m3_initialization(model, m3_checkpoint)

    sequences = sequences_for_pairs(pairs, max_patches)
    batch_size = cl_cfg.batch_size
    if len(pairs) < batch_size:
        warnings.warn(f"corpus of {len(pairs)} pairs is smaller than batch size {batch_size}")
        batch_size = len(pairs)

    state = AdamWState(dict(model.named_parameters()))
    history: list[float] = []
    snapshot = {k: v.detach().clone() for k, v in model.state_dict().items()}
    steps_per_epoch = -(-len(pairs) // batch_size)
    total_steps = max(1, opt_cfg.epochs * steps_per_epoch)
    global_step = 0
    diverged = False
    for epoch in range(opt_cfg.epochs):
        order = np.random.default_rng((seed, epoch, 0, 1)).permutation(len(pairs))
        epoch_losses = []
        for start in range(0, len(order), batch_size):
            chunk = order[start : start + batch_size]
            if len(chunk) < 2:
                continue
            if dropout.enabled:
                texts = [
                    text_dropout(pairs[i].texts, np.random.default_rng((dropout.seed, epoch, int(i), 2)))
                    for i in chunk
                ]
            else:
                texts = [concat_candidates(pairs[i].texts) for i in chunk]
            mtokens, mmask = collate_music([sequences[i] for i in chunk])
            tids, tmask = collate_texts(vocab, texts, text_max_len)
            loss = contrastive_loss(
                model.music(mtokens, mmask).pooled,
                model.text(tids, tmask).pooled,
                cl_cfg,
            )
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
        save_clamp_checkpoint(model, vocab, cl_cfg, max_patches, out_path)
    return model, vocab, history


def save_clamp_checkpoint(
    model: ClampModel,
    vocab: TextVocabulary,
    cl_cfg: ContrastiveConfig,
    max_patches: int,
    path: str | Path,
) -> None:
    config = {
        "kind": "clamp",
        "model": model.cfg.to_dict(),
        "max_patches": max_patches,
        "text_max_len": model.text.max_len,
        "text_vocab": vocab.entries,
        "contrastive": cl_cfg.to_dict(),
    }
    save_checkpoint(path, config, dict(model.state_dict()))


def load_clamp_checkpoint(path: str | Path) -> ClampBundle:
    config, tensors = load_checkpoint(path)
    if config.get("kind") != "clamp":
        raise ValueError(f"expected a clamp checkpoint, got kind={config.get('kind')!r}")
    vocab = TextVocabulary(config["text_vocab"])
    model = ClampModel(ModelConfig.from_dict(config["model"]), len(vocab), config["text_max_len"])
    model.load_state_dict(tensors)
    model.eval()
    return ClampBundle(model=model, vocab=vocab, config=config)


def encode_sequences(model: ClampModel, sequences: list[PatchSequence], batch_size: int = 16) -> np.ndarray:
    """Pooled music features, float32, one row per sequence."""
    torch.set_num_threads(1)
    model.eval()
    outputs = []
    with torch.no_grad():
        for start in range(0, len(sequences), batch_size):
            tokens, mask = collate_music(sequences[start : start + batch_size])
            outputs.append(model.music(tokens, mask).pooled.to(torch.float32).numpy())
    if not outputs:
        return np.zeros((0, model.cfg.hidden_dim), dtype=np.float32)
    return np.concatenate(outputs, axis=0)


def encode_texts(model: ClampModel, vocab: TextVocabulary, texts: list[str], batch_size: int = 32) -> np.ndarray:
    """Pooled text features, float32, one row per text."""
    torch.set_num_threads(1)
    model.eval()
    outputs = []
    with torch.no_grad():
        for start in range(0, len(texts), batch_size):
            ids, mask = collate_texts(vocab, texts[start : start + batch_size], model.text.max_len)
            outputs.append(model.text(ids, mask).pooled.to(torch.float32).numpy())
    if not outputs:
        return np.zeros((0, model.cfg.hidden_dim), dtype=np.float32)
    return np.concatenate(outputs, axis=0)

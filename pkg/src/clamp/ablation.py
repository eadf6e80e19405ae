"""Multi-seed ablation of the pretraining techniques: the full pipeline, one
without text dropout, one without masked-music initialization, plus an
untrained baseline."""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .contrastive import ClampBundle, ContrastiveConfig, build_clamp_model, train_clamp
from .corpus import MusicTextPair
from .m3 import NoiseConfig, pretrain_m3
from .model import ModelConfig, OptimizerConfig
from .retrieval import build_index, eval_search
from .textproc import TextDropoutConfig, TextVocabulary

FULL = "full"
NO_TEXT_DROPOUT = "no_text_dropout"
NO_M3 = "no_m3"
RANDOM_INIT = "random"

CONFIGS = (FULL, NO_TEXT_DROPOUT, NO_M3)


@dataclass
class AblationSettings:
    model_cfg: ModelConfig
    m3_opt: OptimizerConfig
    clamp_opt: OptimizerConfig
    cl_cfg: ContrastiveConfig
    noise_cfg: NoiseConfig
    max_patches: int = 512


def make_bundle(model, vocab: TextVocabulary, max_patches: int) -> ClampBundle:
    return ClampBundle(model=model, vocab=vocab, config={"max_patches": max_patches})


def _evaluate(model, vocab, settings: AblationSettings, eval_pairs) -> dict:
    bundle = make_bundle(model, vocab, settings.max_patches)
    report = eval_search(build_index(eval_pairs, bundle), eval_pairs, bundle)
    return report.to_dict()


def ablation_suite(
    train_pairs: list[MusicTextPair],
    eval_pairs: list[MusicTextPair],
    seeds: list[int],
    settings: AblationSettings,
) -> dict:
    """Train every configuration across seeds and report retrieval metrics.

    The masked-music checkpoint is pretrained once per seed and shared by the
    configurations that use it.
    """
    vocab = TextVocabulary.build(t for p in train_pairs for t in p.texts)
    rows = []
    for seed in seeds:
        with tempfile.TemporaryDirectory() as tmp:
            m3_path = Path(tmp) / f"m3_seed{seed}.clmp"
            pretrain_m3(
                train_pairs,
                settings.model_cfg,
                settings.m3_opt,
                settings.noise_cfg,
                max_patches=settings.max_patches,
                seed=seed,
                out_path=m3_path,
            )
            variants = {
                FULL: dict(m3_checkpoint=m3_path, dropout=TextDropoutConfig(True, seed)),
                NO_TEXT_DROPOUT: dict(m3_checkpoint=m3_path, dropout=TextDropoutConfig(False, seed)),
                NO_M3: dict(m3_checkpoint=None, dropout=TextDropoutConfig(True, seed)),
            }
            for name, extra in variants.items():
                model, _, _ = train_clamp(
                    train_pairs,
                    settings.model_cfg,
                    settings.clamp_opt,
                    settings.cl_cfg,
                    max_patches=settings.max_patches,
                    seed=seed,
                    vocab=vocab,
                    **extra,
                )
                rows.append({"config": name, "seed": seed, **_evaluate(model, vocab, settings, eval_pairs)})

        untrained = build_clamp_model(settings.model_cfg, len(vocab), seed=seed)
        rows.append({"config": RANDOM_INIT, "seed": seed, **_evaluate(untrained, vocab, settings, eval_pairs)})

    mean_mrr = {
        name: float(np.mean([r["mrr"] for r in rows if r["config"] == name]))
        for name in (*CONFIGS, RANDOM_INIT)
    }
    return {"seeds": list(seeds), "rows": rows, "mean_mrr": mean_mrr}


def save_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))

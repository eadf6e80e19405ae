"""Contrastive language-music pretraining for symbolic music."""

__version__ = "0.1.0"

from .contrastive import (
    ClampBundle,
    ContrastiveConfig,
    contrastive_loss,
    load_clamp_checkpoint,
    train_clamp,
)
from .corpus import (
    GenreKeywordTable,
    MusicTextPair,
    PatchText,
    Score,
    assign_genre,
    corpus_stats,
    load_pairs,
    parse_score,
    save_pairs,
    segment_score,
    split_bars,
    strip_natural_language,
)
from .m3 import NoiseConfig, apply_noise, m3_loss, pretrain_m3
from .metrics import f1_macro, hr_at_k, mrr
from .model import ModelConfig, OptimizerConfig, adamw_step, grad_check
from .patches import PatchSequence, decode_patch, encode_patch, encode_score
from .retrieval import (
    EmbeddingIndex,
    build_index,
    eval_search,
    linear_probe,
    load_index,
    save_index,
    search,
    zero_shot_classify,
)
from .textproc import TextDropoutConfig, TextVocabulary, text_dropout

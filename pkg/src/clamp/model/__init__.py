from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModelConfig, OptimizerConfig
from .encoders import (
    ClampModel,
    EncoderOutput,
    M3Model,
    MusicEncoder,
    PatchDecoder,
    PatchEmbedding,
    TextEncoder,
    init_parameters,
)
from .gradcheck import grad_check
from .layers import EncoderStack, l2_normalize, masked_mean_pool
from .optim import AdamWState, adamw_step, module_step

__all__ = [
    "AdamWState",
    "ClampModel",
    "EncoderOutput",
    "EncoderStack",
    "M3Model",
    "ModelConfig",
    "MusicEncoder",
    "OptimizerConfig",
    "PatchDecoder",
    "PatchEmbedding",
    "TextEncoder",
    "adamw_step",
    "grad_check",
    "init_parameters",
    "l2_normalize",
    "load_checkpoint",
    "masked_mean_pool",
    "module_step",
    "save_checkpoint",
]

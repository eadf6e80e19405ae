"""Model and optimizer configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class ModelConfig:
    """Shared transformer geometry for both encoders and the patch decoder.

    Reference scale is hidden_dim 768 with 6 encoder / 3 decoder layers; the
    desk default is much smaller so everything runs on one core.
    """

    hidden_dim: int = 128
    encoder_layers: int = 6
    decoder_layers: int = 3
    heads: int = 4
    ff_mult: int = 4
    max_patches: int = 512
    dropout: float = 0.0
    init_std: float = 0.02
    normalize_features: bool = True

    def __post_init__(self):
        if self.hidden_dim < 1 or self.heads < 1 or self.ff_mult < 1:
            raise ValueError("all dimensions must be >= 1")
        if self.hidden_dim % self.heads != 0:
            raise ValueError(f"hidden_dim {self.hidden_dim} not divisible by heads {self.heads}")
        if self.encoder_layers < 0 or self.decoder_layers < 0:
            raise ValueError("layer counts must be >= 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class OptimizerConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    epochs: int = 10

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("betas must lie strictly between 0 and 1")
        if self.lr <= 0 or self.eps <= 0:
            raise ValueError("lr and eps must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")

"""Network, loss and schedule configuration."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigurationError


@dataclass
class LossWeights:
    lambda1: float = 1.0  # MSE on both layers
    lambda2: float = 2.0  # gradient loss on transmission
    lambda3: float = 0.01  # perceptual loss on transmission

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ConfigurationError("loss weights must be nonnegative")


@dataclass
class NetworkConfig:
    channels: tuple[int, ...] = (8, 16, 16, 16, 16)
    blocks: tuple[int, ...] = (1, 1, 1, 1, 1)
    kernel_sizes: tuple[int, ...] = (1, 3, 5, 7)
    seed: int = 0
    vocab_size: int = 4096
    embed_dim: int = 64
    lcam_reduction: int = 4
    # ablation switches
    use_alcm: bool = True
    use_lsct: bool = True
    use_lcam_language: bool = True
    use_lcam_channel: bool = True
    loss_weights: LossWeights = field(default_factory=LossWeights)
    lr: float = 1e-4
    lr_drop_factor: float = 0.1
    lr_drop_fraction: float = 5 / 7

    def __post_init__(self):
        self.channels = tuple(int(c) for c in self.channels)
        self.blocks = tuple(int(n) for n in self.blocks)
        self.kernel_sizes = tuple(int(k) for k in self.kernel_sizes)
        if isinstance(self.loss_weights, dict):
            self.loss_weights = LossWeights(**self.loss_weights)
        if len(self.channels) != 5 or len(self.blocks) != 5:
            raise ConfigurationError("channels and blocks need exactly 5 levels")
        if min(self.channels) <= 0 or min(self.blocks) <= 0:
            raise ConfigurationError("channels and blocks must be positive")
        if not self.kernel_sizes or any(k <= 0 or k % 2 == 0 for k in self.kernel_sizes):
            raise ConfigurationError(f"kernel sizes must be positive and odd: {self.kernel_sizes}")
        if min(self.channels) < len(self.kernel_sizes):
            raise ConfigurationError("every level needs at least one channel per receptive-field group")

    @classmethod
    def full_scale(cls, **overrides) -> NetworkConfig:
        return cls(channels=(64, 128, 128, 160, 160), blocks=(2, 2, 2, 2, 2), **overrides)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channels"] = list(self.channels)
        d["blocks"] = list(self.blocks)
        d["kernel_sizes"] = list(self.kernel_sizes)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> NetworkConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> NetworkConfig:
        return cls.from_dict(json.loads(text))

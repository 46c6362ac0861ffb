"""Dual-stream encoder-decoder assembling the language, perception and separation branches."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .attention import ALCM, LASB, LSCT
from .config import NetworkConfig
from .errors import ConfigurationError, DimensionError
from .lang import LanguageEncoder, LanguageFeature
from .nn import Conv2d, Module
from .tensor import Tensor

LEVELS = 5


@dataclass
class LayerPrediction:
    T_hat: Tensor
    R_hat: Tensor


def _check_image(img: Tensor):
    if img.ndim != 3 or img.shape[0] != 3:
        raise DimensionError(f"expected a 3 x H x W image, got {img.shape}")
    step = 2 ** (LEVELS - 1)
    if img.shape[1] % step or img.shape[2] % step:
        raise ConfigurationError(f"image size {img.shape[1:]} is not divisible by {step}")


class PerceptionStub(Module):
    """Strided conv pyramid: level 0 keeps full resolution, each later level halves it."""

    def __init__(self, channels, rng: np.random.Generator):
        super().__init__()
        ins = (3,) + tuple(channels[:-1])
        self.convs = [Conv2d(ci, co, 3, rng, stride=1 if l == 0 else 2)
                      for l, (ci, co) in enumerate(zip(ins, channels))]

    def forward(self, img: Tensor) -> list[Tensor]:
        feats = []
        x = img
        for conv in self.convs:
            x = T.gelu(conv(x))
            feats.append(x)
        return feats


def perception_encode(img: Tensor, stub: PerceptionStub) -> list[Tensor]:
    _check_image(img)
    return stub(img)


def frozen_perception(channels=(8, 16, 16, 16, 16), seed: int = 1234) -> PerceptionStub:
    """Fixed-weight pyramid used as the perceptual-loss feature extractor."""
    stub = PerceptionStub(channels, np.random.default_rng(seed))
    for p in stub.parameters():
        p.requires_grad = False
    return stub


def _level(feat: LanguageFeature | None, level: int) -> Tensor | None:
    return None if feat is None else feat.per_level[level]


class ALANet(Module):
    def __init__(self, config: NetworkConfig | None = None):
        super().__init__()
        config = config or NetworkConfig()
        self.config = config
        rng = np.random.default_rng(config.seed)
        ch, nb = config.channels, config.blocks

        def lasb(c):
            return LASB(c, rng, config.kernel_sizes, config.lcam_reduction,
                        config.use_lcam_language, config.use_lcam_channel)

        self.language = LanguageEncoder(config, rng)
        self.perception = PerceptionStub(ch, rng)
        self.decouple_t = [LSCT(c, rng) for c in ch]
        self.decouple_r = [LSCT(c, rng) for c in ch]
        self.stem_t = Conv2d(3, ch[0], 3, rng)
        self.stem_r = Conv2d(3, ch[0], 3, rng)
        self.enc_alcm_t = [ALCM(c, rng) for c in ch]
        self.enc_alcm_r = [ALCM(c, rng) for c in ch]
        self.enc_blocks = [_Stack([lasb(ch[l]) for _ in range(nb[l])]) for l in range(LEVELS)]
        self.down_t = [Conv2d(ch[l], ch[l + 1], 3, rng, stride=2) for l in range(LEVELS - 1)]
        self.down_r = [Conv2d(ch[l], ch[l + 1], 3, rng, stride=2) for l in range(LEVELS - 1)]
        self.up_t = [Conv2d(ch[l + 1], ch[l], 3, rng) for l in range(LEVELS - 1)]
        self.up_r = [Conv2d(ch[l + 1], ch[l], 3, rng) for l in range(LEVELS - 1)]
        self.dec_alcm_t = [ALCM(ch[l], rng) for l in range(LEVELS - 1)]
        self.dec_alcm_r = [ALCM(ch[l], rng) for l in range(LEVELS - 1)]
        self.dec_blocks = [_Stack([lasb(ch[l]) for _ in range(nb[l])]) for l in range(LEVELS - 1)]
        self.head_t = Conv2d(ch[0], 3, 3, rng)
        self.head_r = Conv2d(ch[0], 3, 3, rng)

    def _calibrate(self, alcm: ALCM, x: Tensor, f_l: Tensor | None) -> Tensor | None:
        if f_l is None or not self.config.use_alcm:
            return f_l
        return alcm(x, f_l)[0]

    def decoupled_features(self, img: Tensor, lang_t, lang_r) -> tuple[list[Tensor], list[Tensor]]:
        pyramid = perception_encode(img, self.perception)
        if not self.config.use_lsct:
            return pyramid, pyramid
        feats_t = [m(f, _level(lang_t, l)) for l, (m, f) in enumerate(zip(self.decouple_t, pyramid))]
        feats_r = [m(f, _level(lang_r, l)) for l, (m, f) in enumerate(zip(self.decouple_r, pyramid))]
        return feats_t, feats_r

    def forward(self, img: Tensor, caption_t: str | None = None, caption_r: str | None = None) -> LayerPrediction:
        _check_image(img)
        lang_t = self.language(caption_t)
        lang_r = self.language(caption_r)
        pd_t, pd_r = self.decoupled_features(img, lang_t, lang_r)

        x_t = T.gelu(self.stem_t(img))
        x_r = T.gelu(self.stem_r(img))
        skips = []
        for l in range(LEVELS):
            if l == LEVELS - 1:
                x_t, x_r = T.add(x_t, pd_t[l]), T.add(x_r, pd_r[l])
            l_t = self._calibrate(self.enc_alcm_t[l], x_t, _level(lang_t, l))
            l_r = self._calibrate(self.enc_alcm_r[l], x_r, _level(lang_r, l))
            x_t, x_r = self.enc_blocks[l](x_t, x_r, l_t, l_r)
            if l < LEVELS - 1:
                skips.append((x_t, x_r))
                x_t = T.gelu(self.down_t[l](x_t))
                x_r = T.gelu(self.down_r[l](x_r))

        for l in reversed(range(LEVELS - 1)):
            s_t, s_r = skips[l]
            x_t = T.add(T.add(T.gelu(self.up_t[l](T.upsample_nearest(x_t))), s_t), pd_t[l])
            x_r = T.add(T.add(T.gelu(self.up_r[l](T.upsample_nearest(x_r))), s_r), pd_r[l])
            l_t = self._calibrate(self.dec_alcm_t[l], x_t, _level(lang_t, l))
            l_r = self._calibrate(self.dec_alcm_r[l], x_r, _level(lang_r, l))
            x_t, x_r = self.dec_blocks[l](x_t, x_r, l_t, l_r)

        return LayerPrediction(self.head_t(x_t), self.head_r(x_r))


class _Stack(Module):
    def __init__(self, blocks):
        super().__init__()
        self.blocks = blocks

    def forward(self, x_t, x_r, l_t, l_r):
        for b in self.blocks:
            x_t, x_r = b(x_t, x_r, l_t, l_r)
        return x_t, x_r


def alanet_forward(img: Tensor, caption_t: str | None, caption_r: str | None, model: ALANet) -> LayerPrediction:
    return model(img, caption_t, caption_r)

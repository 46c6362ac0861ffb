"""Language-aware attention blocks: LCAM, ALCM, LSCA/LSCT, MFDM and LASB.

Each language-conditioned block accepts ``f_l=None`` and then follows its
no-language path exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigurationError, DimensionError
from .nn import MLP, ChannelNorm, Conv2d, Linear, Module
from .tensor import Tensor


def _check_language(f_i: Tensor, f_l: Tensor):
    c = f_i.shape[0]
    if f_l.shape != (1, c):
        raise DimensionError(f"language feature {f_l.shape} does not match {c} image channels")


# ---------------------------------------------------------------- LCAM

@dataclass
class LcamState:
    a_chan: Tensor | None
    M_L: Tensor | None = None
    S_L: Tensor | None = None
    sigma_S: Tensor | None = None
    a_lang: Tensor | None = None


class LCAM(Module):
    """Competition between a language-guided and a visual channel gate.

    The language-image similarity matrix is the outer product of projected
    language and pooled image vectors; its column means, squashed by a
    sigmoid, weight the language gate while the complement weights the
    squeeze-excite channel gate.
    """

    def __init__(self, c: int, rng: np.random.Generator, reduction: int = 4,
                 use_language: bool = True, use_channel: bool = True):
        super().__init__()
        hidden = max(c // reduction, 1)
        self.chan_mlp = MLP(c, hidden, c, rng)
        self.proj_lang = Linear(c, c, rng)
        self.proj_img = Linear(c, c, rng)
        self.lang_mlp = MLP(c, hidden, c, rng)
        self.use_language = use_language
        self.use_channel = use_channel

    def forward(self, f_i: Tensor, f_l: Tensor | None = None) -> tuple[Tensor, LcamState]:
        pooled = T.pool(f_i, "spatial-average")
        a_chan = T.sigmoid(self.chan_mlp(pooled)) if self.use_channel else None
        if f_l is None or not self.use_language:
            if a_chan is None:
                return f_i, LcamState(None)
            return T.add(T.mul(f_i, a_chan), f_i), LcamState(a_chan)
        _check_language(f_i, f_l)
        u = self.proj_lang(f_l)
        v = self.proj_img(pooled)
        m_l = T.matmul(T.transpose(u), v)
        s_l = T.reshape(T.mean(m_l, axis=0), (1, -1))
        sigma = T.sigmoid(s_l)
        a_lang = T.sigmoid(self.lang_mlp(u))
        gate = T.mul(sigma, a_lang)
        if a_chan is not None:
            gate = T.add(gate, T.mul(T.complement(sigma), a_chan))
        out = T.add(T.mul(f_i, gate), f_i)
        return out, LcamState(a_chan, m_l, s_l, sigma, a_lang)


def lcam_forward(f_i, f_l, module: LCAM):
    return module(f_i, f_l)


# ---------------------------------------------------------------- ALCM

@dataclass
class AlcmState:
    sigma_c: Tensor
    calibrated: Tensor
    p_i: Tensor
    p_l: Tensor


class ALCM(Module):
    """Gate-controlled fusion of projected language and pooled image features."""

    def __init__(self, c: int, rng: np.random.Generator):
        super().__init__()
        self.proj_img = Linear(c, c, rng)
        self.proj_lang = Linear(c, c, rng)
        self.gate = Linear(2 * c, c, rng)

    def forward(self, f_i: Tensor, f_l: Tensor) -> tuple[Tensor, AlcmState]:
        _check_language(f_i, f_l)
        p_i = self.proj_img(T.pool(f_i, "spatial-average"))
        p_l = self.proj_lang(f_l)
        sigma = T.sigmoid(self.gate(T.concat([p_i, p_l], axis=1)))
        cal = T.add(T.mul(sigma, p_l), T.mul(T.complement(sigma), p_i))
        return cal, AlcmState(sigma, cal, p_i, p_l)


def alcm_forward(f_i, f_l, module: ALCM):
    return module(f_i, f_l)


# ---------------------------------------------------------------- LSCA / LSCT

@dataclass
class LscaState:
    F_S: Tensor
    F_C: Tensor
    M_SL: Tensor
    M_LC: Tensor
    M_SL_soft: Tensor
    M_LC_soft: Tensor
    M_LCSL: Tensor


class LSCA(Module):
    """Spatial x channel cross attention driven by a language vector.

    M_SL (C x C) couples language with the spatially pooled descriptor and
    M_LC (HW x C) couples each spatial position with language; both are
    row-softmaxed and multiplied into an HW x C map that modulates the input.
    """

    def __init__(self, c: int, rng: np.random.Generator):
        super().__init__()
        self.lang_global = Linear(c, c, rng)
        self.img_global = Linear(c, c, rng)
        self.pos_proj = Linear(1, 1, rng)
        self.lang_local = Linear(c, c, rng)

    def attend(self, f_i: Tensor, f_l: Tensor) -> tuple[Tensor, LscaState]:
        """Return the modulation term F_I * reshape(M_LCSL^T) and the state."""
        _check_language(f_i, f_l)
        c, h, w = f_i.shape
        f_s = T.pool(f_i, "spatial-average")
        f_c = T.pool(f_i, "channel-average")
        m_sl = T.matmul(T.transpose(self.lang_global(f_l)), self.img_global(f_s))
        m_lc = T.matmul(self.pos_proj(f_c), self.lang_local(f_l))
        sm_sl = T.softmax(m_sl, axis=-1)
        sm_lc = T.softmax(m_lc, axis=-1)
        m = T.matmul(sm_lc, sm_sl)
        mod = T.reshape(T.transpose(m), (c, h, w))
        return T.mul(f_i, mod), LscaState(f_s, f_c, m_sl, m_lc, sm_sl, sm_lc, m)

    def forward(self, f_i: Tensor, f_l: Tensor | None = None) -> tuple[Tensor, LscaState | None]:
        if f_l is None:
            return f_i, None
        term, state = self.attend(f_i, f_l)
        return T.add(f_i, term), state


def lsca_forward(f_i, f_l, module: LSCA):
    return module(f_i, f_l)


class LSCT(Module):
    """Transformer block around LSCA with a pre-normed pointwise feed-forward.

    LSCA sees the raw features: standardizing each channel over space first
    would pin its spatially pooled descriptor to the norm's shift vector.
    The second feed-forward layer starts at zero, so a freshly built block
    without language is the identity.
    """

    def __init__(self, c: int, rng: np.random.Generator, expansion: int = 2):
        super().__init__()
        self.lsca = LSCA(c, rng)
        self.norm2 = ChannelNorm(c)
        self.ff1 = Conv2d(c, expansion * c, 1, rng)
        self.ff2 = Conv2d(expansion * c, c, 1, rng, zero=True)

    def forward(self, f_i: Tensor, f_l: Tensor | None = None) -> Tensor:
        x = f_i
        if f_l is not None:
            term, _ = self.lsca.attend(x, f_l)
            x = T.add(x, term)
        return T.add(x, self.ff2(T.gelu(self.ff1(self.norm2(x)))))


def lsct_forward(f_i, f_l, module: LSCT):
    return module(f_i, f_l)


# ---------------------------------------------------------------- MFDM

@dataclass
class MfdmConfig:
    kernel_sizes: tuple[int, ...] = (1, 3, 5, 7)

    def groups(self, c: int) -> list[tuple[int, int]]:
        """Channel ranges per kernel size; the remainder goes to the smallest kernel."""
        n = len(self.kernel_sizes)
        if n == 0 or c < n:
            raise ConfigurationError(f"cannot split {c} channels into {n} receptive-field groups")
        if any(k <= 0 or k % 2 == 0 for k in self.kernel_sizes):
            raise ConfigurationError(f"kernel sizes must be positive and odd: {self.kernel_sizes}")
        sizes = [c // n] * n
        sizes[int(np.argmin(self.kernel_sizes))] += c % n
        bounds = np.concatenate([[0], np.cumsum(sizes)])
        return [(int(bounds[i]), int(bounds[i + 1])) for i in range(n)]


class MFDM(Module):
    """Per-group multi-kernel convolutions gated by the other stream."""

    def __init__(self, c: int, rng: np.random.Generator, cfg: MfdmConfig | None = None):
        super().__init__()
        self.cfg = cfg or MfdmConfig()
        self.bounds = self.cfg.groups(c)
        self.t_convs = [Conv2d(e - s, e - s, k, rng) for (s, e), k in zip(self.bounds, self.cfg.kernel_sizes)]
        self.r_convs = [Conv2d(e - s, e - s, k, rng) for (s, e), k in zip(self.bounds, self.cfg.kernel_sizes)]
        self.t_fuse = Conv2d(c, c, 1, rng)
        self.r_fuse = Conv2d(c, c, 1, rng)

    def _stream(self, x, other, convs, fuse):
        parts = [T.mul(conv(T.getitem(x, slice(s, e))), T.getitem(other, slice(s, e)))
                 for (s, e), conv in zip(self.bounds, convs)]
        fused = fuse(parts[0] if len(parts) == 1 else T.concat(parts, axis=0))
        return T.add(x, fused)

    def forward(self, f_t: Tensor, f_r: Tensor) -> tuple[Tensor, Tensor]:
        if f_t.shape != f_r.shape:
            raise DimensionError(f"stream shapes differ: {f_t.shape} vs {f_r.shape}")
        return (self._stream(f_t, f_r, self.t_convs, self.t_fuse),
                self._stream(f_r, f_t, self.r_convs, self.r_fuse))


def mfdm_forward(f_t, f_r, module: MFDM):
    return module(f_t, f_r)


# ---------------------------------------------------------------- LASB

class LASB(Module):
    """Per-stream LCAM followed by a joint MFDM."""

    def __init__(self, c: int, rng: np.random.Generator, kernel_sizes=(1, 3, 5, 7), reduction: int = 4,
                 use_language: bool = True, use_channel: bool = True):
        super().__init__()
        self.lcam_t = LCAM(c, rng, reduction, use_language, use_channel)
        self.lcam_r = LCAM(c, rng, reduction, use_language, use_channel)
        self.mfdm = MFDM(c, rng, MfdmConfig(tuple(kernel_sizes)))

    def forward(self, f_t: Tensor, f_r: Tensor, l_t: Tensor | None = None,
                l_r: Tensor | None = None) -> tuple[Tensor, Tensor]:
        if f_t.shape != f_r.shape:
            raise DimensionError(f"stream shapes differ: {f_t.shape} vs {f_r.shape}")
        f_t, _ = self.lcam_t(f_t, l_t)
        f_r, _ = self.lcam_r(f_r, l_r)
        return self.mfdm(f_t, f_r)


def lasb_forward(f_t, f_r, l_t, l_r, module: LASB):
    return module(f_t, f_r, l_t, l_r)

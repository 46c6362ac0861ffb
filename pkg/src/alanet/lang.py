"""Deterministic language encoder standing in for a pretrained text model.

Tokens are hashed into a seeded embedding table, mean-pooled, and mapped to
each level's channel width by a trainable affine adapter.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .config import NetworkConfig
from .nn import Linear, Module
from .tensor import Tensor

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation, dropping punctuation."""
    return _TOKEN.findall(text.lower())


def _bucket(token: str, size: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % size


class Vocabulary:
    def __init__(self, size: int = 4096, dim: int = 64, seed: int = 0):
        self.size = size
        self.dim = dim
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.table = rng.standard_normal((size, dim)) / np.sqrt(dim)

    def ids(self, tokens: list[str]) -> list[int]:
        return [_bucket(t, self.size) for t in tokens]

    def mean_embedding(self, tokens: list[str]) -> np.ndarray:
        # summing in sorted-id order makes the mean exactly order invariant
        ids = sorted(self.ids(tokens))
        acc = np.zeros(self.dim)
        for i in ids:
            acc = acc + self.table[i]
        return acc / len(ids)


@dataclass
class LanguageFeature:
    per_level: list[Tensor]
    token_count: int
    source_text: str


class LanguageEncoder(Module):
    def __init__(self, config: NetworkConfig, rng: np.random.Generator, vocab: Vocabulary | None = None):
        super().__init__()
        self.vocab = vocab or Vocabulary(config.vocab_size, config.embed_dim, config.seed)
        self.adapters = [Linear(self.vocab.dim, c, rng) for c in config.channels]

    def forward(self, text: str | None) -> LanguageFeature | None:
        if text is None:
            return None
        tokens = tokenize(text)
        if not tokens:
            # an empty caption carries no language at all
            return None
        emb = Tensor(self.vocab.mean_embedding(tokens).reshape(1, -1))
        return LanguageFeature([a(emb) for a in self.adapters], len(tokens), text)


def encode_language(text: str | None, encoder: LanguageEncoder) -> LanguageFeature | None:
    return encoder(text)

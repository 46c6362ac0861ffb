"""Flat binary checkpoints.

Layout (little endian)::

    b"ALNK"            magic
    u32                format version (1)
    u64                number of float64 parameter values
    f64 * count        parameters in declaration order
    u32                byte length of the config text
    utf-8 JSON         NetworkConfig
"""
from __future__ import annotations

import struct

import numpy as np

from .config import NetworkConfig
from .errors import ConfigurationError, ParseError
from .network import ALANet

MAGIC = b"ALNK"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")


def checkpoint_bytes(model: ALANet) -> bytes:
    params = model.parameters()
    flat = np.concatenate([p.data.ravel() for p in params]) if params else np.zeros(0)
    cfg = model.config.to_json().encode("utf-8")
    return b"".join([_HEADER.pack(MAGIC, VERSION, flat.size), flat.astype("<f8").tobytes(),
                     struct.pack("<I", len(cfg)), cfg])


def save_checkpoint(model: ALANet, path):
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(model))


def parse_checkpoint(buf: bytes) -> ALANet:
    if len(buf) < _HEADER.size:
        raise ParseError("truncated header", len(buf))
    magic, version, count = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise ParseError(f"unsupported version {version}", 4)
    pos = _HEADER.size
    end = pos + 8 * count
    if len(buf) < end + 4:
        raise ParseError("truncated parameter block", len(buf))
    values = np.frombuffer(buf, dtype="<f8", count=count, offset=pos).astype(np.float64)
    (n_cfg,) = struct.unpack_from("<I", buf, end)
    cfg_bytes = buf[end + 4:end + 4 + n_cfg]
    if len(cfg_bytes) != n_cfg:
        raise ParseError("truncated config text", len(buf))
    try:
        config = NetworkConfig.from_json(cfg_bytes.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise ParseError(f"invalid config text: {exc}", end + 4) from None
    model = ALANet(config)
    if model.num_parameters() != count:
        raise ConfigurationError(f"checkpoint holds {count} values, config implies {model.num_parameters()}")
    i = 0
    for p in model.parameters():
        p.data[...] = values[i:i + p.size].reshape(p.shape)
        i += p.size
    return model


def load_checkpoint(path) -> ALANet:
    with open(path, "rb") as fh:
        return parse_checkpoint(fh.read())

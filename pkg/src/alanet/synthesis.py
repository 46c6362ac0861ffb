"""Paired data synthesis by linear blending, plus binary PPM (P6) I/O."""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DimensionError, ParseError

ALPHA_RANGE = (0.6, 0.85)
SIGMA_RANGE = (1.0, 5.0)


# ---------------------------------------------------------------- PPM

def quantize(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_ppm(img, path):
    """Write a 3 x H x W float image in [0, 1] as 8-bit P6."""
    arr = np.asarray(getattr(img, "data", img), dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise DimensionError(f"expected 3 x H x W, got {arr.shape}")
    _, h, w = arr.shape
    payload = quantize(arr).transpose(1, 2, 0).tobytes()
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(payload)


def _next_token(buf: bytes, pos: int) -> tuple[bytes, int, int]:
    """Return (token, token start, position after the token)."""
    n = len(buf)
    while pos < n:
        ch = buf[pos:pos + 1]
        if ch == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ParseError("truncated header", start)
    return buf[start:pos], start, pos


def parse_ppm(buf: bytes) -> np.ndarray:
    magic, _, pos = _next_token(buf, 0)
    if magic != b"P6":
        raise ParseError(f"bad magic {magic!r}, expected b'P6'", 0)
    fields, starts = [], []
    for what in ("width", "height", "maxval"):
        tok, start, pos = _next_token(buf, pos)
        if not tok.isdigit():
            raise ParseError(f"invalid {what} {tok!r}", start)
        fields.append(int(tok))
        starts.append(start)
    w, h, maxval = fields
    if w <= 0 or h <= 0:
        raise ParseError("image dimensions must be positive", starts[0] if w <= 0 else starts[1])
    if maxval != 255:
        raise ParseError(f"unsupported maxval {maxval}, only 255 is accepted", starts[2])
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise ParseError("missing whitespace after maxval", pos)
    pos += 1
    need = w * h * 3
    data = buf[pos:pos + need]
    if len(data) < need:
        raise ParseError(f"truncated payload: need {need} bytes, have {len(data)}", pos + len(data))
    arr = np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3).transpose(2, 0, 1)
    return arr.astype(np.float64) / 255.0


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_ppm(fh.read())


# ---------------------------------------------------------------- blending

def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized kernel truncated at 3 sigma."""
    radius = max(int(math.ceil(3.0 * sigma)), 0)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    return k / k.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable blur with edge replication, so constants are preserved."""
    k = gaussian_kernel1d(sigma)
    r = k.size // 2
    out = np.empty_like(img, dtype=np.float64)
    for c in range(img.shape[0]):
        p = np.pad(img[c], r, mode="edge")
        rows = sum(k[i] * p[:, i:i + img.shape[2]] for i in range(k.size))
        out[c] = sum(k[i] * rows[i:i + img.shape[1], :] for i in range(k.size))
    return out


def blend(t: np.ndarray, r: np.ndarray, alpha: float, sigma_blur: float) -> np.ndarray:
    """alpha * T + (1 - alpha) * blur(R), clipped to [0, 1]."""
    t = np.asarray(t, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if t.shape != r.shape:
        raise DimensionError(f"T {t.shape} and R {r.shape} differ")
    return np.clip(alpha * t + (1.0 - alpha) * gaussian_blur(r, sigma_blur), 0.0, 1.0)


# ---------------------------------------------------------------- dataset

@dataclass
class ManifestRecord:
    id: str
    path_I: str
    path_T: str
    path_R: str
    alpha: float
    sigma: float
    caption_T: str | None = None
    caption_R: str | None = None
    source: str = "synthetic"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def read_manifest(path) -> tuple[list[ManifestRecord], Path]:
    path = Path(path)
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(ManifestRecord(**json.loads(line)))
            except (json.JSONDecodeError, TypeError) as exc:
                raise ParseError(f"{path}:{lineno}: bad manifest record: {exc}") from None
    return records, path.parent


def write_manifest(records, path):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def load_record(rec: ManifestRecord, root=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    base = Path(root) if root is not None else Path(".")
    return tuple(read_ppm(base / p) for p in (rec.path_I, rec.path_T, rec.path_R))


def center_crop_square(img: np.ndarray) -> np.ndarray:
    _, h, w = img.shape
    s = min(h, w)
    top, left = (h - s) // 2, (w - s) // 2
    return img[:, top:top + s, left:left + s]


def resize_nearest(img: np.ndarray, size: int) -> np.ndarray:
    _, h, w = img.shape
    ys = (np.arange(size) * h) // size
    xs = (np.arange(size) * w) // size
    return img[:, ys][:, :, xs]


def list_images(source_dir) -> list[Path]:
    return sorted(p for p in Path(source_dir).iterdir() if p.suffix.lower() == ".ppm")


def load_captions(source_dir) -> dict[str, str]:
    """Optional ``captions.jsonl`` with {"image": file name, "caption": text} lines."""
    path = Path(source_dir) / "captions.jsonl"
    if not path.exists():
        return {}
    out = {}
    with open(path) as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                out[d["image"]] = d["caption"]
    return out


def make_dataset(source_dir, n_pairs: int, seed: int, out_dir, patch: int = 32,
                 captions: dict[str, str] | None = None, source: str = "synthetic") -> list[ManifestRecord]:
    """Blend random T/R pairs from ``source_dir`` into ``out_dir``.

    Writes ``{id}_I.ppm``, ``{id}_T.ppm``, ``{id}_R.ppm`` per pair and a
    ``manifest.jsonl`` with paths relative to ``out_dir``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records: list[ManifestRecord] = []
    if n_pairs > 0:
        images = list_images(source_dir)
        if len(images) < 2:
            raise ConfigurationError(f"need at least 2 images in {source_dir}, found {len(images)}")
        captions = load_captions(source_dir) if captions is None else captions
        rng = np.random.default_rng(seed)
        cache: dict[Path, np.ndarray] = {}

        def prepared(p):
            if p not in cache:
                cache[p] = resize_nearest(center_crop_square(read_ppm(p)), patch)
            return cache[p]

        for i in range(n_pairs):
            ti, ri = rng.choice(len(images), size=2, replace=False)
            alpha = float(rng.uniform(*ALPHA_RANGE))
            sigma = float(rng.uniform(*SIGMA_RANGE))
            t_img, r_img = prepared(images[ti]), prepared(images[ri])
            i_img = blend(t_img, r_img, alpha, sigma)
            pid = f"{i:05d}"
            names = {k: f"{pid}_{k}.ppm" for k in "ITR"}
            write_ppm(i_img, out_dir / names["I"])
            write_ppm(t_img, out_dir / names["T"])
            write_ppm(r_img, out_dir / names["R"])
            records.append(ManifestRecord(pid, names["I"], names["T"], names["R"], alpha, sigma,
                                          captions.get(images[ti].name), captions.get(images[ri].name), source))
    write_manifest(records, out_dir / "manifest.jsonl")
    return records


def make_source_images(out_dir, n: int, size: int = 48, seed: int = 0, captions: bool = True) -> list[Path]:
    """Write ``n`` smooth random test scenes (plus optional captions) for demos and tests."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / size
    shapes = ["circle", "square", "stripe"]
    colours = ["red", "green", "blue"]
    paths, lines = [], []
    for i in range(n):
        img = np.empty((3, size, size))
        for c in range(3):
            fx, fy, ph = rng.uniform(0.5, 4.0, 3)
            img[c] = 0.5 + 0.25 * np.sin(2 * np.pi * (fx * xx + fy * yy) + ph)
        shape = shapes[i % 3]
        col = int(rng.integers(3))
        cy, cx = rng.uniform(0.25, 0.75, 2)
        if shape == "circle":
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 < 0.04
        elif shape == "square":
            mask = (abs(yy - cy) < 0.15) & (abs(xx - cx) < 0.15)
        else:
            mask = abs(xx - cx) < 0.08
        img[col][mask] = 0.95
        p = out_dir / f"scene{i:03d}.ppm"
        write_ppm(img, p)
        paths.append(p)
        lines.append({"image": p.name, "caption": f"A {colours[col]} {shape} on a striped wall"})
    if captions:
        with open(out_dir / "captions.jsonl", "w") as fh:
            for d in lines:
                fh.write(json.dumps(d) + "\n")
    return paths

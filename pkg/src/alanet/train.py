"""Losses, Adam, the training loop and image-quality evaluation."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .config import LossWeights, NetworkConfig
from .errors import ConfigurationError, DimensionError
from .metrics import psnr, ssim
from .network import ALANet, LayerPrediction, PerceptionStub, frozen_perception
from .synthesis import ManifestRecord, load_record, read_manifest
from .tensor import Tensor

log = logging.getLogger(__name__)

TRACE_FIELDS = ["iteration", "total", "mse_T", "mse_R", "grad", "perceptual"]


class TrainingError(RuntimeError):
    pass


# ---------------------------------------------------------------- losses

def _same_shape(x: Tensor, y: Tensor):
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")


def mse(x: Tensor, y: Tensor) -> Tensor:
    _same_shape(x, y)
    return T.mean(T.square(T.sub(x, y)))


def grad_loss(x: Tensor, y: Tensor) -> Tensor:
    """Mean |d(x) - d(y)| over forward differences along height plus along width.

    The last row/column difference is taken as 0, so each mean is over the
    full C x H x W element count.
    """
    _same_shape(x, y)
    n = x.size
    d = T.sub(x, y)
    dh = T.sub(T.getitem(d, (slice(None), slice(1, None))), T.getitem(d, (slice(None), slice(None, -1))))
    dw = T.sub(T.getitem(d, (Ellipsis, slice(1, None))), T.getitem(d, (Ellipsis, slice(None, -1))))
    return T.add(T.scale(T.sum_(T.absolute(dh)), 1.0 / n), T.scale(T.sum_(T.absolute(dw)), 1.0 / n))


def perceptual_loss(x: Tensor, y: Tensor, stub: PerceptionStub) -> Tensor:
    """Mean absolute feature difference, averaged over the pyramid levels."""
    _same_shape(x, y)
    fx, fy = stub(x), stub(y)
    terms = [T.mean(T.absolute(T.sub(a, b))) for a, b in zip(fx, fy)]
    total = terms[0]
    for t in terms[1:]:
        total = T.add(total, t)
    return T.scale(total, 1.0 / len(terms))


@dataclass
class LossBreakdown:
    total: Tensor
    mse_T: float
    mse_R: float
    grad: float
    perceptual: float


def loss_terms(pred: LayerPrediction, gt_t: Tensor, gt_r: Tensor, weights: LossWeights,
               stub: PerceptionStub) -> LossBreakdown:
    m_t = mse(pred.T_hat, gt_t)
    m_r = mse(pred.R_hat, gt_r)
    total = T.scale(T.add(m_t, m_r), weights.lambda1)
    g = p = None
    if weights.lambda2:
        g = grad_loss(pred.T_hat, gt_t)
        total = T.add(total, T.scale(g, weights.lambda2))
    if weights.lambda3:
        p = perceptual_loss(pred.T_hat, gt_t, stub)
        total = T.add(total, T.scale(p, weights.lambda3))
    return LossBreakdown(total, m_t.item(), m_r.item(),
                         0.0 if g is None else g.item(), 0.0 if p is None else p.item())


def loss_total(pred: LayerPrediction, gt_t: Tensor, gt_r: Tensor, weights: LossWeights | None = None,
               stub: PerceptionStub | None = None) -> Tensor:
    weights = weights or LossWeights()
    stub = stub or frozen_perception()
    return loss_terms(pred, gt_t, gt_r, weights, stub).total


# ---------------------------------------------------------------- optimizer

@dataclass
class OptimizerState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def for_params(cls, params) -> OptimizerState:
        return cls([np.zeros_like(p.data) for p in params], [np.zeros_like(p.data) for p in params])


def adam_step(params, grads, state: OptimizerState, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> OptimizerState:
    """In-place bias-corrected Adam update; ``None`` gradients count as zero."""
    state.step += 1
    bc1 = 1.0 - beta1 ** state.step
    bc2 = 1.0 - beta2 ** state.step
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            g = np.zeros_like(p.data)
        state.m[i] = beta1 * state.m[i] + (1 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1 - beta2) * g * g
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return state


class Adam:
    def __init__(self, params, lr: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.state = OptimizerState.for_params(self.params)

    def step(self):
        adam_step(self.params, [p.grad for p in self.params], self.state, self.lr,
                  self.beta1, self.beta2, self.eps)


# ---------------------------------------------------------------- training

CAPTION_MODES = ("both", "one", "none")


def select_captions(record: ManifestRecord, mode: str) -> tuple[str | None, str | None]:
    if mode == "both":
        return record.caption_T, record.caption_R
    if mode == "one":
        return record.caption_T, None
    if mode == "none":
        return None, None
    raise ConfigurationError(f"unknown caption mode {mode!r}")


@dataclass
class TrainResult:
    model: ALANet
    trace: list[dict] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)


def learning_rate(config: NetworkConfig, epoch: int, epochs: int, lr: float | None = None) -> float:
    base = config.lr if lr is None else lr
    if epoch >= round(epochs * config.lr_drop_fraction):
        return base * config.lr_drop_factor
    return base


def _load_all(records: list[ManifestRecord], root) -> tuple[list, list[str]]:
    loaded, skipped = [], []
    for rec in records:
        try:
            loaded.append((rec, *load_record(rec, root)))
        except (OSError, ValueError) as exc:
            log.warning("skipping manifest entry %s: %s", rec.id, exc)
            skipped.append(rec.id)
    return loaded, skipped


def train(config: NetworkConfig, manifest, epochs: int, seed: int = 0, *, lr: float | None = None,
          source_weights: dict[str, float] | None = None, augment: bool = True, caption_mode: str = "both",
          model: ALANet | None = None) -> TrainResult:
    """Batch-size-1 Adam training over a manifest path or a list of records.

    One epoch visits ``len(manifest)`` samples: a seeded permutation, or draws
    by source when ``source_weights`` is given. Horizontal flips are applied
    to input and both targets together.
    """
    if isinstance(manifest, (list, tuple)):
        records, root = list(manifest), None
    else:
        records, root = read_manifest(manifest)
    if not records:
        raise ConfigurationError("manifest is empty")
    loaded, skipped = _load_all(records, root)
    if not loaded:
        raise TrainingError("every manifest entry was unreadable")

    model = model or ALANet(config)
    stub = frozen_perception(config.channels)
    params = model.parameters()
    opt = Adam(params, lr=config.lr if lr is None else lr)
    rng = np.random.default_rng(seed)
    by_source: dict[str, list[int]] = {}
    for i, (rec, *_) in enumerate(loaded):
        by_source.setdefault(rec.source, []).append(i)

    result = TrainResult(model, skipped=skipped)
    it = 0
    for epoch in range(epochs):
        opt.lr = learning_rate(config, epoch, epochs, lr)
        if source_weights:
            names = [s for s in source_weights if s in by_source]
            if not names:
                raise ConfigurationError("no manifest entries match the source weights")
            w = np.array([source_weights[s] for s in names], dtype=float)
            picks = rng.choice(len(names), size=len(loaded), p=w / w.sum())
            order = [by_source[names[k]][rng.integers(len(by_source[names[k]]))] for k in picks]
        else:
            order = rng.permutation(len(loaded))
        for idx in order:
            rec, img, t_gt, r_gt = loaded[idx]
            if augment and rng.random() < 0.5:
                img, t_gt, r_gt = (a[..., ::-1].copy() for a in (img, t_gt, r_gt))
            cap_t, cap_r = select_captions(rec, caption_mode)
            model.zero_grad()
            pred = model(Tensor(img), cap_t, cap_r)
            terms = loss_terms(pred, Tensor(t_gt), Tensor(r_gt), config.loss_weights, stub)
            terms.total.backward()
            opt.step()
            it += 1
            result.trace.append({"iteration": it, "total": terms.total.item(), "mse_T": terms.mse_T,
                                 "mse_R": terms.mse_R, "grad": terms.grad, "perceptual": terms.perceptual})
    return result


def write_trace(trace: list[dict], path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRACE_FIELDS)
        w.writeheader()
        for row in trace:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


# ---------------------------------------------------------------- evaluation

def predict(model: ALANet, img: np.ndarray, caption_t=None, caption_r=None) -> tuple[np.ndarray, np.ndarray]:
    """Inference with outputs clamped to [0, 1]."""
    with T.no_grad():
        pred = model(Tensor(img), caption_t, caption_r)
    return np.clip(pred.T_hat.data, 0, 1), np.clip(pred.R_hat.data, 0, 1)


def evaluate(model: ALANet, manifest, caption_mode: str = "both") -> list[dict]:
    if isinstance(manifest, (list, tuple)):
        records, root = list(manifest), None
    else:
        records, root = read_manifest(manifest)
    rows = []
    for rec in records:
        img, t_gt, _ = load_record(rec, root)
        t_hat, _ = predict(model, img, *select_captions(rec, caption_mode))
        rows.append({"image_id": rec.id, "psnr": psnr(t_hat, t_gt), "ssim": ssim(t_hat, t_gt)})
    return rows


def write_eval(rows: list[dict], path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["image_id", "psnr", "ssim"])
        w.writeheader()
        for r in rows:
            w.writerow({"image_id": r["image_id"], "psnr": repr(r["psnr"]), "ssim": repr(r["ssim"])})

"""The standard gradient-check suite over every op and module."""
from __future__ import annotations

import numpy as np

from . import tensor as T
from .attention import ALCM, LASB, LCAM, LSCA, LSCT, MFDM
from .config import LossWeights, NetworkConfig
from .gradcheck import GradCheckReport, grad_check
from .lang import LanguageEncoder
from .network import ALANet, LayerPrediction, PerceptionStub, frozen_perception
from .tensor import Parameter, Tensor


def _rand(rng, *shape, scale=1.0) -> Parameter:
    return Parameter(rng.standard_normal(shape) * scale)


def _feat(rng, *shape) -> Parameter:
    """Nonnegative feature-map-like input; zero-mean inputs make pooled descriptors vanish."""
    return Parameter(rng.random(shape))


def _probe(rng, shape):
    """Fixed random weights so the checked scalar is sum(w * out)."""
    return Tensor(rng.standard_normal(shape))


def _weighted(out: Tensor, w: Tensor) -> Tensor:
    return T.sum_(T.mul(out, w))


def _randomize(module, rng, scale=0.5):
    # zero-initialized layers would hide their upstream gradients
    for p in module.parameters():
        p.data[...] = rng.standard_normal(p.shape) * scale


def op_checks(rng, tol: float) -> list[GradCheckReport]:
    reports = []

    def check(name, fn, inputs, out_shape, **kw):
        w = _probe(rng, out_shape)
        reports.append(grad_check(lambda *xs: _weighted(fn(*xs), w), inputs, tol=tol, name=name, **kw))

    a, b = _rand(rng, 3, 4), _rand(rng, 4, 2)
    check("matmul", T.matmul, [a, b], (3, 2))
    x, k, bias = _rand(rng, 2, 5, 5), _rand(rng, 3, 2, 3, 3), _rand(rng, 3)
    check("conv2d", lambda x, k, b: T.conv2d(x, k, b), [x, k, bias], (3, 5, 5))
    x2, k2 = _rand(rng, 2, 6, 6), _rand(rng, 2, 2, 5, 5)
    check("conv2d_stride2", lambda x, k: T.conv2d(x, k, stride=2), [x2, k2], (2, 3, 3))
    s = _rand(rng, 3, 5, scale=3.0)
    check("softmax_axis-1", lambda s: T.softmax(s, -1), [s], (3, 5))
    check("softmax_axis0", lambda s: T.softmax(s, 0), [s], (3, 5))
    check("sigmoid", T.sigmoid, [_rand(rng, 4, 3, scale=3.0)], (4, 3))
    # gelu' vanishes near -0.75; a relative error there measures only roundoff
    g = rng.uniform(-3.0, 3.0, (4, 3))
    g[np.abs(g + 0.75) < 0.25] += 0.5
    check("gelu", T.gelu, [Parameter(g)], (4, 3))
    img = _rand(rng, 3, 4, 4)
    check("pool_spatial_average", lambda x: T.pool(x, "spatial-average"), [img], (1, 3))
    check("pool_channel_average", lambda x: T.pool(x, "channel-average"), [img], (16, 1))
    check("pool_spatial_max", lambda x: T.pool(x, "spatial-max"), [img], (1, 3))
    xl, wl, bl = _rand(rng, 2, 4), _rand(rng, 4, 3), _rand(rng, 3)
    check("linear", T.linear, [xl, wl, bl], (2, 3))
    big, gate = _rand(rng, 2, 2, 2), _rand(rng, 1, 2)
    check("elementwise_add_gate", T.add, [big, gate], (2, 2, 2))
    check("elementwise_mul_gate", T.mul, [big, gate], (2, 2, 2))
    check("elementwise_complement", T.complement, [gate], (1, 2))
    check("square_abs", lambda x: T.absolute(T.square(x) - 0.3), [_rand(rng, 3, 3)], (3, 3))
    check("concat_getitem", lambda a, b: T.getitem(T.concat([a, b], axis=0), slice(1, 4)),
          [_rand(rng, 2, 3), _rand(rng, 3, 3)], (3, 3))
    check("upsample_nearest", T.upsample_nearest, [_rand(rng, 2, 2, 3)], (2, 4, 6))
    check("channel_standardize", T.channel_standardize, [_rand(rng, 3, 3, 3)], (3, 3, 3))
    check("reshape_transpose", lambda m: T.reshape(T.transpose(m), (2, 6)), [_rand(rng, 3, 4)], (2, 6))
    return reports


def module_checks(rng, tol: float, c: int = 8, hw: int = 8, max_elements: int | None = 48) -> list[GradCheckReport]:
    reports = []
    f_i = _feat(rng, 2, 4, 4)
    f_l = _rand(rng, 1, 2)

    def run(name, fn, inputs, out_shape, module=None):
        w = _probe(rng, out_shape)
        params = module.parameters() if module is not None else []
        reports.append(grad_check(lambda *xs: _weighted(fn(), w), list(inputs) + params, tol=tol, name=name,
                                  max_elements=max_elements, h=1e-4))

    lcam = LCAM(2, rng)
    _randomize(lcam, rng)
    run("lcam_language", lambda: lcam(f_i, f_l)[0], [f_i, f_l], (2, 4, 4), lcam)
    run("lcam_no_language", lambda: lcam(f_i, None)[0], [f_i], (2, 4, 4), lcam)
    alcm = ALCM(2, rng)
    run("alcm", lambda: alcm(f_i, f_l)[0], [f_i, f_l], (1, 2), alcm)
    lsca = LSCA(2, rng)
    run("lsca", lambda: lsca(f_i, f_l)[0], [f_i, f_l], (2, 4, 4), lsca)
    lsct = LSCT(2, rng)
    _randomize(lsct, rng)
    run("lsct", lambda: lsct(f_i, f_l), [f_i, f_l], (2, 4, 4), lsct)

    f_t, f_r = _feat(rng, c, hw, hw), _feat(rng, c, hw, hw)
    l_t, l_r = _feat(rng, 1, c), _feat(rng, 1, c)
    mfdm = MFDM(c, rng)
    run("mfdm", lambda: T.concat(list(mfdm(f_t, f_r)), axis=0), [f_t, f_r], (2 * c, hw, hw), mfdm)
    lasb = LASB(c, rng)
    run("lasb", lambda: T.concat(list(lasb(f_t, f_r, l_t, l_r)), axis=0), [f_t, f_r, l_t, l_r],
        (2 * c, hw, hw), lasb)

    enc = LanguageEncoder(NetworkConfig(channels=(4, 4, 4, 4, 4)), rng)
    reports.append(grad_check(lambda *ps: _sum_levels(enc("some light spots on glass")), enc.parameters(),
                              tol=tol, name="language_adapters", max_elements=max_elements, h=1e-4))

    stub = PerceptionStub((4, 4, 4, 4, 4), rng)
    img = _feat(rng, 3, 16, 16)
    w0, w1 = _probe(rng, (4, 16, 16)), _probe(rng, (4, 8, 8))
    reports.append(grad_check(lambda *xs: T.add(_weighted(stub(img)[0], w0), _weighted(stub(img)[1], w1)),
                              [img] + stub.parameters()[:4], tol=tol, name="perception_two_levels",
                              max_elements=max_elements, h=1e-4))

    pred_t, pred_r = _rand(rng, 3, 8, 8, scale=0.3), _rand(rng, 3, 8, 8, scale=0.3)
    gt_t, gt_r = Tensor(rng.random((3, 8, 8))), Tensor(rng.random((3, 8, 8)))
    pstub = frozen_perception((4, 4, 4, 4, 4))
    reports.append(grad_check(
        lambda a, b: _loss(LayerPrediction(a, b), gt_t, gt_r, pstub), [pred_t, pred_r], tol=tol,
        name="loss_total", h=1e-6))
    return reports


def _sum_levels(feat) -> Tensor:
    total = T.sum_(feat.per_level[0])
    for t in feat.per_level[1:]:
        total = T.add(total, T.sum_(t))
    return total


def _loss(pred, gt_t, gt_r, stub):
    from .train import loss_total
    return loss_total(pred, gt_t, gt_r, LossWeights(), stub)


def end_to_end_check(rng, tol: float = 1e-3, size: int = 16, max_elements: int = 1) -> GradCheckReport:
    """Total loss of a small network at 3 x size x size, sampling a few entries per parameter."""
    from .train import loss_total
    cfg = NetworkConfig(channels=(4, 4, 4, 4, 4), seed=int(rng.integers(1 << 30)))
    model = ALANet(cfg)
    img = Tensor(rng.random((3, size, size)))
    gt_t, gt_r = Tensor(rng.random((3, size, size))), Tensor(rng.random((3, size, size)))
    stub = frozen_perception(cfg.channels)

    def f(*_):
        return loss_total(model(img, "a red car near a window", "some light spots"), gt_t, gt_r,
                          cfg.loss_weights, stub)

    # tiny-gradient adapter entries need the larger step to clear roundoff
    return grad_check(f, model.parameters(), tol=tol, name="end_to_end_total_loss",
                      max_elements=max_elements, h=1e-4)


def run_suite(tol: float = 1e-4, e2e_tol: float = 1e-3, seed: int = 0) -> list[GradCheckReport]:
    rng = np.random.default_rng(seed)
    reports = op_checks(rng, tol)
    reports += module_checks(rng, tol)
    reports.append(end_to_end_check(rng, e2e_tol))
    return reports

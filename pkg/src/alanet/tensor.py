"""Dense float64 tensor with reverse-mode gradients.

Images use the C x H x W layout. Every operation records a closure that maps
the output gradient to gradients for its parents; ``Tensor.backward`` walks
the graph in reverse topological order.

Broadcasting is deliberately narrow: equal shapes, a scalar, or a channel gate
of shape (1, C), (C,) or (C, 1, 1) applied to a C x H x W tensor.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import DimensionError, UnsupportedKernelError


_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Evaluate without recording the graph."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(())
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def detach(self) -> Tensor:
        return Tensor(self.data.copy())

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into every leaf's ``grad``."""
        if grad is None:
            if self.data.size != 1:
                raise DimensionError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))

        grads = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for p, pg in zip(node._parents, node._backward(g)):
                if pg is None or not p.requires_grad:
                    continue
                if id(p) in grads:
                    grads[id(p)] = grads[id(p)] + pg
                else:
                    grads[id(p)] = pg

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    @property
    def T(self) -> Tensor:
        return transpose(self)


class Parameter(Tensor):
    """Trainable leaf tensor."""

    __slots__ = ()

    def __init__(self, data, name: str | None = None):
        super().__init__(data, requires_grad=True, name=name)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data: np.ndarray, parents: Sequence[Tensor], backward: Callable) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise FloatingPointError("operation produced non-finite values")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = None
    out.requires_grad = _grad_enabled and any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward
    else:
        out._parents = ()
        out._backward = None
    return out


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


# ---------------------------------------------------------------- broadcasting

def _gate_view(small: np.ndarray, big_shape: tuple[int, ...]) -> np.ndarray | None:
    """Reshape a channel gate so it broadcasts over C x H x W, or None."""
    if len(big_shape) != 3:
        return None
    c = big_shape[0]
    if small.shape in ((1, c), (c,), (c, 1, 1)):
        return small.reshape(c, 1, 1)
    return None


def _broadcast_pair(a: Tensor, b: Tensor):
    """Return (a_view, b_view, reduce_a, reduce_b) for the allowed patterns."""
    if a.shape == b.shape:
        return a.data, b.data, None, None
    if b.ndim == 0 or b.shape == (1,):
        return a.data, b.data.reshape(()), None, "scalar"
    if a.ndim == 0 or a.shape == (1,):
        return a.data.reshape(()), b.data, "scalar", None
    gv = _gate_view(b.data, a.shape)
    if gv is not None:
        return a.data, gv, None, "gate"
    gv = _gate_view(a.data, b.shape)
    if gv is not None:
        return gv, b.data, "gate", None
    raise DimensionError(f"cannot broadcast shapes {a.shape} and {b.shape}")


def _reduce(g: np.ndarray, mode, shape) -> np.ndarray:
    if mode is None:
        return g
    if mode == "scalar":
        return np.asarray(g.sum()).reshape(shape)
    return g.sum(axis=(1, 2)).reshape(shape)


# ---------------------------------------------------------------- elementwise

def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    x, y, ra, rb = _broadcast_pair(a, b)

    def backward(g):
        return _reduce(g, ra, a.shape), _reduce(g, rb, b.shape)

    return _result(x + y, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    x, y, ra, rb = _broadcast_pair(a, b)

    def backward(g):
        return _reduce(g, ra, a.shape), _reduce(-g, rb, b.shape)

    return _result(x - y, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    x, y, ra, rb = _broadcast_pair(a, b)

    def backward(g):
        return _reduce(g * y, ra, a.shape), _reduce(g * x, rb, b.shape)

    return _result(x * y, (a, b), backward)


def complement(a: Tensor) -> Tensor:
    """1 - a."""

    def backward(g):
        return (-g,)

    return _result(1.0 - a.data, (a,), backward)


def scale(a: Tensor, factor: float) -> Tensor:
    def backward(g):
        return (g * factor,)

    return _result(a.data * factor, (a,), backward)


def elementwise(a: Tensor, b: Tensor | None = None, op: str = "add") -> Tensor:
    if op == "add":
        return add(a, b)
    if op == "mul":
        return mul(a, b)
    if op == "complement":
        return complement(a)
    raise ValueError(f"unknown elementwise op {op!r}")


def square(a: Tensor) -> Tensor:
    x = a.data

    def backward(g):
        return (2.0 * x * g,)

    return _result(x * x, (a,), backward)


def absolute(a: Tensor) -> Tensor:
    x = a.data

    def backward(g):
        return (np.sign(x) * g,)

    return _result(np.abs(x), (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)

    def backward(g):
        return (g * out * (1.0 - out),)

    return _result(out, (a,), backward)


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(a: Tensor) -> Tensor:
    """tanh approximation; smooth, so finite differences behave everywhere."""
    x = a.data
    inner = _GELU_C * (x + 0.044715 * x ** 3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def backward(g):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * x ** 2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner),)

    return _result(out, (a,), backward)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def backward(g):
        return (g * mask,)

    return _result(a.data * mask, (a,), backward)


# ---------------------------------------------------------------- shape ops

def reshape(a: Tensor, shape) -> Tensor:
    shape = np.empty(a.size).reshape(shape).shape if -1 in tuple(shape) else tuple(shape)
    if int(np.prod(shape)) != a.size:
        raise DimensionError(f"cannot reshape {a.shape} to {shape}")

    def backward(g):
        return (g.reshape(a.shape),)

    return _result(a.data.reshape(shape), (a,), backward)


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise DimensionError("transpose expects a 2-D tensor")

    def backward(g):
        return (g.T,)

    return _result(np.ascontiguousarray(a.data.T), (a,), backward)


def getitem(a: Tensor, idx) -> Tensor:
    def backward(g):
        full = np.zeros_like(a.data)
        full[idx] += g
        return (full,)

    return _result(np.array(a.data[idx]), (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise DimensionError(str(exc)) from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _result(data, tensors, backward)


def upsample_nearest(a: Tensor, factor: int = 2) -> Tensor:
    c, h, w = a.shape

    def backward(g):
        return (g.reshape(c, h, factor, w, factor).sum(axis=(2, 4)),)

    out = np.repeat(np.repeat(a.data, factor, axis=1), factor, axis=2)
    return _result(out, (a,), backward)


def flip_horizontal(a: Tensor) -> Tensor:
    def backward(g):
        return (g[..., ::-1].copy(),)

    return _result(a.data[..., ::-1].copy(), (a,), backward)


# ---------------------------------------------------------------- reductions

def sum_(a: Tensor, axis=None) -> Tensor:
    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _result(np.asarray(a.data.sum(axis=axis)), (a,), backward)


def mean(a: Tensor, axis=None) -> Tensor:
    n = a.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
    return scale(sum_(a, axis), 1.0 / n)


def pool(x: Tensor, mode: str = "spatial-average") -> Tensor:
    """Pool a C x H x W tensor.

    spatial-average / spatial-max give (1, C); channel-average gives (HW, 1).
    """
    if x.ndim != 3 or 0 in x.shape:
        raise DimensionError(f"pool expects a nonempty C x H x W tensor, got {x.shape}")
    c, h, w = x.shape
    if mode == "spatial-average":
        n = h * w
        out = x.data.reshape(c, n).sum(axis=1).reshape(1, c) / n

        def backward(g):
            return (np.broadcast_to(g.reshape(c, 1, 1) / n, x.shape).copy(),)

    elif mode == "channel-average":
        out = x.data.sum(axis=0).reshape(h * w, 1) / c

        def backward(g):
            return (np.broadcast_to(g.reshape(1, h, w) / c, x.shape).copy(),)

    elif mode == "spatial-max":
        flat = x.data.reshape(c, h * w)
        arg = flat.argmax(axis=1)
        out = flat[np.arange(c), arg].reshape(1, c)

        def backward(g):
            full = np.zeros((c, h * w))
            full[np.arange(c), arg] = g.reshape(c)
            return (full.reshape(x.shape),)

    else:
        raise ValueError(f"unknown pool mode {mode!r}")
    return _result(out, (x,), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"axis {axis} out of range for shape {x.shape}")
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _result(out, (x,), backward)


# ---------------------------------------------------------------- linear algebra

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shape mismatch {a.shape} x {b.shape}")
    x, y = a.data, b.data

    def backward(g):
        return g @ y.T, x.T @ g

    return _result(x @ y, (a, b), backward)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """x @ weight + bias over the trailing dimension."""
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise DimensionError(f"linear: input {x.shape} does not match weight {weight.shape}")
    if bias is not None and bias.shape != (weight.shape[1],):
        raise DimensionError(f"linear: bias {bias.shape} does not match weight {weight.shape}")
    xd, wd = x.data, weight.data
    out = xd @ wd
    if bias is not None:
        out = out + bias.data

    def backward(g):
        g2 = g.reshape(-1, g.shape[-1])
        x2 = xd.reshape(-1, xd.shape[-1])
        gx = (g2 @ wd.T).reshape(xd.shape)
        gw = x2.T @ g2
        gb = g2.sum(axis=0) if bias is not None else None
        return gx, gw, gb

    parents = (x, weight, bias) if bias is not None else (x, weight)
    return _result(out, parents, backward)


def conv2d(x: Tensor, kernel: Tensor, bias: Tensor | None = None, stride: int = 1) -> Tensor:
    """Cross-correlation with zero "same" padding (output H/stride x W/stride)."""
    if x.ndim != 3 or kernel.ndim != 4:
        raise DimensionError(f"conv2d expects C x H x W input and 4-D kernel, got {x.shape}, {kernel.shape}")
    c_out, c_in, kh, kw = kernel.shape
    if kh != kw:
        raise UnsupportedKernelError("kernel must be square")
    if kh % 2 == 0:
        raise UnsupportedKernelError(f"even kernel size {kh} is not supported")
    if x.shape[0] != c_in:
        raise DimensionError(f"conv2d: input has {x.shape[0]} channels, kernel expects {c_in}")
    if bias is not None and bias.shape != (c_out,):
        raise DimensionError(f"conv2d: bias shape {bias.shape} != ({c_out},)")
    pad = kh // 2
    _, h, w = x.shape
    out_h = (h + 2 * pad - kh) // stride + 1
    out_w = (w + 2 * pad - kw) // stride + 1
    xp = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad))) if pad else np.ascontiguousarray(x.data)
    wd = np.ascontiguousarray(kernel.data)
    out = kernels.conv2d_forward(xp, wd, stride, out_h, out_w)
    if bias is not None:
        out = out + bias.data.reshape(c_out, 1, 1)

    def backward(g):
        gxp, gw = kernels.conv2d_backward(xp, wd, np.ascontiguousarray(g), stride)
        gx = gxp[:, pad:pad + h, pad:pad + w] if pad else gxp
        if bias is None:
            return gx, gw
        return gx, gw, g.sum(axis=(1, 2))

    parents = (x, kernel) if bias is None else (x, kernel, bias)
    return _result(out, parents, backward)


def channel_standardize(x: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-channel (x - mean) / sqrt(var + eps) over spatial positions."""
    c = x.shape[0]
    flat = x.data.reshape(c, -1)
    n = flat.shape[1]
    mu = flat.mean(axis=1, keepdims=True)
    xc = flat - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv

    def backward(g):
        g2 = g.reshape(c, n)
        gx = inv * (g2 - g2.mean(axis=1, keepdims=True) - xhat * (g2 * xhat).mean(axis=1, keepdims=True))
        return (gx.reshape(x.shape),)

    return _result(xhat.reshape(x.shape), (x,), backward)

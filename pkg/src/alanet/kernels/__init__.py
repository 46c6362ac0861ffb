"""Convolution kernels with a compiled backend and a numpy fallback.

The compiled module is used when it imports and ``ALANET_PURE_PYTHON`` is not
set to ``1``. ``BACKEND`` names the active one.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("ALANET_PURE_PYTHON") != "1":
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        _impl = _ckernels
        BACKEND = "cython"


def conv2d_forward(xp, w, stride, out_h, out_w):
    return _impl.conv2d_forward(xp, w, stride, out_h, out_w)


def conv2d_backward(xp, w, gout, stride):
    return _impl.conv2d_backward(xp, w, gout, stride)


def use_backend(name):
    """Switch backend at runtime ("cython" or "python"); used by benchmarks and tests."""
    global _impl, BACKEND
    if name == "python":
        _impl, BACKEND = _pykernels, "python"
    elif name == "cython":
        from . import _ckernels
        _impl, BACKEND = _ckernels, "cython"
    else:
        raise ValueError(f"unknown backend {name!r}")

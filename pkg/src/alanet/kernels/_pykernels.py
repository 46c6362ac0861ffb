"""Pure numpy convolution kernels used when the compiled module is missing."""
import numpy as np


def conv2d_forward(xp, w, stride, out_h, out_w):
    c_out, _, k, _ = w.shape
    out = np.zeros((c_out, out_h, out_w))
    for ky in range(k):
        for kx in range(k):
            xs = xp[:, ky:ky + stride * out_h:stride, kx:kx + stride * out_w:stride]
            out += np.tensordot(w[:, :, ky, kx], xs, axes=(1, 0))
    return out


def conv2d_backward(xp, w, gout, stride):
    _, _, k, _ = w.shape
    out_h, out_w = gout.shape[1:]
    gxp = np.zeros_like(xp)
    gw = np.zeros_like(w)
    for ky in range(k):
        for kx in range(k):
            sl = (slice(None), slice(ky, ky + stride * out_h, stride), slice(kx, kx + stride * out_w, stride))
            gw[:, :, ky, kx] = np.tensordot(gout, xp[sl], axes=([1, 2], [1, 2]))
            gxp[sl] += np.tensordot(w[:, :, ky, kx], gout, axes=(0, 0))
    return gxp, gw

"""Numba convolution kernels.

Layout trick: the hot loops run channels-last so the innermost loop is a
contiguous FMA over output channels, which LLVM vectorizes; the NCHW public
arrays are transposed at entry/exit (cheap next to the convolution itself).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def _conv_nhwc(x, w, stride, pad, out):
    # x (B,H,W,C), w (kh,kw,C,Co), out (B,Ho,Wo,Co)
    b_n, h, wd, c = x.shape
    kh, kw, _, co = w.shape
    ho, wo = out.shape[1], out.shape[2]
    for b in range(b_n):
        for oh in range(ho):
            hi0 = oh * stride - pad
            for ow in range(wo):
                wi0 = ow * stride - pad
                acc = out[b, oh, ow]
                for i in range(kh):
                    hi = hi0 + i
                    if hi < 0 or hi >= h:
                        continue
                    for j in range(kw):
                        wi = wi0 + j
                        if wi < 0 or wi >= wd:
                            continue
                        xv = x[b, hi, wi]
                        wm = w[i, j]
                        for ci in range(c):
                            xc = xv[ci]
                            wv = wm[ci]
                            for oc in range(co):
                                acc[oc] += xc * wv[oc]
    return out


@njit(cache=True, fastmath=True)
def _grad_input_nhwc(dy, w, stride, pad, dx):
    # dy (B,Ho,Wo,Co), w (kh,kw,C,Co), dx (B,H,W,C)
    b_n, ho, wo, co = dy.shape
    kh, kw, c, _ = w.shape
    h, wd = dx.shape[1], dx.shape[2]
    for b in range(b_n):
        for oh in range(ho):
            hi0 = oh * stride - pad
            for ow in range(wo):
                wi0 = ow * stride - pad
                g = dy[b, oh, ow]
                for i in range(kh):
                    hi = hi0 + i
                    if hi < 0 or hi >= h:
                        continue
                    for j in range(kw):
                        wi = wi0 + j
                        if wi < 0 or wi >= wd:
                            continue
                        dxv = dx[b, hi, wi]
                        wm = w[i, j]
                        for ci in range(c):
                            s = 0.0
                            wv = wm[ci]
                            for oc in range(co):
                                s += g[oc] * wv[oc]
                            dxv[ci] += s
    return dx


@njit(cache=True, fastmath=True)
def _grad_weight_nhwc(dy, x, stride, pad, dw):
    # dy (B,Ho,Wo,Co), x (B,H,W,C), dw (kh,kw,C,Co)
    b_n, ho, wo, co = dy.shape
    kh, kw, c, _ = dw.shape
    h, wd = x.shape[1], x.shape[2]
    for b in range(b_n):
        for oh in range(ho):
            hi0 = oh * stride - pad
            for ow in range(wo):
                wi0 = ow * stride - pad
                g = dy[b, oh, ow]
                for i in range(kh):
                    hi = hi0 + i
                    if hi < 0 or hi >= h:
                        continue
                    for j in range(kw):
                        wi = wi0 + j
                        if wi < 0 or wi >= wd:
                            continue
                        xv = x[b, hi, wi]
                        dwm = dw[i, j]
                        for ci in range(c):
                            xc = xv[ci]
                            dwv = dwm[ci]
                            for oc in range(co):
                                dwv[oc] += xc * g[oc]
    return dw


def _out_size(h: int, k: int, stride: int, pad: int) -> int:
    return (h + 2 * pad - k) // stride + 1


def conv2d_forward(x: np.ndarray, w: np.ndarray, stride: int, pad: int) -> np.ndarray:
    b, c, h, wd = x.shape
    co, ci, kh, kw = w.shape
    ho = _out_size(h, kh, stride, pad)
    wo = _out_size(wd, kw, stride, pad)
    xt = np.ascontiguousarray(x.transpose(0, 2, 3, 1))
    wt = np.ascontiguousarray(w.transpose(2, 3, 1, 0))
    out = np.zeros((b, ho, wo, co), dtype=x.dtype)
    _conv_nhwc(xt, wt, stride, pad, out)
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def conv2d_grad_input(dy: np.ndarray, w: np.ndarray, stride: int, pad: int,
                      h: int, wd: int) -> np.ndarray:
    b = dy.shape[0]
    c = w.shape[1]
    dyt = np.ascontiguousarray(dy.transpose(0, 2, 3, 1))
    wt = np.ascontiguousarray(w.transpose(2, 3, 1, 0))
    dx = np.zeros((b, h, wd, c), dtype=dy.dtype)
    _grad_input_nhwc(dyt, wt, stride, pad, dx)
    return np.ascontiguousarray(dx.transpose(0, 3, 1, 2))


def conv2d_grad_weight(dy: np.ndarray, x: np.ndarray, kh: int, kw: int,
                       stride: int, pad: int) -> np.ndarray:
    co = dy.shape[1]
    c = x.shape[1]
    dyt = np.ascontiguousarray(dy.transpose(0, 2, 3, 1))
    xt = np.ascontiguousarray(x.transpose(0, 2, 3, 1))
    dw = np.zeros((kh, kw, c, co), dtype=dy.dtype)
    _grad_weight_nhwc(dyt, xt, stride, pad, dw)
    return np.ascontiguousarray(dw.transpose(3, 2, 0, 1))

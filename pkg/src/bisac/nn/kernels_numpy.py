"""Pure-numpy convolution kernels (im2col + BLAS)."""

from __future__ import annotations

import numpy as np


def _out_size(h: int, k: int, stride: int, pad: int) -> int:
    return (h + 2 * pad - k) // stride + 1


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    b, c, h, w = x.shape
    ho = _out_size(h, kh, stride, pad)
    wo = _out_size(w, kw, stride, pad)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    s0, s1, s2, s3 = xp.strides
    win = np.lib.stride_tricks.as_strided(
        xp, (b, c, kh, kw, ho, wo), (s0, s1, s2, s3, s2 * stride, s3 * stride))
    # (B*Ho*Wo, C*kh*kw)
    return np.ascontiguousarray(win.transpose(0, 4, 5, 1, 2, 3)).reshape(
        b * ho * wo, c * kh * kw)


def conv2d_forward(x: np.ndarray, w: np.ndarray, stride: int, pad: int) -> np.ndarray:
    b, c, h, wd = x.shape
    co, ci, kh, kw = w.shape
    ho = _out_size(h, kh, stride, pad)
    wo = _out_size(wd, kw, stride, pad)
    col = _im2col(x, kh, kw, stride, pad)
    y = col @ w.reshape(co, -1).T
    return np.ascontiguousarray(y.reshape(b, ho, wo, co).transpose(0, 3, 1, 2))


def conv2d_grad_weight(dy: np.ndarray, x: np.ndarray, kh: int, kw: int,
                       stride: int, pad: int) -> np.ndarray:
    b, co, ho, wo = dy.shape
    c = x.shape[1]
    col = _im2col(x, kh, kw, stride, pad)                   # (B*Ho*Wo, C*kh*kw)
    dyf = np.ascontiguousarray(dy.transpose(0, 2, 3, 1)).reshape(b * ho * wo, co)
    return (dyf.T @ col).reshape(co, c, kh, kw)


def conv2d_grad_input(dy: np.ndarray, w: np.ndarray, stride: int, pad: int,
                      h: int, wd: int) -> np.ndarray:
    b, co, ho, wo = dy.shape
    _, c, kh, kw = w.shape
    dyf = np.ascontiguousarray(dy.transpose(0, 2, 3, 1)).reshape(b * ho * wo, co)
    dcol = dyf @ w.reshape(co, -1)                          # (B*Ho*Wo, C*kh*kw)
    dcol = dcol.reshape(b, ho, wo, c, kh, kw)
    dxp = np.zeros((b, c, h + 2 * pad, wd + 2 * pad), dtype=dy.dtype)
    # col2im scatter-add; kernel taps loop is tiny (kh*kw iterations)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i:i + ho * stride:stride, j:j + wo * stride:stride] += \
                dcol[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    if pad:
        return np.ascontiguousarray(dxp[:, :, pad:pad + h, pad:pad + wd])
    return dxp

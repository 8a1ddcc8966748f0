"""Training losses: noise MSE, global-statistics SSIM and their mix.

SSIM uses whole-image statistics (no sliding window), computed per
(batch, channel) plane and averaged.  Images are expected in [0, 1]; the
stabilizers default to c1 = (0.01)^2 and c2 = (0.03)^2 for that range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .tensor import Tensor


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.5
    ssim_c1: float = 0.01 ** 2
    ssim_c2: float = 0.03 ** 2

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.ssim_c1 <= 0 or self.ssim_c2 <= 0:
            raise ValueError("ssim stabilizers must be > 0")


def _check_shapes(a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")


def mse(z: Tensor | np.ndarray, z_hat: Tensor | np.ndarray) -> Tensor:
    z = z if isinstance(z, Tensor) else Tensor(z)
    z_hat = z_hat if isinstance(z_hat, Tensor) else Tensor(z_hat)
    _check_shapes(z, z_hat)
    return T.mean(T.square(T.sub(z, z_hat)))


def ssim(x: Tensor | np.ndarray, x_hat: Tensor | np.ndarray,
         c1: float = 0.01 ** 2, c2: float = 0.03 ** 2) -> Tensor:
    """Structural similarity from global image statistics.

    Accepts (B, C, H, W) or (H, W); statistics are per (B, C) plane with
    population variances, then averaged over planes.
    """
    x = x if isinstance(x, Tensor) else Tensor(x)
    x_hat = x_hat if isinstance(x_hat, Tensor) else Tensor(x_hat)
    _check_shapes(x, x_hat)
    if x.data.ndim == 2:
        x = T.reshape(x, (1, 1) + x.shape)
        x_hat = T.reshape(x_hat, (1, 1) + x_hat.shape)
    elif x.data.ndim != 4:
        raise ValueError(f"ssim expects 2D or 4D input, got shape {x.shape}")

    axes = (2, 3)
    mu_x = T.mean_axes(x, axes)
    mu_y = T.mean_axes(x_hat, axes)
    dx = T.sub(x, mu_x)
    dy = T.sub(x_hat, mu_y)
    var_x = T.mean_axes(T.square(dx), axes)
    var_y = T.mean_axes(T.square(dy), axes)
    cov = T.mean_axes(T.mul(dx, dy), axes)

    num = T.mul(T.add(T.scale(T.mul(mu_x, mu_y), 2.0), c1),
                T.add(T.scale(cov, 2.0), c2))
    den = T.mul(T.add(T.add(T.square(mu_x), T.square(mu_y)), c1),
                T.add(T.add(var_x, var_y), c2))
    ratio = T.mul(num, _reciprocal(den))
    return T.mean(ratio)


def _reciprocal(a: Tensor) -> Tensor:
    inv = 1.0 / a.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(-g * inv * inv)

    return T._make(inv, (a,), backward)


def composite_loss(z: Tensor, z_hat: Tensor, x_t: Tensor, x_hat_t: Tensor,
                   weights: LossWeights) -> Tensor:
    """alpha * MSE(z, z_hat) + (1 - alpha) * (1 - SSIM(x_t, x_hat_t))."""
    weights.validate()
    term_mse = mse(z, z_hat)
    term_ssim = T.sub(Tensor(np.asarray(1.0, dtype=term_mse.dtype)),
                      ssim(x_t, x_hat_t, weights.ssim_c1, weights.ssim_c2))
    return T.add(T.scale(term_mse, weights.alpha),
                 T.scale(term_ssim, 1.0 - weights.alpha))

"""Encoder-decoder noise predictor with channel attention and residual skips.

Structure for depth d and base width c:

    stem 3->c
    encoder stage i: conv(+time bias)+relu, conv+relu, skip out,
                     stride-2 down conv doubling channels
    bottleneck: conv(+time bias)+relu, channel attention, conv+relu
    decoder stage i: nearest-up x2, conv halving channels, concat skip,
                     conv(+time bias)+relu (+ residual shortcut from the
                     upsampled features)
    head c->3 (linear)

The plain variant (``attention=False, residual_skip=False``) keeps the
concat skips but drops the attention gate and the decoder residual adds.
Timestep conditioning: sinusoidal embedding -> dense+relu -> per-stage dense
to a per-channel additive bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .tensor import Tensor


@dataclass(frozen=True)
class UNetConfig:
    in_channels: int = 3
    base_channels: int = 32
    depth: int = 3
    attention_reduction: int = 8
    time_embed_dim: int = 64
    attention: bool = True
    residual_skip: bool = True

    def validate(self) -> None:
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        bottleneck = self.base_channels * (2 ** self.depth)
        if self.attention and bottleneck % self.attention_reduction:
            raise ValueError(
                f"bottleneck width {bottleneck} not divisible by reduction "
                f"{self.attention_reduction}")


def _kaiming_uniform(rng, shape, fan_in, dtype):
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def init_params(cfg: UNetConfig, rng, dtype=np.float32) -> dict[str, Tensor]:
    """Kaiming-uniform conv/dense weights; attention gate biases start at zero."""
    cfg.validate()
    params: dict[str, Tensor] = {}

    def conv(name, cin, cout, k=3):
        params[f"{name}.w"] = Tensor(
            _kaiming_uniform(rng, (cout, cin, k, k), cin * k * k, dtype),
            requires_grad=True)
        params[f"{name}.b"] = Tensor(np.zeros(cout, dtype=dtype), requires_grad=True)

    def dense(name, nin, nout, zero_bias=True):
        params[f"{name}.w"] = Tensor(
            _kaiming_uniform(rng, (nin, nout), nin, dtype), requires_grad=True)
        params[f"{name}.b"] = Tensor(np.zeros(nout, dtype=dtype), requires_grad=True)

    c = cfg.base_channels
    conv("stem", cfg.in_channels, c)
    dense("time.fc", cfg.time_embed_dim, cfg.time_embed_dim)

    ch = c
    for i in range(cfg.depth):
        conv(f"enc{i}.c1", ch, ch)
        conv(f"enc{i}.c2", ch, ch)
        dense(f"enc{i}.time", cfg.time_embed_dim, ch)
        conv(f"enc{i}.down", ch, ch * 2)
        ch *= 2

    conv("mid.c1", ch, ch)
    dense("mid.time", cfg.time_embed_dim, ch)
    if cfg.attention:
        r = cfg.attention_reduction
        dense("mid.att1", ch, ch // r)
        dense("mid.att2", ch // r, ch)
    conv("mid.c2", ch, ch)

    for i in reversed(range(cfg.depth)):
        conv(f"dec{i}.up", ch, ch // 2)
        conv(f"dec{i}.c1", ch, ch // 2)     # input is concat(up, skip)
        dense(f"dec{i}.time", cfg.time_embed_dim, ch // 2)
        ch //= 2

    conv("head", c, cfg.in_channels)
    return params


def time_embedding(t: int, dim: int, dtype=np.float32) -> np.ndarray:
    """Sinusoidal features of the (integer) diffusion step."""
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / max(half - 1, 1))
    ang = t * freqs
    emb = np.concatenate([np.sin(ang), np.cos(ang)])
    if emb.size < dim:
        emb = np.pad(emb, (0, dim - emb.size))
    return emb.astype(dtype)


def channel_attention(features: Tensor, w1: Tensor, b1: Tensor,
                      w2: Tensor, b2: Tensor) -> Tensor:
    """Squeeze-excite gate: GAP -> dense/relu -> dense -> sigmoid -> rescale."""
    if w1.shape[0] != features.shape[1]:
        raise ValueError(
            f"attention expects dense input width {features.shape[1]}, got {w1.shape[0]}")
    squeezed = T.global_avg_pool(features)
    hidden = T.relu(T.dense(squeezed, w1, b1))
    gates = T.sigmoid(T.dense(hidden, w2, b2))
    return T.scale_channels(features, gates)


def unet_forward(params: dict[str, Tensor], cfg: UNetConfig,
                 x: Tensor | np.ndarray, t: int, t_max: int | None = None) -> Tensor:
    """Predict the noise content of ``x`` (B, 3, H, W) at diffusion step ``t``."""
    if t < 0 or (t_max is not None and t > t_max):
        raise ValueError(f"timestep {t} outside [0, {t_max}]")
    x = x if isinstance(x, Tensor) else Tensor(x)
    b, _, h, w = x.shape
    if h % (2 ** cfg.depth) or w % (2 ** cfg.depth):
        raise ValueError(f"spatial dims {h}x{w} not divisible by {2 ** cfg.depth}")

    emb_np = np.broadcast_to(time_embedding(t, cfg.time_embed_dim, x.dtype),
                             (b, cfg.time_embed_dim)).copy()
    emb = T.relu(T.dense(Tensor(emb_np), params["time.fc.w"], params["time.fc.b"]))

    def conv(name, xx, stride=1):
        return T.conv2d(xx, params[f"{name}.w"], params[f"{name}.b"],
                        stride=stride, pad=1)

    def with_time(name, xx):
        bias = T.dense(emb, params[f"{name}.w"], params[f"{name}.b"])
        return T.add_channel_bias(xx, bias)

    feat = T.relu(conv("stem", x))
    skips = []
    for i in range(cfg.depth):
        feat = T.relu(with_time(f"enc{i}.time", conv(f"enc{i}.c1", feat)))
        feat = T.relu(conv(f"enc{i}.c2", feat))
        skips.append(feat)
        feat = T.relu(conv(f"enc{i}.down", feat, stride=2))

    feat = T.relu(with_time("mid.time", conv("mid.c1", feat)))
    if cfg.attention:
        feat = channel_attention(feat, params["mid.att1.w"], params["mid.att1.b"],
                                 params["mid.att2.w"], params["mid.att2.b"])
    feat = T.relu(conv("mid.c2", feat))

    for i in reversed(range(cfg.depth)):
        up = T.relu(conv(f"dec{i}.up", T.upsample_nearest(feat)))
        cat = T.concat_channels(up, skips[i])
        feat = T.relu(with_time(f"dec{i}.time", conv(f"dec{i}.c1", cat)))
        if cfg.residual_skip:
            feat = T.add(feat, up)

    return T.conv2d(feat, params["head.w"], params["head.b"], stride=1, pad=1)

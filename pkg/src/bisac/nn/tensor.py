"""Minimal reverse-mode autodiff over dense numpy arrays.

A ``Tensor`` wraps an ndarray plus an optional gradient and a backward
closure; ``backward()`` runs the tape in reverse topological order.  Only the
operations the denoising network needs are provided.  Broadcasting follows
numpy; gradients of broadcast operands are summed back to their shape.
"""

from __future__ import annotations

import numpy as np

from . import backend


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        if self.data.dtype not in (np.float32, np.float64):
            self.data = self.data.astype(np.float32)
        self.grad = None
        self.requires_grad = requires_grad
        self._backward = None
        self._parents = ()

    # -- bookkeeping --------------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self, grad: np.ndarray | None = None) -> None:
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.ones_like(self.data) if grad is None else grad)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # convenience operators
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, grad={self.requires_grad})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient back down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _make(data, parents, backward_fn) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


# -- elementwise ------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return _make(a.data + b.data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.shape))

    return _make(a.data - b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _make(a.data * b.data, (a, b), backward)


def scale(a, k: float) -> Tensor:
    a = _as_tensor(a)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * k)

    return _make(a.data * k, (a,), backward)


def square(a) -> Tensor:
    a = _as_tensor(a)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * 2.0 * a.data)

    return _make(a.data * a.data, (a,), backward)


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * mask)

    return _make(np.where(mask, a.data, 0), (a,), backward)


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    y = 1.0 / (1.0 + np.exp(-a.data))

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * y * (1.0 - y))

    return _make(y, (a,), backward)


# -- reductions / reshapes ---------------------------------------------------

def mean(a) -> Tensor:
    a = _as_tensor(a)
    n = a.data.size

    def backward(g):
        if a.requires_grad:
            a._accumulate(np.full_like(a.data, 1.0 / n) * g)

    return _make(np.asarray(a.data.mean(), dtype=a.dtype), (a,), backward)


def mean_axes(a, axes: tuple, keepdims: bool = True) -> Tensor:
    a = _as_tensor(a)
    n = int(np.prod([a.shape[ax] for ax in axes]))

    def backward(g):
        if a.requires_grad:
            gg = g if keepdims else np.expand_dims(g, axes)
            a._accumulate(np.broadcast_to(gg, a.shape) / n)

    return _make(a.data.mean(axis=axes, keepdims=keepdims), (a,), backward)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    old = a.shape

    def backward(g):
        if a.requires_grad:
            a._accumulate(g.reshape(old))

    return _make(a.data.reshape(shape), (a,), backward)


def concat_channels(a, b) -> Tensor:
    """Concatenate along axis 1 of (B, C, H, W) tensors."""
    a, b = _as_tensor(a), _as_tensor(b)
    ca = a.shape[1]

    def backward(g):
        if a.requires_grad:
            a._accumulate(g[:, :ca])
        if b.requires_grad:
            b._accumulate(g[:, ca:])

    return _make(np.concatenate([a.data, b.data], axis=1), (a, b), backward)


# -- dense / conv / spatial ---------------------------------------------------

def dense(x, w, b) -> Tensor:
    """x (B, I) @ w (I, O) + b (O,)."""
    x, w, b = _as_tensor(x), _as_tensor(w), _as_tensor(b)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g @ w.data.T)
        if w.requires_grad:
            w._accumulate(x.data.T @ g)
        if b.requires_grad:
            b._accumulate(g.sum(axis=0))

    return _make(x.data @ w.data + b.data, (x, w, b), backward)


def conv2d(x, w, b=None, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation of x (B,C,H,W) with w (Co,C,kh,kw) plus bias (Co,)."""
    x, w = _as_tensor(x), _as_tensor(w)
    if x.data.ndim != 4 or w.data.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ValueError(f"conv2d shape mismatch: x {x.shape}, w {w.shape}")
    bt = _as_tensor(b) if b is not None else None
    y = backend.conv2d_forward(x.data, w.data, stride, pad)
    if bt is not None:
        y = y + bt.data[None, :, None, None]
    _, _, h, wd = x.shape
    co, ci, kh, kw = w.shape
    parents = (x, w, bt) if bt is not None else (x, w)

    def backward(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            x._accumulate(backend.conv2d_grad_input(g, w.data, stride, pad, h, wd))
        if w.requires_grad:
            w._accumulate(backend.conv2d_grad_weight(g, x.data, kh, kw, stride, pad))
        if bt is not None and bt.requires_grad:
            bt._accumulate(g.sum(axis=(0, 2, 3)))

    return _make(y, parents, backward)


def upsample_nearest(x, factor: int = 2) -> Tensor:
    x = _as_tensor(x)

    def backward(g):
        if x.requires_grad:
            b, c, h, w = g.shape
            gv = g.reshape(b, c, h // factor, factor, w // factor, factor)
            x._accumulate(gv.sum(axis=(3, 5)))

    up = np.repeat(np.repeat(x.data, factor, axis=2), factor, axis=3)
    return _make(up, (x,), backward)


def global_avg_pool(x) -> Tensor:
    """(B, C, H, W) -> (B, C) spatial mean."""
    x = _as_tensor(x)
    _, _, h, w = x.shape

    def backward(g):
        if x.requires_grad:
            x._accumulate(np.broadcast_to(g[:, :, None, None], x.shape) / (h * w))

    return _make(x.data.mean(axis=(2, 3)), (x,), backward)


def scale_channels(x, gates) -> Tensor:
    """Multiply (B, C, H, W) features by per-channel gates (B, C)."""
    x, gates = _as_tensor(x), _as_tensor(gates)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * gates.data[:, :, None, None])
        if gates.requires_grad:
            gates._accumulate((g * x.data).sum(axis=(2, 3)))

    return _make(x.data * gates.data[:, :, None, None], (x, gates), backward)


def add_channel_bias(x, bias) -> Tensor:
    """Add a per-sample per-channel bias (B, C) to (B, C, H, W) features."""
    x, bias = _as_tensor(x), _as_tensor(bias)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g)
        if bias.requires_grad:
            bias._accumulate(g.sum(axis=(2, 3)))

    return _make(x.data + bias.data[:, :, None, None], (x, bias), backward)

"""Kernel backend selection.

The convolution kernels exist twice: numba-compiled loops (default) and a
pure-numpy im2col path.  Set ``BISAC_NUMBA=0`` to force the numpy path, e.g.
on machines without a working LLVM toolchain.  ``benchmarks/bench_kernels.py``
compares the two.
"""

from __future__ import annotations

import os

from . import kernels_numpy

_FORCED = os.environ.get("BISAC_NUMBA", "1") not in ("0", "false", "no")

if _FORCED:
    try:
        from . import kernels_numba as _impl
        _BACKEND = "numba"
    except ImportError:
        from . import kernels_numpy as _impl
        _BACKEND = "numpy"
else:
    _impl = kernels_numpy
    _BACKEND = "numpy"


def backend_name() -> str:
    return _BACKEND


def set_backend(name: str) -> None:
    """Switch kernels at runtime (used by tests and the benchmark)."""
    global _impl, _BACKEND
    if name == "numpy":
        _impl = kernels_numpy
        _BACKEND = "numpy"
    elif name == "numba":
        from . import kernels_numba
        _impl = kernels_numba
        _BACKEND = "numba"
    else:
        raise ValueError(f"unknown backend {name!r}")


def conv2d_forward(x, w, stride, pad):
    return _impl.conv2d_forward(x, w, stride, pad)


def conv2d_grad_input(dy, w, stride, pad, h, wdt):
    return _impl.conv2d_grad_input(dy, w, stride, pad, h, wdt)


def conv2d_grad_weight(dy, x, kh, kw, stride, pad):
    return _impl.conv2d_grad_weight(dy, x, kh, kw, stride, pad)

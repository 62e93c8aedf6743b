"""Integer compute kernels with a compiled core and a pure-Python twin.

The compiled extension (``_core``, Cython) is preferred; the reference
backend (``_reference``) is selected when the extension is missing or
when FEMU_PURE_PYTHON=1 is set. Both are bit-identical by contract and
by test. ``BACKEND`` names the one in use.

Public entry points validate shapes and dtypes and share one twiddle
quantization so the backends cannot drift:

- matmul_i32(a, b): wrapping int32 matrix product, generic shapes
- conv2d_i32(x, w): valid-mode stride-1 HWC cross-correlation, int32
- fft_q31(re, im): radix-2 DIT FFT on Q1.31, scaled by 1/N
- fft512_q31(re, im): the canonical 512-point transform
"""

from __future__ import annotations

import math
import os
from functools import lru_cache

import numpy as np

from ..errors import ShapeMismatch

if os.environ.get("FEMU_PURE_PYTHON", "") not in ("", "0"):
    from . import _reference as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        from . import _reference as _impl

        BACKEND = "python"

Q31_ONE = 1 << 31
_Q31_MAX = Q31_ONE - 1


def _as_i32(arr, name: str, ndim: int) -> np.ndarray:
    a = np.asarray(arr)
    if a.ndim != ndim:
        raise ShapeMismatch(f"{name}: expected {ndim} dimensions, got {a.ndim}")
    if not np.issubdtype(a.dtype, np.integer):
        raise ShapeMismatch(f"{name}: expected integer dtype, got {a.dtype}")
    info = np.iinfo(np.int32)
    if a.size and (a.min() < info.min or a.max() > info.max):
        raise ShapeMismatch(f"{name}: values outside int32 range")
    return np.ascontiguousarray(a, dtype=np.int32)


def matmul_i32(a, b) -> np.ndarray:
    a = _as_i32(a, "a", 2)
    b = _as_i32(b, "b", 2)
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"inner dimensions differ: {a.shape} x {b.shape}")
    return _impl.matmul_i32(a, b)


def conv2d_i32(x, w) -> np.ndarray:
    x = _as_i32(x, "x", 3)
    w = _as_i32(w, "w", 4)
    if x.shape[2] != w.shape[3]:
        raise ShapeMismatch(f"channel counts differ: input {x.shape}, filters {w.shape}")
    if w.shape[1] > x.shape[0] or w.shape[2] > x.shape[1]:
        raise ShapeMismatch(f"filter window {w.shape[1:3]} exceeds input {x.shape[:2]}")
    return _impl.conv2d_i32(x, w)


@lru_cache(maxsize=8)
def twiddle_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Q1.31 twiddles W_n^k = exp(-2*pi*i*k/n), k in [0, n/2).

    Round to nearest, symmetric clamp to +/-(2^31 - 1): keeps every
    butterfly sum inside int64 and matches common DSP tables.
    """
    half = n // 2
    wr = np.empty(half, dtype=np.int32)
    wi = np.empty(half, dtype=np.int32)
    for k in range(half):
        ang = -2.0 * math.pi * k / n
        wr[k] = _clamp_q31(round(math.cos(ang) * Q31_ONE))
        wi[k] = _clamp_q31(round(math.sin(ang) * Q31_ONE))
    return wr, wi


def _clamp_q31(v: int) -> int:
    return max(-_Q31_MAX, min(_Q31_MAX, v))


def fft_q31(re, im) -> tuple[np.ndarray, np.ndarray]:
    re = _as_i32(re, "re", 1)
    im = _as_i32(im, "im", 1)
    n = len(re)
    if len(im) != n:
        raise ShapeMismatch(f"re/im lengths differ: {n} vs {len(im)}")
    if n < 2 or n & (n - 1):
        raise ShapeMismatch(f"length must be a power of two >= 2, got {n}")
    wr, wi = twiddle_tables(n)
    return _impl.fft_q31(re, im, wr, wi)


FFT_POINTS = 512


def fft512_q31(re, im) -> tuple[np.ndarray, np.ndarray]:
    re = _as_i32(re, "re", 1)
    im = _as_i32(im, "im", 1)
    if len(re) != FFT_POINTS or len(im) != FFT_POINTS:
        raise ShapeMismatch(f"expected {FFT_POINTS} points, got {len(re)}/{len(im)}")
    return fft_q31(re, im)


__all__ = [
    "BACKEND",
    "FFT_POINTS",
    "Q31_ONE",
    "conv2d_i32",
    "fft512_q31",
    "fft_q31",
    "matmul_i32",
    "twiddle_tables",
]

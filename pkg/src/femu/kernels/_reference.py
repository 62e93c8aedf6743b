"""Pure-Python backend for the integer compute kernels.

Bit-exact twin of the compiled backend (``femu.kernels._core``): same
wrapping int32 arithmetic, same per-stage shift and rounding rules.
Selected at import time when the extension is unavailable (or forced
via FEMU_PURE_PYTHON=1) and used as the baseline in the kernel
benchmark. Shape checking happens in the package front end; these
functions assume well-formed C-contiguous int32 inputs.
"""

from __future__ import annotations

import numpy as np

_MASK32 = 0xFFFFFFFF


def _wrap32(v: int) -> int:
    v &= _MASK32
    return v - 0x100000000 if v & 0x80000000 else v


def matmul_i32(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """C[i][j] = sum_k A[i][k]*B[k][j], wrapping mod 2^32."""
    m, k = a.shape
    n = b.shape[1]
    al = a.tolist()
    bl = b.tolist()
    out = [[0] * n for _ in range(m)]
    for i in range(m):
        row = al[i]
        orow = out[i]
        for j in range(n):
            acc = 0
            for t in range(k):
                acc += row[t] * bl[t][j]
            orow[j] = _wrap32(acc)
    return np.array(out, dtype=np.int32)


def conv2d_i32(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Valid-mode, stride-1 2D cross-correlation over HWC input.

    x: (H, W, C), w: (F, KH, KW, C); output (H-KH+1, W-KW+1, F),
    accumulation wrapping mod 2^32.
    """
    h, wid, c = x.shape
    f, kh, kw, _ = w.shape
    oh, ow = h - kh + 1, wid - kw + 1
    xl = x.tolist()
    wl = w.tolist()
    out = [[[0] * f for _ in range(ow)] for _ in range(oh)]
    for i in range(oh):
        for j in range(ow):
            cell = out[i][j]
            for ff in range(f):
                filt = wl[ff]
                acc = 0
                for di in range(kh):
                    xrow = xl[i + di]
                    frow = filt[di]
                    for dj in range(kw):
                        xpix = xrow[j + dj]
                        fpix = frow[dj]
                        for ch in range(c):
                            acc += xpix[ch] * fpix[ch]
                cell[ff] = _wrap32(acc)
    return np.array(out, dtype=np.int32)


def _round_half_away_31(p: int) -> int:
    # round(p / 2^31) with ties away from zero
    if p >= 0:
        return (p + (1 << 30)) >> 31
    return -((-p + (1 << 30)) >> 31)


def fft_q31(re: np.ndarray, im: np.ndarray, wr: np.ndarray, wi: np.ndarray):
    """Radix-2 DIT FFT on Q1.31 samples with one arithmetic right shift
    per stage (total scaling 1/N) and round-half-away-from-zero on the
    twiddle products. Twiddle tables come from the package front end so
    both backends share one quantization.
    """
    n = len(re)
    stages = n.bit_length() - 1
    # bit-reversed reorder into working lists
    xr = [0] * n
    xi = [0] * n
    rel = re.tolist()
    iml = im.tolist()
    rev = 0
    for i in range(n):
        xr[rev] = rel[i]
        xi[rev] = iml[i]
        # increment rev as a reflected counter
        bit = n >> 1
        while rev & bit:
            rev ^= bit
            bit >>= 1
        rev |= bit
    wrl = wr.tolist()
    wil = wi.tolist()
    half = 1
    step = n >> 1
    for _ in range(stages):
        m = half << 1
        for k in range(0, n, m):
            for j in range(half):
                idx = j * step
                twr = wrl[idx]
                twi = wil[idx]
                lo = k + j
                hi = lo + half
                br = xr[hi]
                bi = xi[hi]
                tr = _round_half_away_31(br * twr - bi * twi)
                ti = _round_half_away_31(br * twi + bi * twr)
                ar = xr[lo]
                ai = xi[lo]
                xr[lo] = (ar + tr) >> 1
                xi[lo] = (ai + ti) >> 1
                xr[hi] = (ar - tr) >> 1
                xi[hi] = (ai - ti) >> 1
        half = m
        step >>= 1
    return np.array(xr, dtype=np.int32), np.array(xi, dtype=np.int32)

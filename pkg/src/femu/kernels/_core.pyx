# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the integer compute kernels.

Must stay bit-identical to femu.kernels._reference: wrapping int32
accumulation for matmul/conv (unsigned 64-bit accumulators, truncated
mod 2^32) and the Q1.31 radix-2 FFT with one arithmetic right shift per
stage and round-half-away-from-zero twiddle products.
"""

import numpy as np

from libc.stdint cimport int32_t, int64_t, uint32_t, uint64_t


def matmul_i32(const int32_t[:, ::1] a, const int32_t[:, ::1] b):
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t k = a.shape[1]
    cdef Py_ssize_t n = b.shape[1]
    out_arr = np.empty((m, n), dtype=np.int32)
    cdef int32_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef uint64_t acc
    for i in range(m):
        for j in range(n):
            acc = 0
            for t in range(k):
                # signed 64-bit product, accumulated with defined
                # unsigned wraparound; low 32 bits match exact mod 2^32
                acc += <uint64_t>(<int64_t>a[i, t] * <int64_t>b[t, j])
            out[i, j] = <int32_t><uint32_t>(acc & 0xFFFFFFFFu)
    return out_arr


def conv2d_i32(const int32_t[:, :, ::1] x, const int32_t[:, :, :, ::1] w):
    cdef Py_ssize_t h = x.shape[0]
    cdef Py_ssize_t wid = x.shape[1]
    cdef Py_ssize_t c = x.shape[2]
    cdef Py_ssize_t f = w.shape[0]
    cdef Py_ssize_t kh = w.shape[1]
    cdef Py_ssize_t kw = w.shape[2]
    cdef Py_ssize_t oh = h - kh + 1
    cdef Py_ssize_t ow = wid - kw + 1
    out_arr = np.empty((oh, ow, f), dtype=np.int32)
    cdef int32_t[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, ff, di, dj, ch
    cdef uint64_t acc
    for i in range(oh):
        for j in range(ow):
            for ff in range(f):
                acc = 0
                for di in range(kh):
                    for dj in range(kw):
                        for ch in range(c):
                            acc += <uint64_t>(<int64_t>x[i + di, j + dj, ch] * <int64_t>w[ff, di, dj, ch])
                out[i, j, ff] = <int32_t><uint32_t>(acc & 0xFFFFFFFFu)
    return out_arr


cdef inline int64_t _round_half_away_31(int64_t p) nogil:
    if p >= 0:
        return (p + (<int64_t>1 << 30)) >> 31
    return -((-p + (<int64_t>1 << 30)) >> 31)


def fft_q31(const int32_t[::1] re, const int32_t[::1] im,
            const int32_t[::1] wr, const int32_t[::1] wi):
    cdef Py_ssize_t n = re.shape[0]
    cdef Py_ssize_t stages = 0
    cdef Py_ssize_t v = n
    while v > 1:
        v >>= 1
        stages += 1
    xr_arr = np.empty(n, dtype=np.int32)
    xi_arr = np.empty(n, dtype=np.int32)
    cdef int32_t[::1] xr = xr_arr
    cdef int32_t[::1] xi = xi_arr
    cdef Py_ssize_t i, rev, bit
    rev = 0
    for i in range(n):
        xr[rev] = re[i]
        xi[rev] = im[i]
        bit = n >> 1
        while rev & bit:
            rev ^= bit
            bit >>= 1
        rev |= bit
    cdef Py_ssize_t half = 1
    cdef Py_ssize_t step = n >> 1
    cdef Py_ssize_t s, k, j, lo, hi, idx, m
    cdef int64_t twr, twi, br, bi, ar, ai, tr, ti
    for s in range(stages):
        m = half << 1
        for k in range(0, n, m):
            for j in range(half):
                idx = j * step
                twr = wr[idx]
                twi = wi[idx]
                lo = k + j
                hi = lo + half
                br = xr[hi]
                bi = xi[hi]
                # |tw| <= 2^31-1 keeps both sums inside int64
                tr = _round_half_away_31(br * twr - bi * twi)
                ti = _round_half_away_31(br * twi + bi * twr)
                ar = xr[lo]
                ai = xi[lo]
                xr[lo] = <int32_t>((ar + tr) >> 1)
                xi[lo] = <int32_t>((ai + ti) >> 1)
                xr[hi] = <int32_t>((ar - tr) >> 1)
                xi[hi] = <int32_t>((ai - ti) >> 1)
        half = m
        step >>= 1
    return xr_arr, xi_arr

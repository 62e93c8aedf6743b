"""Shared test utilities: independent kernel oracles and fixed fixtures.

The oracles here are deliberately written from the arithmetic
definitions, not from the package sources: exact integer sums wrapped
once at the end (wrapping is a ring homomorphism, so where the wrap
happens cannot matter), and a double-precision DFT for the transform.
"""

from __future__ import annotations

import hashlib

import numpy as np

I32_MIN = -(1 << 31)
I32_MAX = (1 << 31) - 1


def wrap32(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - (1 << 32) if v >= (1 << 31) else v


def mm_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, k = a.shape
    n = b.shape[1]
    al = [[int(v) for v in row] for row in a]
    bl = [[int(v) for v in row] for row in b]
    out = np.empty((m, n), dtype=np.int32)
    for i in range(m):
        for j in range(n):
            out[i, j] = wrap32(sum(al[i][t] * bl[t][j] for t in range(k)))
    return out


def conv_oracle(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    h, wid, c = x.shape
    f, kh, kw, _ = w.shape
    oh, ow = h - kh + 1, wid - kw + 1
    xl = x.tolist()
    wl = w.tolist()
    out = np.empty((oh, ow, f), dtype=np.int32)
    for i in range(oh):
        for j in range(ow):
            for ff in range(f):
                out[i, j, ff] = wrap32(
                    sum(
                        xl[i + di][j + dj][ch] * wl[ff][di][dj][ch]
                        for di in range(kh)
                        for dj in range(kw)
                        for ch in range(c)
                    )
                )
    return out


def dft_oracle(re: np.ndarray, im: np.ndarray) -> np.ndarray:
    """1/N-scaled DFT of Q1.31 samples, in full-scale complex doubles."""
    x = (re.astype(np.float64) + 1j * im.astype(np.float64)) / float(1 << 31)
    n = len(x)
    k = np.arange(n)
    basis = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return basis @ x / n


def rand_i32(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(I32_MIN, I32_MAX + 1, size=shape, dtype=np.int64).astype(np.int32)


def kernel_digest() -> str:
    """Digest of kernel outputs over fixed seeded inputs.

    Imports femu.kernels at call time so the caller's environment picks
    the backend; used to prove the compiled and pure backends are
    bit-identical.
    """
    from femu import kernels

    h = hashlib.sha256()
    rng = np.random.default_rng(20260815)
    for _ in range(5):
        a = rand_i32(rng, (121, 16))
        b = rand_i32(rng, (16, 4))
        h.update(kernels.matmul_i32(a, b).tobytes())
        x = rand_i32(rng, (16, 16, 3))
        w = rand_i32(rng, (8, 3, 3, 3))
        h.update(kernels.conv2d_i32(x, w).tobytes())
        re = rand_i32(rng, 512)
        im = rand_i32(rng, 512)
        fr, fi = kernels.fft512_q31(re, im)
        h.update(fr.tobytes())
        h.update(fi.tobytes())
    return h.hexdigest()


def exact_energy_j(counters, model):
    """Total energy over the rationals, straight from the definition."""
    from fractions import Fraction

    from femu.model import STATE_ORDER

    total = Fraction(0)
    for did, power in model.domains.items():
        for s in STATE_ORDER:
            uw = Fraction(power.state_uw(s))
            total += (uw / 10**6) * Fraction(counters.get(did, s), model.ref_freq_hz)
    return total


def random_energy_pair(rng: np.random.Generator):
    """A random conserving counter set with a matching model."""
    from femu.model import STATE_ORDER, DomainPower, EnergyModel, StateCounters

    n_domains = int(rng.integers(1, 5))
    window = int(rng.integers(0, 10**12))
    domains = {}
    cycles = {}
    for i in range(n_domains):
        did = f"d{i}"
        memory = bool(rng.integers(2))
        domains[did] = DomainPower(
            active_uw=float(np.round(rng.uniform(0, 2000), 3)),
            clock_gated_uw=float(np.round(rng.uniform(0, 500), 3)),
            power_gated_uw=float(np.round(rng.uniform(0, 50), 3)),
            retention_uw=float(np.round(rng.uniform(0, 80), 3)) if memory else None,
        )
        cuts = sorted(int(rng.integers(0, window + 1)) for _ in range(3))
        parts = [cuts[0], cuts[1] - cuts[0], cuts[2] - cuts[1], window - cuts[2]]
        order = rng.permutation(4)
        cycles[did] = {STATE_ORDER[j]: parts[order[j]] for j in range(4)}
    freq = int(rng.choice([1_000_000, 20_000_000, 32_768, 250_000_000]))
    model = EnergyModel(technology="t", voltage_v=0.8, ref_freq_hz=freq, domains=domains)
    return StateCounters(window, cycles), model


def random_program(rng: np.random.Generator, name: str = "prog"):
    """A random but always-valid program plus a timing table for it.

    Spans every phase kind, keeps markers balanced, and sizes acquire
    phases so thousand-program sweeps stay fast.
    """
    from femu.engine import (
        Acquire,
        Compute,
        FlashRead,
        FlashWrite,
        Marker,
        Sleep,
        TimingTable,
        WorkloadProgram,
    )
    from femu.model import PowerState

    table = {(f"k{i}", "cpu"): int(rng.integers(0, 5000)) for i in range(4)}
    phases = []
    marker_open = False
    for _ in range(int(rng.integers(1, 9))):
        roll = int(rng.integers(0, 7))
        if roll == 0:
            kernel = f"k{int(rng.integers(0, 4))}"
            phases.append(Compute(kernel=kernel, reps=int(rng.integers(1, 4))))
        elif roll == 1:
            mode = PowerState.CLOCK_GATED if rng.integers(2) else PowerState.POWER_GATED
            phases.append(Sleep(mode=mode, duration_cycles=int(rng.integers(0, 100_000))))
        elif roll == 2:
            phases.append(FlashRead(nbytes=int(rng.integers(0, 20_000))))
        elif roll == 3:
            phases.append(FlashWrite(nbytes=int(rng.integers(0, 20_000))))
        elif roll == 4:
            if marker_open:
                phases.append(Marker("stop"))
            else:
                phases.append(Marker("start"))
            marker_open = not marker_open
        else:
            fs = int(rng.choice([1_000, 10_000, 100_000, 1_000_000]))
            phases.append(
                Acquire(
                    fs_hz=fs,
                    n_samples=int(rng.integers(0, 50)),
                    per_sample_cpu_cycles=int(rng.integers(1, 301)),
                )
            )
    if marker_open:
        phases.append(Marker("stop"))
    return WorkloadProgram(name=name, phases=tuple(phases)), TimingTable(entries=table)


if __name__ == "__main__":
    print(kernel_digest())

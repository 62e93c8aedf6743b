"""Times the compiled kernel core against the pure-Python twin.

Runs each kernel at its canonical offload dimensions on identical
inputs, checks the outputs are bit-identical, and prints best-of-N
wall times plus the speedup. Usage::

    python3 benchmarks/bench_kernels.py [--repeats 7] [--seed 0]
"""

from __future__ import annotations

import argparse
import importlib
import sys
import time

import numpy as np

from femu.kernels import twiddle_tables


def best_of(fn, args, repeats: int) -> tuple[float, object]:
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def equal(a, b) -> bool:
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="best-of-N per backend")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        core = importlib.import_module("femu.kernels._core")
    except ImportError:
        print("compiled core not built; nothing to compare against", file=sys.stderr)
        return 1
    reference = importlib.import_module("femu.kernels._reference")

    rng = np.random.default_rng(args.seed)

    def i32(shape):
        return rng.integers(-(1 << 31), 1 << 31, size=shape, dtype=np.int64).astype(np.int32)

    wr, wi = twiddle_tables(512)
    cases = [
        ("matmul_i32 121x16 @ 16x4", "matmul_i32", (i32((121, 16)), i32((16, 4)))),
        ("conv2d_i32 16x16x3 * 8x3x3x3", "conv2d_i32", (i32((16, 16, 3)), i32((8, 3, 3, 3)))),
        ("fft_q31 512-point", "fft_q31", (i32(512), i32(512), wr, wi)),
    ]

    print(f"{'kernel':34} {'native':>12} {'python':>12} {'speedup':>9}")
    for label, name, operands in cases:
        t_native, out_native = best_of(getattr(core, name), operands, args.repeats)
        t_python, out_python = best_of(getattr(reference, name), operands, args.repeats)
        if not equal(out_native, out_python):
            print(f"{label}: BACKENDS DISAGREE", file=sys.stderr)
            return 1
        print(f"{label:34} {t_native * 1e6:10.1f} us {t_python * 1e6:10.1f} us {t_python / t_native:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())

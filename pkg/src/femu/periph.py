"""Virtualized peripherals: the two-stage sample-acquisition FIFO chain
and the storage (flash) timing model.

The acquisition chain replaces a physical ADC front end: a software
FIFO stages samples from bulk storage into memory in the background,
and a hardware FIFO feeds the fabric from memory. The desk-scale model
keeps the part that costs time on the host path: batch moves into the
hardware FIFO take ``refill_latency_cycles`` each, one transfer in
flight at a time, and a refill completing on the same cycle as a sample
pop is serviced first. Sample values flow from a single in-order
cursor, so delivery is exactly-once by construction and the FIFO state
only shapes timing.

Storage is a sparse byte space addressable over 32 bits. ``Virtual``
mode backs it with host DRAM timing; ``PhysicalModel`` applies the
measured serial-bridge bandwidth instead, which is the only difference
between the two modes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    BadArguments,
    EmptySource,
    InvalidRate,
    OutOfRange,
    SourceExhausted,
    Underrun,
)
from .model import ClockConfig

# ---------------------------------------------------------------- sources


class SampleSource:
    """An in-order stream of 16-bit samples backing the virtual ADC."""

    def __init__(self, samples: np.ndarray, label: str = "memory"):
        self.samples = np.ascontiguousarray(samples, dtype=np.int16)
        self.label = label

    def __len__(self) -> int:
        return len(self.samples)

    @classmethod
    def from_file(cls, path: str | Path) -> "SampleSource":
        """Loads raw little-endian 16-bit samples from a file.

        A ``.json`` path is treated as a structured header: it must
        carry ``format: "s16le"`` and either ``payload`` (a path to the
        raw data, relative to the header) or ``data`` (a list of
        integer samples).
        """
        path = Path(path)
        if path.suffix == ".json":
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            if doc.get("format") != "s16le":
                raise BadArguments(f"{path}: unsupported sample format {doc.get('format')!r}")
            if "payload" in doc:
                raw = (path.parent / doc["payload"]).read_bytes()
                data = np.frombuffer(raw, dtype="<i2")
            else:
                data = np.asarray(doc["data"], dtype=np.int16)
            return cls(data, label=str(path))
        data = np.frombuffer(path.read_bytes(), dtype="<i2")
        return cls(data, label=str(path))

    @classmethod
    def synthetic(cls, kind: str, count: int, seed: int = 0) -> "SampleSource":
        """Deterministic generated streams for scenarios and tests.

        ``noise`` draws from a seeded generator; the other kinds ignore
        the seed entirely.
        """
        if count < 0:
            raise BadArguments(f"sample count must be non-negative, got {count}")
        idx = np.arange(count, dtype=np.int64)
        if kind == "ramp":
            data = (idx & 0xFFFF) - 0x8000
        elif kind == "sine":
            data = np.round(30000.0 * np.sin(2.0 * np.pi * idx / 480.0)).astype(np.int64)
        elif kind == "zeros":
            data = np.zeros(count, dtype=np.int64)
        elif kind == "noise":
            rng = np.random.default_rng(seed)
            data = rng.integers(-0x8000, 0x8000, size=count, dtype=np.int64)
        else:
            raise BadArguments(f"unknown synthetic source kind {kind!r}")
        return cls(data.astype(np.int16), label=f"synthetic:{kind}")


# ---------------------------------------------------------------- fifo chain


@dataclass(frozen=True)
class SoftFifo:
    """Staging buffer config. ``refill_latency_cycles`` prices one batch
    move from staging into the hardware FIFO."""

    capacity: int
    refill_batch: int
    refill_latency_cycles: int

    def __post_init__(self):
        if self.capacity <= 0:
            raise BadArguments(f"soft FIFO capacity must be positive, got {self.capacity}")
        if not (0 < self.refill_batch <= self.capacity):
            raise BadArguments(
                f"refill_batch must be in (0, capacity]: got {self.refill_batch} with capacity {self.capacity}"
            )
        if self.refill_latency_cycles < 0:
            raise BadArguments(f"refill latency must be non-negative, got {self.refill_latency_cycles}")


@dataclass(frozen=True)
class HardFifo:
    """Fabric-side FIFO config. Refills trigger when occupancy falls
    strictly below half capacity."""

    capacity: int

    def __post_init__(self):
        if self.capacity <= 0:
            raise BadArguments(f"hard FIFO capacity must be positive, got {self.capacity}")

    @property
    def threshold(self) -> int:
        return self.capacity // 2


class UnderrunPolicy(Enum):
    FATAL = "fatal"
    COUNT_AND_STALL = "count_and_stall"


@dataclass(frozen=True)
class AdcConfig:
    fs_hz: int
    underrun_policy: UnderrunPolicy = UnderrunPolicy.FATAL
    sample_bits: int = 16


class AdcSession:
    """A configured acquisition stream.

    ``pop(now)`` consumes the next sample at host cycle ``now`` and
    returns ``(value, ready_at)``: ``ready_at == now`` when the sample
    was buffered, later when the host had to wait for an in-flight
    refill (COUNT_AND_STALL). Timing bound, tested both ways: with
    threshold = capacity // 2, no pop ever waits as long as
    refill_latency_cycles <= (capacity - threshold) * (f / fs).
    """

    def __init__(self, source: SampleSource, config: AdcConfig, soft: SoftFifo, hard: HardFifo, clock: ClockConfig):
        if len(source) == 0:
            raise EmptySource("cannot configure acquisition over an empty source")
        if not (1 <= config.fs_hz <= clock.freq_hz):
            raise InvalidRate(
                f"sampling rate must be in [1, {clock.freq_hz}] Hz, got {config.fs_hz}"
            )
        self.source = source
        self.config = config
        self.soft = soft
        self.hard = hard
        self.clock = clock
        self.reset()

    def reset(self) -> None:
        """Returns to the post-configure state: cursor rewound, both
        FIFOs primed to capacity before the first sample instant."""
        self.next_index = 0  # next sample value to deliver
        total = len(self.source)
        self.hard_occ = min(self.hard.capacity, total)
        self.soft_occ = min(self.soft.capacity, total - self.hard_occ)
        self._prefetched = self.hard_occ + self.soft_occ
        self._inflight_done: int | None = None
        self._last_pop = -1
        # observability
        self.delivered = 0
        self.refill_events = 0
        self.stall_cycles = 0
        self.underruns = 0

    # -- internals

    def _upstream_ready(self) -> bool:
        return self.soft_occ > 0

    def _top_up_soft(self) -> None:
        room = self.soft.capacity - self.soft_occ
        remaining = len(self.source) - self._prefetched
        pull = min(room, remaining)
        if pull > 0:
            self.soft_occ += pull
            self._prefetched += pull

    def _maybe_schedule(self, at: int) -> None:
        if (
            self._inflight_done is None
            and self.hard_occ < self.hard.threshold
            and self._upstream_ready()
        ):
            self._inflight_done = at + self.soft.refill_latency_cycles

    def _complete_refill(self) -> None:
        done = self._inflight_done
        assert done is not None
        moved = min(self.soft.refill_batch, self.hard.capacity - self.hard_occ, self.soft_occ)
        self.hard_occ += moved
        self.soft_occ -= moved
        self._top_up_soft()
        self.refill_events += 1
        self._inflight_done = None
        self._maybe_schedule(done)

    # -- public

    def pop(self, now: int) -> tuple[int, int]:
        if now < self._last_pop:
            raise BadArguments(f"pop at cycle {now} precedes previous pop at {self._last_pop}")
        # a refill landing on this exact cycle is serviced before the pop
        while self._inflight_done is not None and self._inflight_done <= now:
            self._complete_refill()
        ready = now
        if self.hard_occ == 0:
            if self.next_index >= len(self.source):
                raise SourceExhausted(
                    f"source {self.source.label!r} drained after {self.next_index} samples"
                )
            if self._inflight_done is None:
                # chain invariant: data remains but nothing scheduled
                raise SourceExhausted("acquisition chain stalled with no refill in flight")
            if self.config.underrun_policy is UnderrunPolicy.FATAL:
                raise Underrun(
                    f"hardware FIFO empty at cycle {now}; refill lands at {self._inflight_done}"
                )
            ready = self._inflight_done
            self.underruns += 1
            self.stall_cycles += ready - now
            while self._inflight_done is not None and self._inflight_done <= ready:
                self._complete_refill()
        value = int(self.source.samples[self.next_index])
        self.next_index += 1
        self.hard_occ -= 1
        self.delivered += 1
        self._maybe_schedule(ready)
        self._last_pop = ready
        return value, ready

    def remaining(self) -> int:
        return len(self.source) - self.next_index


def no_underrun_bound_cycles(soft: SoftFifo, hard: HardFifo, fs_hz: int, clock: ClockConfig) -> float:
    """Largest refill latency guaranteed not to stall a periodic consumer."""
    return (hard.capacity - hard.threshold) * (clock.freq_hz / fs_hz)


# ---------------------------------------------------------------- flash


class FlashMode(Enum):
    VIRTUAL = "virtual"
    PHYSICAL_MODEL = "physical_model"


ADDRESS_SPACE = 1 << 32
_PAGE = 4096

# Transfer-rate calibration: one 70 000-byte acquisition window moves in
# ~10 ms against DRAM-backed storage and in ~2.5 s across the physical
# serial bridge it replaces.
VIRTUAL_BANDWIDTH_BPS = 7_000_000
PHYSICAL_BANDWIDTH_BPS = 28_000


class VirtualFlash:
    """Sparse 32-bit-addressable storage with a per-mode bandwidth."""

    def __init__(
        self,
        mode: FlashMode = FlashMode.VIRTUAL,
        virtual_bandwidth_bps: float = VIRTUAL_BANDWIDTH_BPS,
        physical_bandwidth_bps: float = PHYSICAL_BANDWIDTH_BPS,
    ):
        if virtual_bandwidth_bps <= 0 or physical_bandwidth_bps <= 0:
            raise BadArguments("flash bandwidths must be positive")
        self.mode = mode
        self.virtual_bandwidth_bps = virtual_bandwidth_bps
        self.physical_bandwidth_bps = physical_bandwidth_bps
        self._pages: dict[int, bytearray] = {}

    @property
    def bandwidth_bps(self) -> float:
        if self.mode is FlashMode.VIRTUAL:
            return self.virtual_bandwidth_bps
        return self.physical_bandwidth_bps

    def _check_range(self, addr: int, length: int) -> None:
        if addr < 0 or length < 0 or addr + length > ADDRESS_SPACE:
            raise OutOfRange(f"range [{addr}, {addr}+{length}) outside 32-bit address space")

    def read(self, addr: int, length: int) -> bytes:
        self._check_range(addr, length)
        out = bytearray(length)
        pos = 0
        while pos < length:
            page, off = divmod(addr + pos, _PAGE)
            chunk = min(_PAGE - off, length - pos)
            stored = self._pages.get(page)
            if stored is not None:
                out[pos : pos + chunk] = stored[off : off + chunk]
            pos += chunk
        return bytes(out)

    def write(self, addr: int, data: bytes) -> None:
        self._check_range(addr, len(data))
        pos = 0
        while pos < len(data):
            page, off = divmod(addr + pos, _PAGE)
            chunk = min(_PAGE - off, len(data) - pos)
            stored = self._pages.setdefault(page, bytearray(_PAGE))
            stored[off : off + chunk] = data[pos : pos + chunk]
            pos += chunk

    def load_image(self, path: str | Path, base_addr: int = 0) -> int:
        data = Path(path).read_bytes()
        self.write(base_addr, data)
        return len(data)


def flash_transfer_cycles(flash: VirtualFlash, nbytes: int, clock: ClockConfig) -> int:
    """Host cycles spent moving ``nbytes`` to or from storage.

    Symmetric in direction; rounded to the nearest cycle. Unaffected by
    stored contents, so timing replays are stable across resets.
    """
    if nbytes < 0:
        raise OutOfRange(f"transfer size must be non-negative, got {nbytes}")
    return round(nbytes * clock.freq_hz / flash.bandwidth_bps)

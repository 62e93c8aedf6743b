"""Phase-granular workload execution over virtual power domains.

A workload program is an ordered list of phases (compute, acquire,
sleep, storage transfer, counter marker). The engine walks them on a
single virtual timeline, routes every cycle into exactly one power
state per domain, and produces a :class:`SimOutcome` whose counters
satisfy conservation by construction: for each domain the four state
counts sum to the window length.

Host-state routing rules:

- the host domain carries the phase's own state;
- memory domains are Active while the host is Active, ClockGated while
  it is ClockGated, and drop to Retention while it is PowerGated;
- RTL-stage accelerator domains are PowerGated except while servicing
  an offloaded kernel;
- any other logic domain mirrors the host.

Acquisition micro-model: sample k of an Acquire phase is consumed at
``e_k = max(floor(k*f/fs), e_{k-1} + c)`` where ``c`` is the per-sample
cost; the host is Active for ``c`` cycles per sample and ClockGated in
the gaps, and the phase spans ``max(floor(n*f/fs), last e + c)``
cycles. When ``fs`` divides ``f`` and ``fs*c <= f`` this reduces to the
closed form: window ``n*f/fs``, active ``n*c``. At ``fs*c >= f`` the
host saturates at 100 % Active. FIFO stalls (count-and-stall policy)
are spent ClockGated and reported separately.

Everything is integer arithmetic over a deterministic schedule:
identical inputs give bit-identical outcomes, in and across processes.
"""

from __future__ import annotations

import heapq
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .accel import Platform, Stage, transfer_words
from .errors import (
    BadArguments,
    CounterOverflow,
    InvalidRate,
    ProgramFinished,
    UnbalancedMarkers,
    UnknownKernel,
    UnknownTarget,
)
from .model import (
    COUNTER_LIMIT,
    ClockConfig,
    DEFAULT_PLATFORM,
    DomainKind,
    PowerState,
    STATE_ORDER,
    StateCounters,
)
from .periph import AdcSession, VirtualFlash, flash_transfer_cycles

# Tie-breaking priorities for simultaneous events: peripheral refills
# land before the sample that needs them, sample delivery before host
# resume, markers last. AdcSession applies REFILL < SAMPLE internally
# (a refill completing on a pop's cycle is serviced first); the engine
# orders SAMPLE < RESUME through the acquisition schedule below.
PRIO_REFILL = 0
PRIO_SAMPLE = 1
PRIO_RESUME = 2
PRIO_MARKER = 3


class EventQueue:
    """Total order over (time, priority, sequence) with FIFO insertion
    ties. Sequence numbers are assigned at push, so equal (time,
    priority) pairs replay in insertion order on every run."""

    def __init__(self):
        self._heap: list[tuple[int, int, int, object]] = []
        self._seq = 0

    def push(self, when: int, priority: int, payload: object) -> None:
        if when < 0:
            raise BadArguments(f"event time must be non-negative, got {when}")
        heapq.heappush(self._heap, (when, priority, self._seq, payload))
        self._seq += 1

    def peek(self) -> tuple[int, int, object] | None:
        if not self._heap:
            return None
        when, priority, _seq, payload = self._heap[0]
        return when, priority, payload

    def pop(self) -> tuple[int, int, object]:
        when, priority, _seq, payload = heapq.heappop(self._heap)
        return when, priority, payload

    def __len__(self) -> int:
        return len(self._heap)


# ------------------------------------------------------------ phases


@dataclass(frozen=True)
class Compute:
    kernel: str
    target: str = "cpu"
    reps: int = 1
    op: str = field(default="compute", init=False)

    def __post_init__(self):
        if self.reps < 1:
            raise BadArguments(f"compute reps must be >= 1, got {self.reps}")
        if not self.kernel:
            raise BadArguments("compute kernel id must be non-empty")


@dataclass(frozen=True)
class Acquire:
    fs_hz: int
    n_samples: int
    per_sample_cpu_cycles: int
    op: str = field(default="acquire", init=False)

    def __post_init__(self):
        if self.fs_hz < 1:
            raise InvalidRate(f"sampling rate must be >= 1 Hz, got {self.fs_hz}")
        if self.n_samples < 0:
            raise BadArguments(f"sample count must be >= 0, got {self.n_samples}")
        if self.per_sample_cpu_cycles < 1:
            raise BadArguments(
                f"per-sample cost must be >= 1 cycle, got {self.per_sample_cpu_cycles}"
            )


@dataclass(frozen=True)
class Sleep:
    mode: PowerState
    duration_cycles: int
    op: str = field(default="sleep", init=False)

    def __post_init__(self):
        if self.mode not in (PowerState.CLOCK_GATED, PowerState.POWER_GATED):
            raise BadArguments(f"sleep mode must be clock_gated or power_gated, got {self.mode}")
        if self.duration_cycles < 0:
            raise BadArguments(f"sleep duration must be >= 0, got {self.duration_cycles}")


@dataclass(frozen=True)
class FlashRead:
    nbytes: int
    op: str = field(default="flash_read", init=False)

    def __post_init__(self):
        if self.nbytes < 0:
            raise BadArguments(f"transfer size must be >= 0, got {self.nbytes}")


@dataclass(frozen=True)
class FlashWrite:
    nbytes: int
    op: str = field(default="flash_write", init=False)

    def __post_init__(self):
        if self.nbytes < 0:
            raise BadArguments(f"transfer size must be >= 0, got {self.nbytes}")


@dataclass(frozen=True)
class Marker:
    action: str  # "start" | "stop"
    op: str = field(default="marker", init=False)

    def __post_init__(self):
        if self.action not in ("start", "stop"):
            raise BadArguments(f"marker action must be start or stop, got {self.action!r}")


Phase = Compute | Acquire | Sleep | FlashRead | FlashWrite | Marker


@dataclass(frozen=True)
class WorkloadProgram:
    name: str
    phases: tuple[Phase, ...]

    def __post_init__(self):
        if not self.name:
            raise BadArguments("program name must be non-empty")
        open_marker = False
        for i, ph in enumerate(self.phases):
            if isinstance(ph, Marker):
                if ph.action == "start":
                    if open_marker:
                        raise UnbalancedMarkers(f"phase {i}: marker started twice without a stop")
                    open_marker = True
                else:
                    if not open_marker:
                        raise UnbalancedMarkers(f"phase {i}: marker stop without a start")
                    open_marker = False
        if open_marker:
            raise UnbalancedMarkers("marker started but never stopped")

    def has_markers(self) -> bool:
        return any(isinstance(ph, Marker) for ph in self.phases)


def parse_program(doc: dict) -> WorkloadProgram:
    try:
        phases: list[Phase] = []
        for i, entry in enumerate(doc["phases"]):
            op = entry.get("op")
            if op == "compute":
                phases.append(
                    Compute(
                        kernel=str(entry["kernel"]),
                        target=str(entry.get("target", "cpu")),
                        reps=int(entry.get("reps", 1)),
                    )
                )
            elif op == "acquire":
                phases.append(
                    Acquire(
                        fs_hz=int(entry["fs_hz"]),
                        n_samples=int(entry["n_samples"]),
                        per_sample_cpu_cycles=int(entry["per_sample_cpu_cycles"]),
                    )
                )
            elif op == "sleep":
                phases.append(
                    Sleep(mode=PowerState(entry["mode"]), duration_cycles=int(entry["duration_cycles"]))
                )
            elif op == "flash_read":
                phases.append(FlashRead(nbytes=int(entry["bytes"])))
            elif op == "flash_write":
                phases.append(FlashWrite(nbytes=int(entry["bytes"])))
            elif op == "marker":
                phases.append(Marker(action=str(entry["action"])))
            else:
                raise BadArguments(f"phase {i}: unknown op {op!r}")
        return WorkloadProgram(name=str(doc["name"]), phases=tuple(phases))
    except KeyError as exc:
        raise BadArguments(f"program document missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise BadArguments(f"malformed program document: {exc}") from exc


def program_to_json(program: WorkloadProgram) -> dict:
    out = []
    for ph in program.phases:
        if isinstance(ph, Compute):
            out.append({"op": "compute", "kernel": ph.kernel, "target": ph.target, "reps": ph.reps})
        elif isinstance(ph, Acquire):
            out.append(
                {
                    "op": "acquire",
                    "fs_hz": ph.fs_hz,
                    "n_samples": ph.n_samples,
                    "per_sample_cpu_cycles": ph.per_sample_cpu_cycles,
                }
            )
        elif isinstance(ph, Sleep):
            out.append({"op": "sleep", "mode": ph.mode.value, "duration_cycles": ph.duration_cycles})
        elif isinstance(ph, FlashRead):
            out.append({"op": "flash_read", "bytes": ph.nbytes})
        elif isinstance(ph, FlashWrite):
            out.append({"op": "flash_write", "bytes": ph.nbytes})
        else:
            out.append({"op": "marker", "action": ph.action})
    return {"name": program.name, "phases": out}


def load_program_file(path: str | Path) -> WorkloadProgram:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_program(json.load(fh))


# ------------------------------------------------------------ timing


@dataclass(frozen=True)
class TimingTable:
    """(kernel id, target) -> cycles per repetition."""

    entries: Mapping[tuple[str, str], int]

    def __post_init__(self):
        for key, cycles in self.entries.items():
            if cycles < 0:
                raise BadArguments(f"timing entry {key} must be >= 0, got {cycles}")

    def lookup(self, kernel: str, target: str) -> int | None:
        return self.entries.get((kernel, target))

    def to_json(self) -> dict:
        doc: dict[str, dict[str, int]] = {}
        for (kernel, target), cycles in sorted(self.entries.items()):
            doc.setdefault(kernel, {})[target] = cycles
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "TimingTable":
        entries: dict[tuple[str, str], int] = {}
        for kernel, targets in doc.items():
            for target, cycles in targets.items():
                entries[(str(kernel), str(target))] = int(cycles)
        return cls(entries=entries)

    @classmethod
    def load(cls, path: str | Path) -> "TimingTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


EMPTY_TIMING = TimingTable(entries={})


# ------------------------------------------------------------ outcomes


@dataclass(frozen=True)
class PhaseAttribution:
    index: int
    op: str
    start_cycle: int
    cycles: int


@dataclass(frozen=True)
class PhaseResult:
    """What one `step` consumed."""

    index: int
    op: str
    cycles: int
    states_touched: tuple[str, ...]  # "domain.state" with nonzero dwell


@dataclass(frozen=True)
class SimOutcome:
    automatic: StateCounters
    manual: StateCounters | None
    phases: tuple[PhaseAttribution, ...]
    window_cycles: int
    finished: bool
    stall_cycles: int
    underruns: int
    refill_events: int
    samples_delivered: int
    wall_seconds: float  # observability only; never serialized

    def to_json(self) -> dict:
        """Canonical serialization: everything deterministic, wall time
        deliberately excluded so reruns are byte-identical."""
        return {
            "automatic": self.automatic.to_json(),
            "manual": self.manual.to_json() if self.manual is not None else None,
            "phases": [
                {"index": p.index, "op": p.op, "start_cycle": p.start_cycle, "cycles": p.cycles}
                for p in self.phases
            ],
            "window_cycles": self.window_cycles,
            "finished": self.finished,
            "stall_cycles": self.stall_cycles,
            "underruns": self.underruns,
            "refill_events": self.refill_events,
            "samples_delivered": self.samples_delivered,
        }


@dataclass(frozen=True)
class EngineConfig:
    """Knobs the scenarios may override; defaults keep the closed-form
    acquisition arithmetic exact."""

    wake_latency_cycles: int = 0  # charged Active before each sample's work
    offload_wait_state: PowerState = PowerState.CLOCK_GATED  # or ACTIVE (polling)

    def __post_init__(self):
        if self.wake_latency_cycles < 0:
            raise BadArguments("wake latency must be >= 0")
        if self.offload_wait_state not in (PowerState.CLOCK_GATED, PowerState.ACTIVE):
            raise BadArguments("offload wait state must be clock_gated or active")


_MEM_FOLLOW = {
    PowerState.ACTIVE: PowerState.ACTIVE,
    PowerState.CLOCK_GATED: PowerState.CLOCK_GATED,
    PowerState.POWER_GATED: PowerState.RETENTION,
}


# ------------------------------------------------------------ executors


class _UniformExec:
    """A phase spending all cycles in one host state."""

    __slots__ = ("sim", "state", "remaining", "accel", "done")

    def __init__(self, sim: "Simulator", state: PowerState, total: int, accel: str | None = None):
        self.sim = sim
        self.state = state
        self.remaining = total
        self.accel = accel
        self.done = total == 0

    def advance(self, limit: int | None) -> None:
        if self.done:
            return
        take = self.remaining
        if limit is not None:
            take = min(take, max(0, limit - self.sim.now))
        self.sim._dwell(self.state, take, self.accel)
        self.remaining -= take
        self.done = self.remaining == 0


class _SegmentsExec:
    """A phase made of fixed (state, cycles, accel) segments in order."""

    __slots__ = ("sim", "segments", "idx", "offset", "done")

    def __init__(self, sim: "Simulator", segments: list[tuple[PowerState, int, str | None]]):
        self.sim = sim
        self.segments = segments
        self.idx = 0
        self.offset = 0  # cycles consumed inside segments[idx]
        self._skip_finished()
        self.done = self.idx >= len(self.segments)

    def _skip_finished(self) -> None:
        while self.idx < len(self.segments) and self.segments[self.idx][1] == self.offset:
            self.idx += 1
            self.offset = 0

    def advance(self, limit: int | None) -> None:
        sim = self.sim
        while self.idx < len(self.segments):
            state, total, accel = self.segments[self.idx]
            take = total - self.offset
            if limit is not None:
                take = min(take, max(0, limit - sim.now))
            sim._dwell(state, take, accel)
            self.offset += take
            self._skip_finished()
            if limit is not None and sim.now >= limit and self.idx < len(self.segments):
                break
        self.done = self.idx >= len(self.segments)


class _MarkerExec:
    __slots__ = ("sim", "action", "done")

    def __init__(self, sim: "Simulator", action: str):
        self.sim = sim
        self.action = action
        self.done = False

    def advance(self, limit: int | None) -> None:
        self.sim._set_marker(self.action == "start")
        self.done = True


class _AcquireExec:
    """Per-sample acquisition walk.

    Pending host activity lives in an :class:`EventQueue` of segment
    ends: a SAMPLE event closes the ClockGated wait for the sample's
    ready instant, a RESUME event closes the Active span that works on
    it. Counter updates are batched per ``advance`` call so million-
    sample phases stay cheap while session pops remain genuinely
    sequential. A cycle bound may leave the head event partially
    consumed; the remainder replays on resume, which keeps bounded and
    unbounded runs bit-identical. The acquisition cursor can run at
    most one sample ahead of a mid-phase bound (the pop that computes
    the next ready instant), never behind.
    """

    __slots__ = ("sim", "n", "fs", "c", "f", "start", "prev_end", "k", "pending", "tail_emitted", "done")

    def __init__(self, sim: "Simulator", phase: Acquire):
        self.sim = sim
        self.n = phase.n_samples
        self.fs = phase.fs_hz
        self.f = sim.clock.freq_hz
        self.c = phase.per_sample_cpu_cycles + sim.config.wake_latency_cycles
        self.start = sim.now
        self.prev_end = sim.now
        self.k = 0
        self.pending = EventQueue()
        self.tail_emitted = False
        self.done = False

    def _nominal_end(self) -> int:
        return self.start + (self.n * self.f) // self.fs

    def advance(self, limit: int | None) -> None:
        if self.done:
            return
        sim = self.sim
        session = sim.adc
        pos = sim.now
        act = 0
        cg = 0
        c = self.c
        pending = self.pending
        last_state = None
        while True:
            head = pending.peek()
            if head is None:
                if self.k < self.n:
                    if limit is not None and pos >= limit:
                        break  # popping the next sample would outrun the bound
                    t_k = self.start + (self.k * self.f) // self.fs
                    e = t_k if t_k > self.prev_end else self.prev_end
                    if session is not None:
                        _value, ready = session.pop(e)
                    else:
                        ready = e
                    if ready > pos:
                        pending.push(ready, PRIO_SAMPLE, PowerState.CLOCK_GATED)
                    pending.push(ready + c, PRIO_RESUME, PowerState.ACTIVE)
                    self.prev_end = ready + c
                    self.k += 1
                    continue
                if not self.tail_emitted:
                    end = self._nominal_end()
                    if end > pos:
                        pending.push(end, PRIO_RESUME, PowerState.CLOCK_GATED)
                    self.tail_emitted = True
                    continue
                self.done = True
                break
            seg_end, _prio, state = head
            take_end = seg_end if limit is None or seg_end <= limit else limit
            dur = take_end - pos
            if dur > 0:
                if state is PowerState.ACTIVE:
                    act += dur
                else:
                    cg += dur
                pos = take_end
                last_state = state
            if take_end == seg_end:
                pending.pop()
            else:
                break  # bound hit mid-segment
        # flush batched dwell, ending on the state we actually stopped in
        if last_state is PowerState.ACTIVE:
            sim._dwell(PowerState.CLOCK_GATED, cg)
            sim._dwell(PowerState.ACTIVE, act)
        else:
            sim._dwell(PowerState.ACTIVE, act)
            sim._dwell(PowerState.CLOCK_GATED, cg)


# ------------------------------------------------------------ simulator


class Simulator:
    """Mutable run state for one loaded program.

    Construction validates the program against the platform and timing
    tables; afterwards: cycle 0, every domain Active, nothing
    attributed. ``run``/``step`` mutate; ``outcome``/``snapshot``
    observe.
    """

    def __init__(
        self,
        program: WorkloadProgram,
        timing: TimingTable = EMPTY_TIMING,
        platform: Platform | None = None,
        clock: ClockConfig = ClockConfig(),
        adc: AdcSession | None = None,
        flash: VirtualFlash | None = None,
        config: EngineConfig = EngineConfig(),
    ):
        self.program = program
        self.timing = timing
        self.platform = platform if platform is not None else Platform(domains=DEFAULT_PLATFORM)
        self.clock = clock
        self.adc = adc
        self.flash = flash if flash is not None else VirtualFlash()
        self.config = config
        self._accel_ids = self.platform.accel_domain_ids()
        self._validate()
        self.reset()

    # -- validation & phase planning

    def _validate(self) -> None:
        for i, ph in enumerate(self.program.phases):
            if isinstance(ph, Compute):
                self._plan_compute(ph, where=f"phase {i}")
            elif isinstance(ph, Acquire):
                if ph.fs_hz > self.clock.freq_hz:
                    raise InvalidRate(
                        f"phase {i}: sampling rate {ph.fs_hz} Hz above clock {self.clock.freq_hz} Hz"
                    )
                if self.adc is not None and ph.fs_hz != self.adc.config.fs_hz:
                    raise InvalidRate(
                        f"phase {i}: program samples at {ph.fs_hz} Hz but the session is configured for {self.adc.config.fs_hz} Hz"
                    )

    def _plan_compute(self, ph: Compute, where: str) -> list[tuple[PowerState, int, str | None]]:
        """Per-rep segments for a compute phase."""
        if ph.target == "cpu":
            cycles = self.timing.lookup(ph.kernel, "cpu")
            if cycles is None:
                raise UnknownKernel(f"{where}: no timing entry for kernel {ph.kernel!r} on cpu")
            return [(PowerState.ACTIVE, cycles, None)]
        accel = self.platform.accelerators.get(ph.target)
        if accel is None:
            raise UnknownTarget(f"{where}: no accelerator {ph.target!r} on the platform")
        if ph.kernel not in accel.spec.kernels:
            raise UnknownKernel(
                f"{where}: accelerator {ph.target!r} does not implement kernel {ph.kernel!r}"
            )
        host_cost = transfer_words(ph.kernel)
        if accel.spec.stage is Stage.SOFTWARE_MODEL:
            # functional stand-in: host-side transfer only, no device time
            return [(PowerState.ACTIVE, host_cost, None)]
        cycles = self.timing.lookup(ph.kernel, ph.target)
        if cycles is None:
            cycles = int(accel.spec.timing[ph.kernel])
        return [
            (PowerState.ACTIVE, host_cost, None),
            (self.config.offload_wait_state, cycles, ph.target),
        ]

    def _make_exec(self, ph: Phase):
        if isinstance(ph, Compute):
            per_rep = self._plan_compute(ph, where="compute")
            return _SegmentsExec(self, per_rep * ph.reps)
        if isinstance(ph, Acquire):
            return _AcquireExec(self, ph)
        if isinstance(ph, Sleep):
            return _UniformExec(self, ph.mode, ph.duration_cycles)
        if isinstance(ph, (FlashRead, FlashWrite)):
            cycles = flash_transfer_cycles(self.flash, ph.nbytes, self.clock)
            return _UniformExec(self, PowerState.ACTIVE, cycles)
        return _MarkerExec(self, ph.action)

    # -- state mutation

    def reset(self) -> None:
        """Back to the freshly loaded state: counters zeroed, time 0,
        all domains Active, program rewound. Storage contents persist
        (timing never depends on them); the acquisition cursor rewinds
        so replays are identical."""
        self.now = 0
        self.finished = len(self.program.phases) == 0
        self._phase_idx = 0
        self._exec = None
        self._auto = {d.id: {s: 0 for s in STATE_ORDER} for d in self.platform.domains}
        self._manual = {d.id: {s: 0 for s in STATE_ORDER} for d in self.platform.domains}
        self._manual_window = 0
        self._marker_on = False
        self._domain_state = {d.id: PowerState.ACTIVE for d in self.platform.domains}
        self._phase_cycles = [0] * len(self.program.phases)
        self._phase_start = [0] * len(self.program.phases)
        self._wall = 0.0
        if self.adc is not None:
            self.adc.reset()

    def _route(self, spec, host_state: PowerState, accel: str | None) -> PowerState:
        if spec.id == self.platform.host_id:
            return host_state
        if spec.kind is DomainKind.MEMORY:
            return _MEM_FOLLOW[host_state]
        if spec.id in self._accel_ids:
            return PowerState.ACTIVE if spec.id == accel else PowerState.POWER_GATED
        return host_state

    def _dwell(self, host_state: PowerState, cycles: int, accel: str | None = None) -> None:
        if cycles == 0:
            return
        if cycles < 0:
            raise BadArguments(f"dwell of {cycles} cycles")
        new_now = self.now + cycles
        if new_now >= COUNTER_LIMIT:
            raise CounterOverflow(f"cycle counter would reach {new_now}")
        marker = self._marker_on
        for spec in self.platform.domains:
            st = self._route(spec, host_state, accel)
            self._auto[spec.id][st] += cycles
            if marker:
                self._manual[spec.id][st] += cycles
            self._domain_state[spec.id] = st
        if marker:
            self._manual_window += cycles
        self.now = new_now
        self._phase_cycles[self._phase_idx] += cycles

    def _set_marker(self, on: bool) -> None:
        self._marker_on = on

    # -- execution

    def run_until(self, limit: int | None = None) -> SimOutcome:
        """Runs to program end or to the cycle bound, whichever comes
        first. Zero-cost phases landing exactly on the bound complete;
        anything needing cycles past it waits for the next call.
        Idempotent after completion."""
        if limit is not None and limit < 0:
            raise BadArguments(f"cycle bound must be >= 0, got {limit}")
        phases = self.program.phases
        t0 = time.perf_counter()
        try:
            while self._phase_idx < len(phases):
                if self._exec is None:
                    self._phase_start[self._phase_idx] = self.now
                    self._exec = self._make_exec(phases[self._phase_idx])
                ex = self._exec
                ex.advance(limit)
                if ex.done:
                    self._exec = None
                    self._phase_idx += 1
                elif limit is not None:
                    break  # bound reached mid-phase
            self.finished = self._phase_idx >= len(phases)
        finally:
            self._wall += time.perf_counter() - t0
        return self.outcome()

    def step_phase(self) -> PhaseResult:
        """Advances exactly one phase to completion."""
        if self._phase_idx >= len(self.program.phases):
            raise ProgramFinished(f"program {self.program.name!r} has no phases left")
        idx = self._phase_idx
        before = {d: dict(counts) for d, counts in self._auto.items()}
        start_cycles = self.now
        t0 = time.perf_counter()
        try:
            if self._exec is None:
                self._phase_start[idx] = self.now
                self._exec = self._make_exec(self.program.phases[idx])
            while not self._exec.done:
                self._exec.advance(None)
            self._exec = None
            self._phase_idx += 1
            self.finished = self._phase_idx >= len(self.program.phases)
        finally:
            self._wall += time.perf_counter() - t0
        touched = []
        for d in sorted(before):
            for s in STATE_ORDER:
                if self._auto[d][s] != before[d][s]:
                    touched.append(f"{d}.{s.value}")
        return PhaseResult(
            index=idx,
            op=self.program.phases[idx].op,
            cycles=self.now - start_cycles,
            states_touched=tuple(touched),
        )

    def outcome(self) -> SimOutcome:
        automatic = StateCounters(self.now, {d: dict(c) for d, c in self._auto.items()})
        automatic.check_conservation()
        manual = None
        if self.program.has_markers():
            manual = StateCounters(self._manual_window, {d: dict(c) for d, c in self._manual.items()})
            manual.check_conservation()
        phases = tuple(
            PhaseAttribution(
                index=i,
                op=ph.op,
                start_cycle=self._phase_start[i],
                cycles=self._phase_cycles[i],
            )
            for i, ph in enumerate(self.program.phases)
        )
        adc = self.adc
        return SimOutcome(
            automatic=automatic,
            manual=manual,
            phases=phases,
            window_cycles=self.now,
            finished=self.finished,
            stall_cycles=adc.stall_cycles if adc is not None else 0,
            underruns=adc.underruns if adc is not None else 0,
            refill_events=adc.refill_events if adc is not None else 0,
            samples_delivered=adc.delivered if adc is not None else 0,
            wall_seconds=self._wall,
        )

    def snapshot(self) -> dict:
        """Canonical observable state; equal snapshots mean equal
        futures for equal inputs. Mid-phase, the acquisition cursor may
        lead the cycle bound by the one sample noted on
        :class:`_AcquireExec`."""
        return {
            "now": self.now,
            "phase_index": self._phase_idx,
            "finished": self.finished,
            "marker_open": self._marker_on,
            "domain_states": {d: s.value for d, s in sorted(self._domain_state.items())},
            "automatic": StateCounters(self.now, {d: dict(c) for d, c in self._auto.items()}).to_json(),
            "manual_window": self._manual_window,
            "adc": None
            if self.adc is None
            else {
                "next_index": self.adc.next_index,
                "hard_occ": self.adc.hard_occ,
                "soft_occ": self.adc.soft_occ,
                "delivered": self.adc.delivered,
                "refill_events": self.adc.refill_events,
                "stall_cycles": self.adc.stall_cycles,
                "underruns": self.adc.underruns,
            },
        }


def load_program(
    program: WorkloadProgram,
    timing: TimingTable = EMPTY_TIMING,
    platform: Platform | None = None,
    clock: ClockConfig = ClockConfig(),
    adc: AdcSession | None = None,
    flash: VirtualFlash | None = None,
    config: EngineConfig = EngineConfig(),
) -> Simulator:
    """Builds a simulator positioned at cycle 0 with zeroed counters."""
    return Simulator(
        program=program, timing=timing, platform=platform, clock=clock, adc=adc, flash=flash, config=config
    )


def acquire_closed_form(fs_hz: int, n_samples: int, per_sample_cpu_cycles: int, clock: ClockConfig) -> dict:
    """The analytic acquisition regime used by reports and assertions.

    Valid whenever fs divides the clock: window n*f/fs cycles, active
    n*c, the rest ClockGated; saturation pins the active share at 1.
    """
    f = clock.freq_hz
    share = min(1.0, fs_hz * per_sample_cpu_cycles / f)
    if fs_hz * per_sample_cpu_cycles >= f:
        window = n_samples * per_sample_cpu_cycles
    else:
        window = (n_samples * f) // fs_hz
    active = n_samples * per_sample_cpu_cycles
    return {
        "window_cycles": window,
        "active_cycles": active,
        "sleep_cycles": window - active,
        "active_share": share,
    }

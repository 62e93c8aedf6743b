"""Accelerator prototyping: mailbox offload protocol, operand packing,
platform registration, and the two integration stages.

An accelerator is exercised the way silicon would be: the host writes a
config block (kernel code, dimension words, operand addresses) and the
input operands into shared mailbox memory, rings a doorbell word, and
collects results from the output region once the status word reads
Done. A ``SoftwareModel`` accelerator is a functional stand-in that
charges only the host-side transfer cycles; an ``RtlStage`` accelerator
additionally carries cycle and power annotations and charges its kernel
time on its own power domain while the host waits clock-gated. Both
stages compute through the same golden kernels, so results are
bit-identical across stages by construction and by test.

Transfer cost model: one host cycle per 32-bit word moved through the
mailbox (config + inputs + outputs).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping

import numpy as np

from . import kernels
from .errors import (
    AcceleratorError,
    BadArguments,
    DuplicateName,
    IncompleteRtlSpec,
    MailboxBusy,
    MailboxProtocolError,
    ShapeMismatch,
    UnknownKernel,
    UnsupportedKernel,
)
from .model import DomainKind, DomainPower, DomainSpec, EnergyModel

# ------------------------------------------------------------ kernel shapes

CONFIG_WORDS = 8  # kernel code, four dim words, input addr, output addr, flags

# Canonical operand shapes served over the mailbox. The kernel functions
# themselves accept generic shapes; the offload path models a fixed
# hardware configuration.
MM_SHAPE_A = (121, 16)
MM_SHAPE_B = (16, 4)
CONV_SHAPE_X = (16, 16, 3)
CONV_SHAPE_W = (8, 3, 3, 3)
FFT_POINTS = kernels.FFT_POINTS

_KERNEL_CODES = {"mm": 1, "conv": 2, "fft": 3}


def _words(shape) -> int:
    n = 1
    for s in shape:
        n *= s
    return n


def input_words(kernel: str) -> int:
    if kernel == "mm":
        return _words(MM_SHAPE_A) + _words(MM_SHAPE_B)
    if kernel == "conv":
        return _words(CONV_SHAPE_X) + _words(CONV_SHAPE_W)
    if kernel == "fft":
        return 2 * FFT_POINTS
    return 0


def output_words(kernel: str) -> int:
    if kernel == "mm":
        return MM_SHAPE_A[0] * MM_SHAPE_B[1]
    if kernel == "conv":
        oh = CONV_SHAPE_X[0] - CONV_SHAPE_W[1] + 1
        ow = CONV_SHAPE_X[1] - CONV_SHAPE_W[2] + 1
        return oh * ow * CONV_SHAPE_W[0]
    if kernel == "fft":
        return 2 * FFT_POINTS
    return 0


def transfer_words(kernel: str) -> int:
    """Mailbox words the host moves for one offload of ``kernel``.

    Kernels without a canonical operand layout cost the config block
    only; they can still be timed through an RtlStage annotation.
    """
    return CONFIG_WORDS + input_words(kernel) + output_words(kernel)


# ------------------------------------------------------------ operands


@dataclass(frozen=True)
class MatMulOperands:
    a: np.ndarray
    b: np.ndarray
    kernel: str = field(default="mm", init=False)

    def check_canonical(self) -> None:
        if self.a.shape != MM_SHAPE_A or self.b.shape != MM_SHAPE_B:
            raise ShapeMismatch(
                f"mm offload expects {MM_SHAPE_A} x {MM_SHAPE_B}, got {self.a.shape} x {self.b.shape}"
            )

    def dims(self) -> tuple[int, int, int, int]:
        return (self.a.shape[0], self.a.shape[1], self.b.shape[1], 0)

    def pack_input(self) -> np.ndarray:
        return np.concatenate([self.a.ravel(), self.b.ravel()]).astype(np.int32)

    def run(self) -> np.ndarray:
        return kernels.matmul_i32(self.a, self.b)

    def unpack_output(self, words: np.ndarray) -> np.ndarray:
        return words.reshape(self.a.shape[0], self.b.shape[1])


@dataclass(frozen=True)
class ConvOperands:
    x: np.ndarray
    w: np.ndarray
    kernel: str = field(default="conv", init=False)

    def check_canonical(self) -> None:
        if self.x.shape != CONV_SHAPE_X or self.w.shape != CONV_SHAPE_W:
            raise ShapeMismatch(
                f"conv offload expects {CONV_SHAPE_X} x {CONV_SHAPE_W}, got {self.x.shape} x {self.w.shape}"
            )

    def dims(self) -> tuple[int, int, int, int]:
        return (self.x.shape[0], self.x.shape[1], self.x.shape[2], self.w.shape[0])

    def pack_input(self) -> np.ndarray:
        return np.concatenate([self.x.ravel(), self.w.ravel()]).astype(np.int32)

    def run(self) -> np.ndarray:
        return kernels.conv2d_i32(self.x, self.w)

    def unpack_output(self, words: np.ndarray) -> np.ndarray:
        oh = self.x.shape[0] - self.w.shape[1] + 1
        ow = self.x.shape[1] - self.w.shape[2] + 1
        return words.reshape(oh, ow, self.w.shape[0])


@dataclass(frozen=True)
class FftOperands:
    re: np.ndarray
    im: np.ndarray
    kernel: str = field(default="fft", init=False)

    def check_canonical(self) -> None:
        if self.re.shape != (FFT_POINTS,) or self.im.shape != (FFT_POINTS,):
            raise ShapeMismatch(
                f"fft offload expects {FFT_POINTS} complex points, got {self.re.shape}/{self.im.shape}"
            )

    def dims(self) -> tuple[int, int, int, int]:
        return (len(self.re), 0, 0, 0)

    def pack_input(self) -> np.ndarray:
        inter = np.empty(2 * len(self.re), dtype=np.int32)
        inter[0::2] = self.re
        inter[1::2] = self.im
        return inter

    def run(self) -> tuple[np.ndarray, np.ndarray]:
        return kernels.fft512_q31(self.re, self.im)

    def unpack_output(self, words: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return words[0::2].copy(), words[1::2].copy()


Operands = MatMulOperands | ConvOperands | FftOperands


def parse_operands(doc: dict) -> Operands:
    """Builds operands from their JSON form (int32 tensors as nested
    lists); complex FFT input is the ``re``/``im`` pair."""
    kernel = doc.get("kernel")
    try:
        if kernel == "mm":
            return MatMulOperands(
                a=np.asarray(doc["a"], dtype=np.int32), b=np.asarray(doc["b"], dtype=np.int32)
            )
        if kernel == "conv":
            return ConvOperands(
                x=np.asarray(doc["input"], dtype=np.int32),
                w=np.asarray(doc["filters"], dtype=np.int32),
            )
        if kernel == "fft":
            return FftOperands(
                re=np.asarray(doc["re"], dtype=np.int32), im=np.asarray(doc["im"], dtype=np.int32)
            )
    except KeyError as exc:
        raise BadArguments(f"operands for {kernel!r} missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise BadArguments(f"malformed operand tensors for {kernel!r}: {exc}") from exc
    raise UnknownKernel(f"no operand layout for kernel {kernel!r}")


def operands_to_json(ops: Operands) -> dict:
    if isinstance(ops, MatMulOperands):
        return {"kernel": "mm", "a": ops.a.tolist(), "b": ops.b.tolist()}
    if isinstance(ops, ConvOperands):
        return {"kernel": "conv", "input": ops.x.tolist(), "filters": ops.w.tolist()}
    return {"kernel": "fft", "re": ops.re.tolist(), "im": ops.im.tolist()}


# ------------------------------------------------------------ mailbox


class MailboxStatus(Enum):
    IDLE = 0
    DOORBELL = 1
    BUSY = 2
    DONE = 3
    ERROR = 4


_LEGAL_TRANSITIONS = {
    MailboxStatus.IDLE: (MailboxStatus.DOORBELL,),
    MailboxStatus.DOORBELL: (MailboxStatus.BUSY,),
    MailboxStatus.BUSY: (MailboxStatus.DONE, MailboxStatus.ERROR),
    MailboxStatus.DONE: (MailboxStatus.IDLE,),
    MailboxStatus.ERROR: (MailboxStatus.IDLE,),
}


@dataclass(frozen=True)
class MailboxLayout:
    """Word-granular regions inside the shared mailbox memory."""

    status_addr: int = 0
    config_base: int = 8
    input_base: int = 16
    input_words: int = 2000
    output_base: int = 2016
    output_words: int = 1568
    config_words: int = CONFIG_WORDS

    def __post_init__(self):
        regions = [
            ("status", self.status_addr, 1),
            ("config", self.config_base, self.config_words),
            ("input", self.input_base, self.input_words),
            ("output", self.output_base, self.output_words),
        ]
        for name, base, length in regions:
            if base < 0 or length <= 0:
                raise BadArguments(f"mailbox {name} region malformed: base {base}, words {length}")
        spans = sorted((base, base + length, name) for name, base, length in regions)
        for (a0, a1, n0), (b0, _b1, n1) in zip(spans, spans[1:]):
            if b0 < a1:
                raise BadArguments(f"mailbox regions {n0} and {n1} overlap")

    @property
    def total_words(self) -> int:
        return max(
            self.status_addr + 1,
            self.config_base + self.config_words,
            self.input_base + self.input_words,
            self.output_base + self.output_words,
        )


class Mailbox:
    """Shared-memory handshake area with an enforced status protocol."""

    def __init__(self, layout: MailboxLayout):
        self.layout = layout
        self.words = np.zeros(layout.total_words, dtype=np.int32)
        self.error_detail = ""

    @property
    def status(self) -> MailboxStatus:
        return MailboxStatus(int(self.words[self.layout.status_addr]))

    def _set_status(self, new: MailboxStatus) -> None:
        cur = self.status
        if new not in _LEGAL_TRANSITIONS[cur]:
            raise MailboxProtocolError(f"illegal status transition {cur.name} -> {new.name}")
        self.words[self.layout.status_addr] = new.value

    # -- host side

    def write_config(self, kernel_code: int, dims: tuple[int, int, int, int]) -> None:
        if self.status is not MailboxStatus.IDLE:
            raise MailboxBusy(f"config write while mailbox is {self.status.name}")
        lay = self.layout
        cfg = np.zeros(lay.config_words, dtype=np.int32)
        cfg[0] = kernel_code
        cfg[1:5] = dims
        cfg[5] = lay.input_base
        cfg[6] = lay.output_base
        self.words[lay.config_base : lay.config_base + lay.config_words] = cfg

    def write_input(self, data: np.ndarray) -> None:
        if self.status is not MailboxStatus.IDLE:
            raise MailboxBusy(f"input write while mailbox is {self.status.name}")
        if len(data) > self.layout.input_words:
            raise ShapeMismatch(
                f"input of {len(data)} words exceeds region of {self.layout.input_words}"
            )
        self.words[self.layout.input_base : self.layout.input_base + len(data)] = data

    def ring_doorbell(self) -> None:
        if self.status is not MailboxStatus.IDLE:
            raise MailboxBusy(f"doorbell while mailbox is {self.status.name}")
        self._set_status(MailboxStatus.DOORBELL)

    def read_output(self, nwords: int) -> np.ndarray:
        if self.status is not MailboxStatus.DONE:
            raise MailboxProtocolError(f"output read while mailbox is {self.status.name}")
        base = self.layout.output_base
        return self.words[base : base + nwords].copy()

    def acknowledge(self) -> None:
        """Host acknowledges a finished (or failed) offload."""
        self._set_status(MailboxStatus.IDLE)

    def reset(self) -> None:
        self.words[:] = 0
        self.error_detail = ""

    # -- device side

    def read_config(self) -> np.ndarray:
        base = self.layout.config_base
        return self.words[base : base + self.layout.config_words].copy()

    def accept(self) -> None:
        self._set_status(MailboxStatus.BUSY)

    def finish(self, output: np.ndarray) -> None:
        if len(output) > self.layout.output_words:
            raise ShapeMismatch(
                f"output of {len(output)} words exceeds region of {self.layout.output_words}"
            )
        base = self.layout.output_base
        self.words[base : base + len(output)] = output
        self._set_status(MailboxStatus.DONE)

    def fail(self, detail: str) -> None:
        self.error_detail = detail
        self._set_status(MailboxStatus.ERROR)


# ------------------------------------------------------------ accelerators


class Stage(Enum):
    SOFTWARE_MODEL = "software_model"
    RTL_STAGE = "rtl_stage"


@dataclass(frozen=True)
class AcceleratorSpec:
    """Static description of one accelerator candidate."""

    name: str
    stage: Stage
    kernels: tuple[str, ...]
    timing: Mapping[str, int] | None = None  # kernel id -> cycles (RtlStage)
    power: DomainPower | None = None  # its power domain (RtlStage)
    mailbox: MailboxLayout = MailboxLayout()

    def __post_init__(self):
        if not self.name:
            raise BadArguments("accelerator name must be non-empty")
        if self.stage is Stage.RTL_STAGE:
            if self.timing is None or self.power is None:
                raise IncompleteRtlSpec(
                    f"RTL-stage accelerator {self.name!r} needs timing and power annotations"
                )
            missing = [k for k in self.kernels if k not in self.timing]
            if missing:
                raise IncompleteRtlSpec(
                    f"RTL-stage accelerator {self.name!r} lacks timing for kernels {missing}"
                )

    def domain_spec(self) -> DomainSpec:
        return DomainSpec(id=self.name, kind=DomainKind.LOGIC, name=f"{self.name} accelerator")

    def energy_contribution(self, host: EnergyModel) -> EnergyModel:
        """This accelerator's domain as a mergeable model fragment."""
        if self.power is None:
            raise IncompleteRtlSpec(f"accelerator {self.name!r} carries no power annotation")
        return EnergyModel(
            technology=f"accel-{self.name}",
            voltage_v=host.voltage_v,
            ref_freq_hz=host.ref_freq_hz,
            domains={self.name: self.power},
        )


def parse_accelerator(doc: dict) -> AcceleratorSpec:
    try:
        stage = Stage(doc["stage"])
        power = None
        if "power" in doc:
            p = doc["power"]
            power = DomainPower(
                active_uw=float(p["active_uw"]),
                clock_gated_uw=float(p["clock_gated_uw"]),
                power_gated_uw=float(p["power_gated_uw"]),
                retention_uw=float(p["retention_uw"]) if "retention_uw" in p else None,
            )
        layout = MailboxLayout(**doc["mailbox"]) if "mailbox" in doc else MailboxLayout()
        timing = {str(k): int(v) for k, v in doc["timing"].items()} if "timing" in doc else None
        return AcceleratorSpec(
            name=str(doc["name"]),
            stage=stage,
            kernels=tuple(doc["kernels"]),
            timing=timing,
            power=power,
            mailbox=layout,
        )
    except KeyError as exc:
        raise BadArguments(f"accelerator spec missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise BadArguments(f"malformed accelerator spec: {exc}") from exc


def load_accelerator(path: str | Path) -> AcceleratorSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_accelerator(json.load(fh))


class Accelerator:
    """A registered accelerator: spec plus its live mailbox."""

    def __init__(self, spec: AcceleratorSpec):
        self.spec = spec
        self.mailbox = Mailbox(spec.mailbox)

    def service(self) -> None:
        """Device-side turn of the handshake: validate config, compute,
        publish results. Both stages execute the same golden kernels."""
        mb = self.mailbox
        if mb.status is not MailboxStatus.DOORBELL:
            raise MailboxProtocolError(f"service called while mailbox is {mb.status.name}")
        mb.accept()
        cfg = mb.read_config()
        code = int(cfg[0])
        name = {v: k for k, v in _KERNEL_CODES.items()}.get(code)
        if name is None or name not in self.spec.kernels:
            mb.fail(f"unsupported or missing kernel code {code}")
            return
        dims = tuple(int(d) for d in cfg[1:5])
        expected = _CANONICAL_DIMS[name]
        if dims != expected:
            mb.fail(f"dimension words {dims} do not match {name} configuration {expected}")
            return
        base = int(cfg[5])
        data = mb.words[base : base + input_words(name)]
        if name == "mm":
            a = data[: _words(MM_SHAPE_A)].reshape(MM_SHAPE_A)
            b = data[_words(MM_SHAPE_A) :].reshape(MM_SHAPE_B)
            out = kernels.matmul_i32(a, b).ravel()
        elif name == "conv":
            x = data[: _words(CONV_SHAPE_X)].reshape(CONV_SHAPE_X)
            w = data[_words(CONV_SHAPE_X) :].reshape(CONV_SHAPE_W)
            out = kernels.conv2d_i32(x, w).ravel()
        else:
            fr, fi = kernels.fft512_q31(data[0::2].copy(), data[1::2].copy())
            out = np.empty(2 * FFT_POINTS, dtype=np.int32)
            out[0::2] = fr
            out[1::2] = fi
        mb.finish(out)


_CANONICAL_DIMS = {
    "mm": (MM_SHAPE_A[0], MM_SHAPE_A[1], MM_SHAPE_B[1], 0),
    "conv": (CONV_SHAPE_X[0], CONV_SHAPE_X[1], CONV_SHAPE_X[2], CONV_SHAPE_W[0]),
    "fft": (FFT_POINTS, 0, 0, 0),
}


# ------------------------------------------------------------ platform


@dataclass(frozen=True)
class Platform:
    """Domain list plus registered accelerators; host domain is ``cpu``
    unless stated otherwise."""

    domains: tuple[DomainSpec, ...]
    host_id: str = "cpu"
    accelerators: Mapping[str, Accelerator] = field(default_factory=dict)

    def __post_init__(self):
        ids = [d.id for d in self.domains]
        if len(set(ids)) != len(ids):
            raise DuplicateName(f"platform domain ids collide: {ids}")
        if self.host_id not in ids:
            raise BadArguments(f"host domain {self.host_id!r} absent from platform")

    def domain_ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.domains)

    def accel_domain_ids(self) -> frozenset[str]:
        return frozenset(
            name for name, acc in self.accelerators.items() if acc.spec.stage is Stage.RTL_STAGE
        )


def register_accelerator(platform: Platform, spec: AcceleratorSpec) -> Platform:
    """Returns a platform extended with ``spec``.

    RTL-stage accelerators contribute a power domain named after the
    accelerator; software models are functional-only and add none.
    """
    if spec.name in platform.accelerators:
        raise DuplicateName(f"accelerator {spec.name!r} already registered")
    domains = platform.domains
    if spec.stage is Stage.RTL_STAGE:
        if spec.name in platform.domain_ids():
            raise DuplicateName(f"domain id {spec.name!r} already present on the platform")
        domains = domains + (spec.domain_spec(),)
    accels = dict(platform.accelerators)
    accels[spec.name] = Accelerator(spec)
    return Platform(domains=domains, host_id=platform.host_id, accelerators=accels)


# ------------------------------------------------------------ offload


@dataclass(frozen=True)
class OffloadResult:
    output: np.ndarray | tuple[np.ndarray, np.ndarray]
    host_cycles: int  # config + operand + result transfer on the host
    accel_cycles: int  # kernel execution on the accelerator domain

    @property
    def total_cycles(self) -> int:
        return self.host_cycles + self.accel_cycles


def offload(accel: Accelerator, operands: Operands) -> OffloadResult:
    """One full mailbox handshake against a registered accelerator."""
    spec = accel.spec
    kernel = operands.kernel
    if kernel not in spec.kernels:
        raise UnsupportedKernel(f"accelerator {spec.name!r} does not implement {kernel!r}")
    operands.check_canonical()
    mb = accel.mailbox
    if mb.status is not MailboxStatus.IDLE:
        raise MailboxBusy(f"accelerator {spec.name!r} mailbox is {mb.status.name}")
    mb.write_config(_KERNEL_CODES[kernel], operands.dims())
    mb.write_input(operands.pack_input())
    mb.ring_doorbell()
    accel.service()
    if mb.status is MailboxStatus.ERROR:
        detail = mb.error_detail
        mb.acknowledge()
        raise AcceleratorError(f"{spec.name}: {detail}")
    out_words = mb.read_output(output_words(kernel))
    result = operands.unpack_output(out_words)
    mb.acknowledge()
    host_cycles = transfer_words(kernel)
    accel_cycles = 0
    if spec.stage is Stage.RTL_STAGE:
        accel_cycles = int(spec.timing[kernel])
    return OffloadResult(output=result, host_cycles=host_cycles, accel_cycles=accel_cycles)

"""femu: a deterministic, desk-scale emulator for ultra-low-power
heterogeneous SoCs.

The package models a small always-on host platform at phase granularity:
per-domain power-state cycle counters, state-time x state-power energy
estimation, virtualized sample acquisition and storage peripherals, and
mailbox-style accelerator offload with golden integer kernels. Identical
inputs produce bit-identical outputs, including across processes.
"""

from .accel import (
    Accelerator,
    AcceleratorSpec,
    Mailbox,
    MailboxLayout,
    MailboxStatus,
    OffloadResult,
    Platform,
    Stage,
    load_accelerator,
    offload,
    parse_accelerator,
    parse_operands,
    register_accelerator,
    transfer_words,
)
from .energy import (
    CounterMode,
    EnergyReport,
    breakdown,
    counters_snapshot,
    estimate_energy,
)
from .engine import (
    Acquire,
    Compute,
    EngineConfig,
    EventQueue,
    FlashRead,
    FlashWrite,
    Marker,
    PhaseResult,
    SimOutcome,
    Simulator,
    Sleep,
    TimingTable,
    WorkloadProgram,
    acquire_closed_form,
    load_program,
    load_program_file,
    parse_program,
    program_to_json,
)
from .model import (
    ClockConfig,
    DEFAULT_PLATFORM,
    DomainKind,
    DomainPower,
    DomainSpec,
    EnergyModel,
    PowerState,
    StateCounters,
    canonical_json,
    cycles_to_seconds,
    load_energy_model,
    merge_models,
    parse_energy_model,
    validate_energy_model,
)
from .periph import (
    AdcConfig,
    AdcSession,
    FlashMode,
    HardFifo,
    SampleSource,
    SoftFifo,
    UnderrunPolicy,
    VirtualFlash,
    flash_transfer_cycles,
    no_underrun_bound_cycles,
)
from .scenarios import ScenarioResult, load_scenario, run_scenario, shipped_scenarios

__version__ = "0.1.0"

__all__ = [
    "Accelerator",
    "AcceleratorSpec",
    "Acquire",
    "AdcConfig",
    "AdcSession",
    "ClockConfig",
    "Compute",
    "CounterMode",
    "DEFAULT_PLATFORM",
    "DomainKind",
    "DomainPower",
    "DomainSpec",
    "EnergyModel",
    "EnergyReport",
    "EngineConfig",
    "EventQueue",
    "FlashMode",
    "FlashRead",
    "FlashWrite",
    "HardFifo",
    "Mailbox",
    "MailboxLayout",
    "MailboxStatus",
    "Marker",
    "OffloadResult",
    "PhaseResult",
    "Platform",
    "PowerState",
    "SampleSource",
    "ScenarioResult",
    "SimOutcome",
    "Simulator",
    "Sleep",
    "SoftFifo",
    "Stage",
    "StateCounters",
    "TimingTable",
    "UnderrunPolicy",
    "VirtualFlash",
    "WorkloadProgram",
    "acquire_closed_form",
    "breakdown",
    "canonical_json",
    "counters_snapshot",
    "cycles_to_seconds",
    "estimate_energy",
    "flash_transfer_cycles",
    "load_accelerator",
    "load_energy_model",
    "load_program",
    "load_program_file",
    "load_scenario",
    "merge_models",
    "no_underrun_bound_cycles",
    "offload",
    "parse_accelerator",
    "parse_energy_model",
    "parse_operands",
    "parse_program",
    "program_to_json",
    "register_accelerator",
    "run_scenario",
    "shipped_scenarios",
    "transfer_words",
    "validate_energy_model",
    "__version__",
]

"""Shared platform vocabulary: clocks, power domains, power states,
energy models, and power-state cycle counters.

Everything here is an immutable value record; operations are pure
functions. Cycle counts are 64-bit integers, domain powers are
microwatts at a stated reference operating point, and energy becomes
joules only at report time (metrics layer).

The on-disk energy-model format is JSON::

    {
      "technology": "tsmc65-heepocrates-uncalibrated",
      "voltage_v": 0.8,
      "ref_freq_hz": 20000000,
      "domains": {
        "cpu": {"kind": "logic", "active_uw": 800.0,
                "clock_gated_uw": 100.0, "power_gated_uw": 5.0},
        "mem": {"kind": "memory", "active_uw": 600.0,
                "clock_gated_uw": 150.0, "power_gated_uw": 2.0,
                "retention_uw": 20.0}
      }
    }

The same file doubles as the platform definition: each entry yields a
:class:`DomainSpec` whose id is the key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    ConservationViolation,
    CounterOverflow,
    DomainIdCollision,
    ModelValidationError,
    ValidationIssue,
)

COUNTER_LIMIT = 1 << 64  # counters are 64-bit; crossing this is a hard error


def canonical_json(doc) -> str:
    """Stable serialization: sorted keys, minimal separators, floats via
    repr (shortest round trip). Byte-identical across runs and hosts;
    NaN/Inf are rejected rather than emitted as nonstandard tokens."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


class PowerState(Enum):
    ACTIVE = "active"
    CLOCK_GATED = "clock_gated"
    POWER_GATED = "power_gated"
    RETENTION = "retention"  # legal only for memory domains


# Fixed iteration order used everywhere counters or energies are summed
# or serialized, so results and reports are reproducible bit for bit.
STATE_ORDER = (
    PowerState.ACTIVE,
    PowerState.CLOCK_GATED,
    PowerState.POWER_GATED,
    PowerState.RETENTION,
)
SLEEP_STATES = STATE_ORDER[1:]


class DomainKind(Enum):
    LOGIC = "logic"
    MEMORY = "memory"


@dataclass(frozen=True)
class ClockConfig:
    """Host clock. Default matches the silicon reference point (20 MHz)."""

    freq_hz: int = 20_000_000

    def __post_init__(self):
        if not isinstance(self.freq_hz, int) or self.freq_hz <= 0:
            raise ValueError(f"clock frequency must be a positive integer, got {self.freq_hz!r}")


def cycles_to_seconds(cycles: int, clock: ClockConfig) -> float:
    """Wall time represented by a cycle count at the given clock."""
    if cycles < 0:
        raise ValueError(f"cycle count must be non-negative, got {cycles}")
    return cycles / clock.freq_hz


@dataclass(frozen=True)
class DomainSpec:
    """One power domain of the modeled platform."""

    id: str
    kind: DomainKind
    name: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("domain id must be non-empty")


@dataclass(frozen=True)
class DomainPower:
    """Per-state power draw of one domain, in microwatts.

    ``retention_uw`` is meaningful only for memory domains; validation
    rejects it on logic domains.
    """

    active_uw: float
    clock_gated_uw: float
    power_gated_uw: float
    retention_uw: float | None = None

    def state_uw(self, state: PowerState) -> float:
        if state is PowerState.ACTIVE:
            return self.active_uw
        if state is PowerState.CLOCK_GATED:
            return self.clock_gated_uw
        if state is PowerState.POWER_GATED:
            return self.power_gated_uw
        return self.retention_uw if self.retention_uw is not None else 0.0


@dataclass(frozen=True)
class EnergyModel:
    """Per-domain, per-state power table at one operating point."""

    technology: str
    voltage_v: float
    ref_freq_hz: int
    domains: Mapping[str, DomainPower]

    def to_json(self, kinds: Mapping[str, DomainKind] | None = None) -> dict:
        doc = {
            "technology": self.technology,
            "voltage_v": self.voltage_v,
            "ref_freq_hz": self.ref_freq_hz,
            "domains": {},
        }
        for did in sorted(self.domains):
            pw = self.domains[did]
            entry = {
                "active_uw": pw.active_uw,
                "clock_gated_uw": pw.clock_gated_uw,
                "power_gated_uw": pw.power_gated_uw,
            }
            if kinds is not None:
                entry["kind"] = kinds[did].value
            if pw.retention_uw is not None:
                entry["retention_uw"] = pw.retention_uw
            doc["domains"][did] = entry
        return doc


@dataclass(frozen=True)
class ValidatedModel:
    """Result of :func:`validate_energy_model`: the model plus warnings."""

    model: EnergyModel
    warnings: tuple[ValidationIssue, ...] = ()


def parse_energy_model(doc: dict) -> tuple[EnergyModel, tuple[DomainSpec, ...]]:
    """Parses an energy-model JSON document.

    Returns the model and the platform domain list implied by the
    per-domain ``kind`` fields. Structural problems raise
    ModelValidationError; semantic checks live in
    :func:`validate_energy_model`.
    """
    issues = []
    for key in ("technology", "voltage_v", "ref_freq_hz", "domains"):
        if key not in doc:
            issues.append(ValidationIssue("MissingField", key, "required field absent"))
    if issues:
        raise ModelValidationError(issues)

    domains: dict[str, DomainPower] = {}
    specs: list[DomainSpec] = []
    for did, entry in doc["domains"].items():
        kind_raw = entry.get("kind", "logic")
        try:
            kind = DomainKind(kind_raw)
        except ValueError:
            issues.append(ValidationIssue("UnknownKind", f"domains.{did}.kind", f"unknown kind {kind_raw!r}"))
            continue
        try:
            power = DomainPower(
                active_uw=float(entry["active_uw"]),
                clock_gated_uw=float(entry["clock_gated_uw"]),
                power_gated_uw=float(entry["power_gated_uw"]),
                retention_uw=float(entry["retention_uw"]) if "retention_uw" in entry else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            issues.append(ValidationIssue("BadPowerEntry", f"domains.{did}", str(exc)))
            continue
        domains[did] = power
        specs.append(DomainSpec(id=did, kind=kind, name=entry.get("name", did)))
    if issues:
        raise ModelValidationError(issues)
    model = EnergyModel(
        technology=str(doc["technology"]),
        voltage_v=float(doc["voltage_v"]),
        ref_freq_hz=int(doc["ref_freq_hz"]),
        domains=domains,
    )
    return model, tuple(specs)


def load_energy_model(path: str | Path) -> tuple[EnergyModel, tuple[DomainSpec, ...]]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_energy_model(json.load(fh))


def validate_energy_model(model: EnergyModel, platform: Iterable[DomainSpec]) -> ValidatedModel:
    """Checks a model against a platform's domain list.

    Hard errors (missing/unknown domains, negative powers, retention on
    a logic domain) raise ModelValidationError with the full issue list.
    Non-monotonic state powers and defaulted retention only produce
    warnings attached to the result.
    """
    platform = tuple(platform)
    issues: list[ValidationIssue] = []
    warnings: list[ValidationIssue] = []

    seen: dict[str, DomainSpec] = {}
    for spec in platform:
        if spec.id in seen:
            raise DomainIdCollision(f"duplicate domain id {spec.id!r} in platform")
        seen[spec.id] = spec

    for spec in platform:
        if spec.id not in model.domains:
            issues.append(ValidationIssue("MissingDomain", spec.id, "platform domain absent from model"))
    for did in model.domains:
        if did not in seen:
            issues.append(ValidationIssue("UnknownDomain", did, "model domain absent from platform"))

    for did in sorted(model.domains):
        pw = model.domains[did]
        spec = seen.get(did)
        values = {
            "active_uw": pw.active_uw,
            "clock_gated_uw": pw.clock_gated_uw,
            "power_gated_uw": pw.power_gated_uw,
        }
        if pw.retention_uw is not None:
            values["retention_uw"] = pw.retention_uw
        for fname, val in values.items():
            if val < 0:
                issues.append(ValidationIssue("NegativePower", f"{did}.{fname}", f"negative power {val}"))
        if spec is not None:
            if spec.kind is DomainKind.LOGIC and pw.retention_uw is not None:
                issues.append(
                    ValidationIssue("RetentionOnLogicDomain", did, "retention power on a logic domain")
                )
            if spec.kind is DomainKind.MEMORY and pw.retention_uw is None:
                warnings.append(
                    ValidationIssue("RetentionDefaulted", did, "memory domain without retention power; 0 uW assumed")
                )
        # Deeper sleep should not draw more than lighter sleep; real
        # tables occasionally violate this, so it is only a warning.
        if pw.clock_gated_uw > pw.active_uw:
            warnings.append(ValidationIssue("NonMonotonic", did, "clock_gated_uw above active_uw"))
        if pw.power_gated_uw > pw.clock_gated_uw:
            warnings.append(ValidationIssue("NonMonotonic", did, "power_gated_uw above clock_gated_uw"))
        if pw.retention_uw is not None and pw.retention_uw > pw.clock_gated_uw:
            warnings.append(ValidationIssue("NonMonotonic", did, "retention_uw above clock_gated_uw"))

    if issues:
        raise ModelValidationError(issues)
    return ValidatedModel(model=model, warnings=tuple(warnings))


def merge_models(host: EnergyModel, accel: EnergyModel) -> EnergyModel:
    """Combines a host model with an accelerator's contribution.

    Domain ids must be disjoint. The technology label records the
    composition; voltage and reference frequency must agree.
    """
    overlap = set(host.domains) & set(accel.domains)
    if overlap:
        raise DomainIdCollision(f"domains defined on both sides: {sorted(overlap)}")
    if host.voltage_v != accel.voltage_v or host.ref_freq_hz != accel.ref_freq_hz:
        raise ModelValidationError(
            [ValidationIssue("OperatingPointMismatch", "voltage_v/ref_freq_hz", "models target different operating points")]
        )
    merged = dict(host.domains)
    merged.update(accel.domains)
    return EnergyModel(
        technology=f"{host.technology}+{accel.technology}",
        voltage_v=host.voltage_v,
        ref_freq_hz=host.ref_freq_hz,
        domains=merged,
    )


@dataclass(frozen=True)
class StateCounters:
    """Per-domain, per-state cycle counts over one counting window.

    Conservation invariant: for every domain the four state counts sum
    to ``window_cycles`` exactly.
    """

    window_cycles: int
    cycles: Mapping[str, Mapping[PowerState, int]]

    def domain_total(self, domain: str) -> int:
        return sum(self.cycles[domain].values())

    def get(self, domain: str, state: PowerState) -> int:
        return self.cycles[domain].get(state, 0)

    def check_conservation(self) -> None:
        if not (0 <= self.window_cycles < COUNTER_LIMIT):
            raise CounterOverflow(f"window_cycles {self.window_cycles} outside 64-bit range")
        for did in self.cycles:
            total = 0
            for state in STATE_ORDER:
                c = self.cycles[did].get(state, 0)
                if c < 0 or c >= COUNTER_LIMIT:
                    raise CounterOverflow(f"counter {did}/{state.value} outside 64-bit range")
                total += c
            if total != self.window_cycles:
                raise ConservationViolation(
                    f"domain {did!r}: states sum to {total}, window is {self.window_cycles}"
                )

    def add(self, other: "StateCounters") -> "StateCounters":
        """Concatenates two counting windows (domains must match)."""
        if set(self.cycles) != set(other.cycles):
            raise ConservationViolation("cannot add counters over different domain sets")
        merged = {
            did: {s: self.get(did, s) + other.get(did, s) for s in STATE_ORDER}
            for did in self.cycles
        }
        return StateCounters(self.window_cycles + other.window_cycles, merged)

    def to_json(self) -> dict:
        return {
            "window_cycles": self.window_cycles,
            "cycles": {
                did: {s.value: self.get(did, s) for s in STATE_ORDER}
                for did in sorted(self.cycles)
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> "StateCounters":
        cycles = {
            did: {PowerState(s): int(c) for s, c in entry.items()}
            for did, entry in doc["cycles"].items()
        }
        return cls(window_cycles=int(doc["window_cycles"]), cycles=cycles)

    @classmethod
    def zero(cls, domains: Iterable[str]) -> "StateCounters":
        return cls(0, {d: {s: 0 for s in STATE_ORDER} for d in domains})


DEFAULT_PLATFORM = (
    DomainSpec(id="cpu", kind=DomainKind.LOGIC, name="host core"),
    DomainSpec(id="mem", kind=DomainKind.MEMORY, name="on-chip memory"),
)

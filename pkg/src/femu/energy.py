"""Energy estimation from power-state cycle counters.

The estimate is the state-time/state-power product, summed over a
fixed order so reports are reproducible bit for bit:

    energy[d][s] = (power_uw[d][s] / 1e6) * (cycles[d][s] / freq_hz)

domains ascend by id, states follow ``STATE_ORDER``. The division
before multiplication is deliberate: microwatts scale to watts exactly
for the round numbers power tables actually contain, which keeps
hand-checkable fixtures (1000 uW for 20e6 cycles at 20 MHz = 1 mJ)
float-exact.

Counters must satisfy conservation (states sum to the window per
domain) and must cover exactly the model's domain set; anything else
is a hard error rather than a silently partial answer.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .errors import ModelMismatch, NoMarkersPresent
from .model import (
    ClockConfig,
    EnergyModel,
    PowerState,
    STATE_ORDER,
    StateCounters,
)


class CounterMode(Enum):
    AUTOMATIC = "automatic"  # whole-run window
    MANUAL = "manual"  # region between start/stop markers


def counters_snapshot(outcome, mode: CounterMode = CounterMode.AUTOMATIC) -> StateCounters:
    """Selects the counter window of a :class:`~femu.engine.SimOutcome`."""
    if mode is CounterMode.MANUAL:
        if outcome.manual is None:
            raise NoMarkersPresent("program defines no marker phases; only automatic counters exist")
        return outcome.manual
    return outcome.automatic


@dataclass(frozen=True)
class DomainEnergy:
    cycles: Mapping[PowerState, int]
    energy_j: Mapping[PowerState, float]
    total_j: float
    active_share: float
    sleep_share: float  # always the exact complement of active_share


@dataclass(frozen=True)
class EnergyReport:
    technology: str
    voltage_v: float
    freq_hz: int
    window_cycles: int
    window_seconds: float
    domains: Mapping[str, DomainEnergy]  # insertion order = sorted ids
    total_j: float

    def energy_share(self, domain: str) -> float:
        if self.total_j == 0.0:
            return 0.0
        return self.domains[domain].total_j / self.total_j

    def to_json(self) -> dict:
        return {
            "technology": self.technology,
            "voltage_v": self.voltage_v,
            "freq_hz": self.freq_hz,
            "window_cycles": self.window_cycles,
            "window_seconds": self.window_seconds,
            "domains": {
                did: {
                    "cycles": {s.value: de.cycles.get(s, 0) for s in STATE_ORDER},
                    "energy_j": {s.value: de.energy_j[s] for s in STATE_ORDER},
                    "total_j": de.total_j,
                    "active_share": de.active_share,
                    "sleep_share": de.sleep_share,
                }
                for did, de in self.domains.items()
            },
            "energy_shares": {did: self.energy_share(did) for did in self.domains},
            "total_j": self.total_j,
        }

    def csv_rows(self) -> list[list[str]]:
        """Per-state detail rows; floats via repr for stable files."""
        rows = [["domain", "state", "cycles", "seconds", "energy_j"]]
        for did, de in self.domains.items():
            for s in STATE_ORDER:
                rows.append(
                    [
                        did,
                        s.value,
                        str(de.cycles.get(s, 0)),
                        repr(de.cycles.get(s, 0) / self.freq_hz),
                        repr(de.energy_j[s]),
                    ]
                )
        return rows


def state_energy_j(power_uw: float, cycles: int, freq_hz: int) -> float:
    return (power_uw / 1e6) * (cycles / freq_hz)


def estimate_energy(
    counters: StateCounters,
    model: EnergyModel,
    clock: ClockConfig | None = None,
) -> EnergyReport:
    """Turns one counting window into joules against one power table.

    The clock must match the model's reference point when given: power
    values are only meaningful at the operating point they were taken
    at. Counter/model domain sets must coincide exactly.
    """
    counters.check_conservation()
    if clock is not None and clock.freq_hz != model.ref_freq_hz:
        raise ModelMismatch(
            f"clock {clock.freq_hz} Hz differs from model reference {model.ref_freq_hz} Hz"
        )
    freq = model.ref_freq_hz
    have = set(counters.cycles)
    want = set(model.domains)
    if have != want:
        missing = sorted(want - have)
        extra = sorted(have - want)
        raise ModelMismatch(
            f"counter domains do not match model domains (missing {missing}, unmodeled {extra})"
        )

    window = counters.window_cycles
    domains: dict[str, DomainEnergy] = {}
    total = 0.0
    for did in sorted(have):
        power = model.domains[did]
        cyc = {s: counters.get(did, s) for s in STATE_ORDER}
        energy = {s: state_energy_j(power.state_uw(s), cyc[s], freq) for s in STATE_ORDER}
        dom_total = 0.0
        for s in STATE_ORDER:
            dom_total += energy[s]
        active_share = cyc[PowerState.ACTIVE] / window if window else 0.0
        domains[did] = DomainEnergy(
            cycles=cyc,
            energy_j=energy,
            total_j=dom_total,
            active_share=active_share,
            sleep_share=1.0 - active_share if window else 0.0,
        )
        total += dom_total
    return EnergyReport(
        technology=model.technology,
        voltage_v=model.voltage_v,
        freq_hz=freq,
        window_cycles=window,
        window_seconds=window / freq,
        domains=domains,
        total_j=total,
    )


def breakdown(report: EnergyReport) -> list[tuple[str, float, float]]:
    """(domain, joules, share) rows, largest consumer first."""
    rows = [(did, de.total_j, report.energy_share(did)) for did, de in report.domains.items()]
    rows.sort(key=lambda row: (-row[1], row[0]))
    return rows

"""Scenario running: whole experiments as one JSON document.

A scenario names an energy model, a timing table, optional accelerator
specs, ADC/storage defaults, a list of runs (program + per-run
overrides), and a list of assertions over the collected results. The
runner executes every run, writes one report per run plus a scenario
summary (JSON and CSV), evaluates the assertions, and raises
``AssertionFailed`` listing every violated check.

All referenced paths resolve relative to the scenario file, so the
shipped scenarios work from an installed package as well as a source
tree. Outputs contain no timestamps or machine identity; rerunning a
scenario reproduces every artifact byte for byte.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .accel import Platform, load_accelerator, register_accelerator
from .engine import (
    EngineConfig,
    SimOutcome,
    Simulator,
    TimingTable,
    load_program_file,
)
from .energy import EnergyReport, estimate_energy
from .errors import AssertionFailed, BadArguments, MissingInput
from .model import (
    ClockConfig,
    EnergyModel,
    PowerState,
    load_energy_model,
    merge_models,
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
)


def _require_file(path: Path, role: str) -> Path:
    if not path.is_file():
        raise MissingInput(f"{role} file not found: {path}")
    return path


@dataclass(frozen=True)
class ScenarioRun:
    id: str
    program_path: Path
    adc: Mapping | None
    flash: Mapping | None


@dataclass(frozen=True)
class Scenario:
    name: str
    base_dir: Path
    clock: ClockConfig
    model_path: Path
    timing_path: Path
    accel_paths: tuple[Path, ...]
    adc_defaults: Mapping
    flash_defaults: Mapping
    engine: EngineConfig
    runs: tuple[ScenarioRun, ...]
    assertions: tuple[Mapping, ...]


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path).resolve()
    _require_file(path, "scenario")
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    base = path.parent
    try:
        runs = []
        seen = set()
        for entry in doc["runs"]:
            rid = str(entry["id"])
            if rid in seen:
                raise BadArguments(f"run id {rid!r} appears twice")
            seen.add(rid)
            runs.append(
                ScenarioRun(
                    id=rid,
                    program_path=_require_file((base / entry["program"]).resolve(), f"program for run {rid!r}"),
                    adc=entry.get("adc"),
                    flash=entry.get("flash"),
                )
            )
        engine_doc = doc.get("engine", {})
        engine = EngineConfig(
            wake_latency_cycles=int(engine_doc.get("wake_latency_cycles", 0)),
            offload_wait_state=PowerState(engine_doc.get("offload_wait_state", "clock_gated")),
        )
        return Scenario(
            name=str(doc["name"]),
            base_dir=base,
            clock=ClockConfig(freq_hz=int(doc.get("clock_hz", 20_000_000))),
            model_path=_require_file((base / doc["energy_model"]).resolve(), "energy model"),
            timing_path=_require_file((base / doc["timing"]).resolve(), "timing table"),
            accel_paths=tuple(
                _require_file((base / p).resolve(), "accelerator spec") for p in doc.get("accelerators", [])
            ),
            adc_defaults=doc.get("adc", {}),
            flash_defaults=doc.get("flash", {}),
            engine=engine,
            runs=tuple(runs),
            assertions=tuple(doc.get("assertions", ())),
        )
    except KeyError as exc:
        raise BadArguments(f"scenario document missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise BadArguments(f"malformed scenario document: {exc}") from exc


def build_platform(scenario: Scenario) -> tuple[Platform, EnergyModel]:
    """Platform and merged energy model implied by the scenario files."""
    model, specs = load_energy_model(scenario.model_path)
    validate_energy_model(model, specs)
    platform = Platform(domains=specs)
    for accel_path in scenario.accel_paths:
        spec = load_accelerator(accel_path)
        platform = register_accelerator(platform, spec)
        if spec.power is not None:
            model = merge_models(model, spec.energy_contribution(model))
    return platform, model


def _make_source(doc: Mapping, base: Path, default_seed: int) -> SampleSource:
    if "file" in doc:
        return SampleSource.from_file(_require_file((base / doc["file"]).resolve(), "sample source"))
    kind = doc.get("kind", "ramp")
    count = int(doc.get("count", 0))
    seed = int(doc.get("seed", default_seed))
    return SampleSource.synthetic(kind, count, seed=seed)


def _build_adc(merged: Mapping, base: Path, clock: ClockConfig, seed: int) -> AdcSession | None:
    if "fs_hz" not in merged:
        return None
    try:
        soft = SoftFifo(
            capacity=int(merged["soft_capacity"]),
            refill_batch=int(merged["refill_batch"]),
            refill_latency_cycles=int(merged["refill_latency_cycles"]),
        )
        hard = HardFifo(capacity=int(merged["hard_capacity"]))
        config = AdcConfig(
            fs_hz=int(merged["fs_hz"]),
            underrun_policy=UnderrunPolicy(merged.get("underrun_policy", "fatal")),
        )
        source = _make_source(merged.get("source", {}), base, seed)
    except KeyError as exc:
        raise BadArguments(f"adc configuration missing field {exc}") from exc
    return AdcSession(source=source, config=config, soft=soft, hard=hard, clock=clock)


def _build_flash(merged: Mapping) -> VirtualFlash:
    mode = FlashMode(merged.get("mode", "virtual"))
    return VirtualFlash(mode=mode)


@dataclass(frozen=True)
class RunArtifacts:
    run: ScenarioRun
    outcome: SimOutcome
    energy: EnergyReport


@dataclass(frozen=True)
class AssertionOutcome:
    check: Mapping
    ok: bool
    detail: str

    def to_json(self) -> dict:
        return {"check": dict(self.check), "ok": self.ok, "detail": self.detail}


@dataclass(frozen=True)
class ScenarioResult:
    name: str
    out_dir: Path | None
    runs: Mapping[str, RunArtifacts]
    assertions: tuple[AssertionOutcome, ...]

    @property
    def ok(self) -> bool:
        return all(a.ok for a in self.assertions)


def _merged(defaults: Mapping, override: Mapping | None) -> dict:
    out = dict(defaults)
    if override:
        out.update(override)
        # nested source dicts replace rather than merge; a run that sets
        # one keeps its own seed/count entirely
    return out


def execute_run(scenario: Scenario, run: ScenarioRun, platform: Platform, model: EnergyModel, seed: int) -> RunArtifacts:
    program = load_program_file(run.program_path)
    adc = _build_adc(_merged(scenario.adc_defaults, run.adc), scenario.base_dir, scenario.clock, seed)
    flash = _build_flash(_merged(scenario.flash_defaults, run.flash))
    sim = Simulator(
        program=program,
        timing=TimingTable.load(scenario.timing_path),
        platform=platform,
        clock=scenario.clock,
        adc=adc,
        flash=flash,
        config=scenario.engine,
    )
    outcome = sim.run_until()
    energy = estimate_energy(outcome.automatic, model, scenario.clock)
    return RunArtifacts(run=run, outcome=outcome, energy=energy)


# ------------------------------------------------------------ assertions


def _speedup(base: RunArtifacts, test: RunArtifacts) -> float:
    return base.outcome.window_cycles / test.outcome.window_cycles


def _get(runs: Mapping[str, RunArtifacts], rid: str) -> RunArtifacts:
    if rid not in runs:
        raise BadArguments(f"assertion references unknown run {rid!r}")
    return runs[rid]


def evaluate_assertion(check: Mapping, runs: Mapping[str, RunArtifacts]) -> AssertionOutcome:
    kind = check.get("check")
    if kind == "window_seconds_between":
        art = _get(runs, check["run"])
        ws = art.energy.window_seconds
        ok = float(check["min"]) <= ws <= float(check["max"])
        return AssertionOutcome(check, ok, f"run {check['run']}: window {ws} s")
    if kind == "active_share_below":
        art = _get(runs, check["run"])
        share = art.energy.domains[check["domain"]].active_share
        ok = share < float(check["value"])
        return AssertionOutcome(check, ok, f"{check['domain']} active share {share}")
    if kind == "active_share_above":
        art = _get(runs, check["run"])
        share = art.energy.domains[check["domain"]].active_share
        ok = share > float(check["value"])
        return AssertionOutcome(check, ok, f"{check['domain']} active share {share}")
    if kind == "active_share_monotonic":
        shares = [_get(runs, rid).energy.domains[check["domain"]].active_share for rid in check["runs"]]
        ok = all(a < b for a, b in zip(shares, shares[1:]))
        return AssertionOutcome(check, ok, f"shares {shares}")
    if kind == "no_underruns":
        bad = [rid for rid in check["runs"] if _get(runs, rid).outcome.underruns != 0]
        return AssertionOutcome(check, not bad, f"runs with underruns: {bad}" if bad else "no underruns")
    if kind == "speedup_between":
        s = _speedup(_get(runs, check["base_run"]), _get(runs, check["test_run"]))
        ok = float(check["min"]) <= s <= float(check["max"])
        return AssertionOutcome(check, ok, f"{check['base_run']} / {check['test_run']} speedup {s}")
    if kind == "largest_speedup":
        speedups = {
            name: _speedup(_get(runs, pair[0]), _get(runs, pair[1]))
            for name, pair in check["pairs"].items()
        }
        best = max(sorted(speedups), key=lambda n: speedups[n])
        ok = best == check["expect"] and all(
            speedups[best] > v for n, v in speedups.items() if n != best
        )
        return AssertionOutcome(check, ok, f"speedups {speedups}, largest {best!r}")
    if kind == "energy_less":
        a = _get(runs, check["run"]).energy.total_j
        b = _get(runs, check["than_run"]).energy.total_j
        return AssertionOutcome(check, a < b, f"{check['run']} {a} J vs {check['than_run']} {b} J")
    if kind == "duration_ratio":
        base = _get(runs, check["base_run"]).outcome.window_cycles
        test = _get(runs, check["run"]).outcome.window_cycles
        value = check["value"]
        # exact on cycle counts: integral ratios stay in integer arithmetic
        if float(value) == int(value):
            ok = test == base * int(value)
        else:
            ok = base > 0 and test / base == float(value)
        return AssertionOutcome(check, ok, f"{test} / {base} cycles (expect x{value})")
    raise BadArguments(f"unknown assertion check {kind!r}")


# ------------------------------------------------------------ artifacts


def _dump_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _summary_rows(scenario: Scenario, runs: Mapping[str, RunArtifacts], host_id: str) -> list[list[str]]:
    rows = [
        [
            "run_id",
            "window_cycles",
            "window_seconds",
            f"{host_id}_active_share",
            "total_energy_j",
            "stall_cycles",
            "underruns",
        ]
    ]
    for run in scenario.runs:
        art = runs[run.id]
        host = art.energy.domains[host_id]
        rows.append(
            [
                run.id,
                str(art.outcome.window_cycles),
                repr(art.energy.window_seconds),
                repr(host.active_share),
                repr(art.energy.total_j),
                str(art.outcome.stall_cycles),
                str(art.outcome.underruns),
            ]
        )
    return rows


def plot_summary(scenario: Scenario, runs: Mapping[str, RunArtifacts], out_dir: Path, host_id: str) -> Path:
    """Active-share bar chart per run; needs matplotlib (plot extra)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ids = [run.id for run in scenario.runs]
    shares = [runs[rid].energy.domains[host_id].active_share for rid in ids]
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.bar(ids, shares, color="#306fa8")
    ax.set_ylabel(f"{host_id} active share")
    ax.set_ylim(0.0, 1.0)
    ax.set_title(scenario.name)
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    fig.tight_layout()
    target = out_dir / "summary.png"
    fig.savefig(target, dpi=120)
    plt.close(fig)
    return target


def run_scenario(
    path: str | Path,
    out_dir: str | Path | None = None,
    seed: int = 0,
    plot: bool = False,
) -> ScenarioResult:
    """Executes a scenario end to end.

    Writes, when ``out_dir`` is given: ``<run_id>/report.json`` per run,
    ``summary.json``, and ``summary.csv``. Assertion failures raise
    ``AssertionFailed`` after all artifacts are written, listing every
    violated check.
    """
    scenario = load_scenario(path)
    platform, model = build_platform(scenario)
    host_id = platform.host_id

    runs: dict[str, RunArtifacts] = {}
    for run in scenario.runs:
        runs[run.id] = execute_run(scenario, run, platform, model, seed)

    results = tuple(evaluate_assertion(check, runs) for check in scenario.assertions)

    out_path: Path | None = None
    if out_dir is not None:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        for run in scenario.runs:
            art = runs[run.id]
            run_dir = out_path / run.id
            run_dir.mkdir(parents=True, exist_ok=True)
            _dump_json(
                run_dir / "report.json",
                {
                    "run_id": run.id,
                    "program": run.program_path.name,
                    "outcome": art.outcome.to_json(),
                    "energy": art.energy.to_json(),
                },
            )
        _dump_json(
            out_path / "summary.json",
            {
                "scenario": scenario.name,
                "runs": {
                    run.id: {
                        "window_cycles": runs[run.id].outcome.window_cycles,
                        "window_seconds": runs[run.id].energy.window_seconds,
                        "total_energy_j": runs[run.id].energy.total_j,
                        "active_share": runs[run.id].energy.domains[host_id].active_share,
                    }
                    for run in scenario.runs
                },
                "assertions": [a.to_json() for a in results],
            },
        )
        with open(out_path / "summary.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerows(_summary_rows(scenario, runs, host_id))
        if plot:
            plot_summary(scenario, runs, out_path, host_id)

    result = ScenarioResult(name=scenario.name, out_dir=out_path, runs=runs, assertions=results)
    failed = [a for a in results if not a.ok]
    if failed:
        details = "; ".join(f"{a.check.get('check')}: {a.detail}" for a in failed)
        raise AssertionFailed(f"{len(failed)} scenario assertion(s) failed: {details}")
    return result


def shipped_scenarios() -> dict[str, Path]:
    """Name -> path of the scenarios bundled with the package."""
    root = Path(__file__).parent / "data" / "scenarios"
    return {p.stem: p for p in sorted(root.glob("*.json"))}

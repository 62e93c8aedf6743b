"""Scenario runner: whole experiments from one JSON document."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from femu.errors import AssertionFailed, BadArguments, MissingInput
from femu.scenarios import (
    evaluate_assertion,
    load_scenario,
    run_scenario,
    shipped_scenarios,
)

DATA = Path(__file__).parent.parent / "src" / "femu" / "data"


def sleep_program(name: str, cycles: int) -> dict:
    return {
        "name": name,
        "phases": [{"op": "sleep", "mode": "clock_gated", "duration_cycles": cycles}],
    }


def write_scenario(tmp_path: Path, doc: dict, programs: dict[str, dict] | None = None) -> Path:
    for fname, prog in (programs or {}).items():
        (tmp_path / fname).write_text(json.dumps(prog), encoding="utf-8")
    target = tmp_path / "scenario.json"
    target.write_text(json.dumps(doc), encoding="utf-8")
    return target


def base_doc(runs: list[dict], assertions: list[dict] | None = None) -> dict:
    # absolute paths resolve as-is, so the packaged model/timing work
    # from any scratch directory
    return {
        "name": "crafted",
        "energy_model": str(DATA / "models" / "tsmc65_uncalibrated.json"),
        "timing": str(DATA / "timing" / "host_20mhz.json"),
        "runs": runs,
        "assertions": assertions or [],
    }


# ------------------------------------------------------------ shipped


def test_shipped_scenario_names():
    assert set(shipped_scenarios()) == {"acquisition", "processing", "flash"}


@pytest.mark.parametrize("name", ["processing", "flash"])
def test_shipped_scenarios_pass(name, tmp_path):
    result = run_scenario(shipped_scenarios()[name], out_dir=tmp_path / name)
    assert result.ok
    assert result.assertions  # a scenario without checks proves nothing
    for run_id in result.runs:
        assert (tmp_path / name / run_id / "report.json").is_file()
    assert (tmp_path / name / "summary.json").is_file()
    assert (tmp_path / name / "summary.csv").is_file()


def test_shipped_acquisition_scenario_passes(tmp_path):
    result = run_scenario(shipped_scenarios()["acquisition"], out_dir=tmp_path)
    assert result.ok
    assert len(result.runs) == 6


@pytest.mark.parametrize("name", ["processing", "flash"])
def test_artifacts_byte_identical_across_runs(name, tmp_path):
    path = shipped_scenarios()[name]
    run_scenario(path, out_dir=tmp_path / "a")
    run_scenario(path, out_dir=tmp_path / "b")
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    assert files_a == files_b and files_a
    for rel in files_a:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel


def test_flash_scenario_exact_modeled_durations(tmp_path):
    result = run_scenario(shipped_scenarios()["flash"], out_dir=tmp_path)
    virt = result.runs["virtual"]
    phys = result.runs["physical"]
    assert virt.energy.window_seconds == 2.4
    assert phys.energy.window_seconds == 600.0
    assert phys.outcome.window_cycles == virt.outcome.window_cycles * 250


# ------------------------------------------------------------ crafted


def test_failing_scenario_still_writes_artifacts(tmp_path):
    doc = base_doc(
        runs=[{"id": "only", "program": "p.json"}],
        assertions=[
            {"check": "window_seconds_between", "run": "only", "min": 99.0, "max": 100.0},
            {"check": "no_underruns", "runs": ["only"]},
        ],
    )
    path = write_scenario(tmp_path, doc, {"p.json": sleep_program("p", 2000)})
    out = tmp_path / "out"
    with pytest.raises(AssertionFailed) as exc:
        run_scenario(path, out_dir=out)
    assert "1 scenario assertion(s) failed" in str(exc.value)
    assert "window_seconds_between" in str(exc.value)
    # artifacts are written before the failure is raised
    summary = json.loads((out / "summary.json").read_text())
    verdicts = {a["check"]["check"]: a["ok"] for a in summary["assertions"]}
    assert verdicts == {"window_seconds_between": False, "no_underruns": True}
    assert (out / "only" / "report.json").is_file()
    assert (out / "summary.csv").is_file()


def test_scenario_without_out_dir_writes_nothing(tmp_path):
    doc = base_doc(runs=[{"id": "only", "program": "p.json"}])
    path = write_scenario(tmp_path, doc, {"p.json": sleep_program("p", 10)})
    result = run_scenario(path)
    assert result.out_dir is None
    assert result.ok
    assert set(tmp_path.iterdir()) == {path, tmp_path / "p.json"}


def test_adc_defaults_merge_with_run_overrides(tmp_path):
    acquire = {
        "name": "acq",
        "phases": [{"op": "acquire", "fs_hz": 10_000, "n_samples": 100, "per_sample_cpu_cycles": 10}],
    }
    doc = base_doc(runs=[
        {"id": "plain", "program": "p.json"},
        {"id": "tight", "program": "p.json", "adc": {"hard_capacity": 8}},
    ])
    doc["adc"] = {
        "fs_hz": 10_000,
        "soft_capacity": 1024,
        "refill_batch": 128,
        "refill_latency_cycles": 50,
        "hard_capacity": 64,
        "source": {"kind": "ramp", "count": 100},
    }
    path = write_scenario(tmp_path, doc, {"p.json": acquire})
    result = run_scenario(path)
    assert result.runs["plain"].outcome.samples_delivered == 100
    assert result.runs["tight"].outcome.samples_delivered == 100
    assert result.runs["plain"].outcome.underruns == 0


def test_load_scenario_rejects_duplicate_run_ids(tmp_path):
    doc = base_doc(runs=[{"id": "x", "program": "p.json"}, {"id": "x", "program": "p.json"}])
    path = write_scenario(tmp_path, doc, {"p.json": sleep_program("p", 10)})
    with pytest.raises(BadArguments, match="appears twice"):
        load_scenario(path)


def test_load_scenario_missing_pieces(tmp_path):
    with pytest.raises(MissingInput):
        load_scenario(tmp_path / "absent.json")

    doc = base_doc(runs=[{"id": "x", "program": "missing_program.json"}])
    with pytest.raises(MissingInput, match="program for run 'x'"):
        load_scenario(write_scenario(tmp_path, doc))

    bad = base_doc(runs=[{"id": "x", "program": "p.json"}])
    del bad["name"]
    (tmp_path / "p.json").write_text(json.dumps(sleep_program("p", 10)), encoding="utf-8")
    with pytest.raises(BadArguments, match="missing field"):
        load_scenario(write_scenario(tmp_path, bad))


def test_unknown_assertion_kind_rejected(tmp_path):
    doc = base_doc(
        runs=[{"id": "x", "program": "p.json"}],
        assertions=[{"check": "phase_of_the_moon", "run": "x"}],
    )
    path = write_scenario(tmp_path, doc, {"p.json": sleep_program("p", 10)})
    with pytest.raises(BadArguments, match="unknown assertion check"):
        run_scenario(path)


# ------------------------------------------------------------ assertion kinds


@pytest.fixture(scope="module")
def two_runs(tmp_path_factory):
    """short: 100 cycles, long: 25000 cycles; both clock-gated naps."""
    tmp_path = tmp_path_factory.mktemp("pair")
    doc = base_doc(runs=[
        {"id": "short", "program": "short.json"},
        {"id": "long", "program": "long.json"},
    ])
    path = write_scenario(tmp_path, doc, {
        "short.json": sleep_program("short", 100),
        "long.json": sleep_program("long", 25_000),
    })
    return run_scenario(path).runs


def check(doc, runs):
    return evaluate_assertion(doc, runs)


def test_assertion_speedup_between(two_runs):
    out = check({"check": "speedup_between", "base_run": "long", "test_run": "short",
                 "min": 250, "max": 250}, two_runs)
    assert out.ok and "speedup 250.0" in out.detail
    assert not check({"check": "speedup_between", "base_run": "long", "test_run": "short",
                      "min": 251, "max": 300}, two_runs).ok


def test_assertion_duration_ratio_integer_exact(two_runs):
    assert check({"check": "duration_ratio", "base_run": "short", "run": "long", "value": 250},
                 two_runs).ok
    # integral expectations never pass via float rounding: 249x is not 250x
    assert not check({"check": "duration_ratio", "base_run": "short", "run": "long", "value": 249},
                     two_runs).ok
    assert check({"check": "duration_ratio", "base_run": "long", "run": "short", "value": 0.004},
                 two_runs).ok


def test_assertion_energy_less(two_runs):
    assert check({"check": "energy_less", "run": "short", "than_run": "long"}, two_runs).ok
    assert not check({"check": "energy_less", "run": "long", "than_run": "short"}, two_runs).ok


def test_assertion_largest_speedup(two_runs):
    doc = {
        "check": "largest_speedup",
        "pairs": {"fast": ["long", "short"], "same": ["long", "long"]},
        "expect": "fast",
    }
    out = check(doc, two_runs)
    assert out.ok and "largest 'fast'" in out.detail
    doc["expect"] = "same"
    assert not check(doc, two_runs).ok


def test_assertion_window_and_shares(two_runs):
    assert check({"check": "window_seconds_between", "run": "short",
                  "min": 100 / 20e6, "max": 100 / 20e6}, two_runs).ok
    # a clock-gated nap has zero active share on the host
    assert check({"check": "active_share_below", "run": "short", "domain": "cpu",
                  "value": 0.01}, two_runs).ok
    assert not check({"check": "active_share_above", "run": "short", "domain": "cpu",
                      "value": 0.5}, two_runs).ok
    assert check({"check": "no_underruns", "runs": ["short", "long"]}, two_runs).ok


def test_assertion_unknown_run_rejected(two_runs):
    with pytest.raises(BadArguments, match="unknown run"):
        check({"check": "energy_less", "run": "short", "than_run": "nope"}, two_runs)

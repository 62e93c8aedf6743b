"""Command-line entry points.

Exit codes: 0 success, 1 runtime/assertion/validation failure, 2 bad
usage or missing inputs. Named inputs (programs, models, timing tables,
scenarios) resolve as: literal path, then FEMU_CONFIG_DIR, then the
packaged data directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__
from .accel import Platform, parse_accelerator
from .control import DATA_DIR, serve_stdio, serve_tcp
from .energy import estimate_energy
from .engine import Simulator, TimingTable, load_program_file, parse_program
from .errors import (
    BadArguments,
    FemuError,
    MissingInput,
    ModelValidationError,
    ValidationIssue,
)
from .model import ClockConfig, STATE_ORDER, load_energy_model, parse_energy_model, validate_energy_model
from .scenarios import load_scenario, run_scenario, shipped_scenarios

_USAGE_ERRORS = (BadArguments, MissingInput)


def _resolve_input(name: str, group: str) -> Path:
    """Literal path, then FEMU_CONFIG_DIR, then packaged data/<group>."""
    direct = Path(name)
    if direct.is_file():
        return direct
    candidates = []
    cfg_dir = os.environ.get("FEMU_CONFIG_DIR")
    if cfg_dir:
        candidates += [Path(cfg_dir) / name, Path(cfg_dir) / f"{name}.json"]
    candidates += [DATA_DIR / group / name, DATA_DIR / group / f"{name}.json"]
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    packaged = sorted(p.stem for p in (DATA_DIR / group).glob("*.json"))
    raise MissingInput(
        f"no {group[:-1]} {name!r}: not a file, not in FEMU_CONFIG_DIR, not one of {packaged}"
    )


def _resolve_scenario(name: str) -> Path:
    direct = Path(name)
    if direct.is_file():
        return direct
    cfg_dir = os.environ.get("FEMU_CONFIG_DIR")
    if cfg_dir:
        for candidate in (Path(cfg_dir) / name, Path(cfg_dir) / f"{name}.json"):
            if candidate.is_file():
                return candidate
    shipped = shipped_scenarios()
    if name in shipped:
        return shipped[name]
    raise MissingInput(
        f"no scenario {name!r}: not a file, not in FEMU_CONFIG_DIR, not one of {sorted(shipped)}"
    )


def _cmd_run(args: argparse.Namespace) -> int:
    program = load_program_file(_resolve_input(args.program, "programs"))
    timing = TimingTable.load(_resolve_input(args.timing, "timing"))
    model, specs = load_energy_model(_resolve_input(args.energy_model, "models"))
    validate_energy_model(model, specs)
    clock = ClockConfig(freq_hz=args.clock_hz)
    sim = Simulator(program=program, timing=timing, platform=Platform(domains=specs), clock=clock)
    outcome = sim.run_until(args.limit)
    report = estimate_energy(outcome.automatic, model, clock)
    doc = {"program": program.name, "outcome": outcome.to_json(), "energy": report.to_json()}
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_scenario(args: argparse.Namespace) -> int:
    path = _resolve_scenario(args.name)
    if args.describe:
        scenario = load_scenario(path)
        doc = {
            "name": scenario.name,
            "path": str(Path(path).resolve()),
            "clock_hz": scenario.clock.freq_hz,
            "energy_model": str(scenario.model_path),
            "timing": str(scenario.timing_path),
            "accelerators": [str(p) for p in scenario.accel_paths],
            "runs": [
                {"id": run.id, "program": str(run.program_path)} for run in scenario.runs
            ],
            "assertions": [dict(a) for a in scenario.assertions],
        }
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return 0
    result = run_scenario(path, out_dir=args.out, seed=args.seed, plot=args.plot)
    for assertion in result.assertions:
        status = "pass" if assertion.ok else "FAIL"
        sys.stdout.write(f"[{status}] {assertion.check.get('check')}: {assertion.detail}\n")
    sys.stdout.write(f"scenario {result.name}: {len(result.runs)} runs, all assertions passed\n")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    if args.tcp:
        host, _, port = args.tcp.rpartition(":")
        server = serve_tcp(host or "127.0.0.1", int(port))
        actual = server.server_address
        sys.stderr.write(f"listening on {actual[0]}:{actual[1]}\n")
        sys.stderr.flush()
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
        return 0
    serve_stdio()
    return 0


def _sniff_and_validate(path: Path) -> dict:
    """Figure out which config schema a document is, then check it."""
    if not path.is_file():
        raise MissingInput(f"no config file {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelValidationError([ValidationIssue("NotJson", str(path), str(exc))]) from exc
    if not isinstance(doc, dict):
        raise ModelValidationError(
            [ValidationIssue("NotAnObject", str(path), "expected a JSON object at top level")]
        )
    if "runs" in doc:
        scenario = load_scenario(path)
        return {
            "kind": "scenario",
            "name": scenario.name,
            "runs": [run.id for run in scenario.runs],
            "assertions": len(scenario.assertions),
        }
    if "phases" in doc:
        program = parse_program(doc)
        return {"kind": "program", "name": program.name, "phase_count": len(program.phases)}
    if "stage" in doc:
        spec = parse_accelerator(doc)
        return {
            "kind": "accelerator",
            "name": spec.name,
            "stage": spec.stage.value,
            "kernels": sorted(spec.kernels),
        }
    if "domains" in doc:
        model, specs = parse_energy_model(doc)
        validated = validate_energy_model(model, specs)
        return {
            "kind": "energy_model",
            "technology": model.technology,
            "domains": sorted(model.domains),
            "warnings": [
                {"code": w.code, "field": w.field, "message": w.message}
                for w in validated.warnings
            ],
        }
    table = TimingTable.from_json(doc)
    return {
        "kind": "timing",
        "entries": sorted(f"{k}@{t}" for k, t in table.entries),
    }


def _cmd_validate(args: argparse.Namespace) -> int:
    report = _sniff_and_validate(Path(args.file))
    report["ok"] = True
    sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return 0


def _energy_doc(doc: dict, path: Path) -> dict:
    """Accepts a run/scenario report wrapper or a bare energy report."""
    if "energy" in doc:
        doc = doc["energy"]
    if "domains" not in doc or "freq_hz" not in doc:
        raise BadArguments(f"{path}: not a report file (no energy domains found)")
    return doc


def _cmd_export(args: argparse.Namespace) -> int:
    path = Path(args.report)
    if not path.is_file():
        raise MissingInput(f"no report file {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BadArguments(f"{path}: not valid JSON: {exc}") from exc
    energy = _energy_doc(doc, path)
    freq = energy["freq_hz"]
    rows = [["domain", "state", "cycles", "seconds", "energy_j"]]
    for did in sorted(energy["domains"]):
        detail = energy["domains"][did]
        for s in STATE_ORDER:
            cycles = detail["cycles"].get(s.value, 0)
            rows.append(
                [did, s.value, str(cycles), repr(cycles / freq), repr(detail["energy_j"][s.value])]
            )
    rows.append(["total", "", str(energy["window_cycles"]),
                 repr(energy["window_seconds"]), repr(energy["total_j"])])
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    else:
        csv.writer(sys.stdout, lineterminator="\n").writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="femu", description="desk-scale SoC emulation")
    parser.add_argument("--version", action="version", version=f"femu {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one program and write its report")
    p_run.add_argument("--program", required=True, help="program path or packaged name")
    p_run.add_argument("--energy-model", default="tsmc65_uncalibrated",
                       help="energy model path or packaged name")
    p_run.add_argument("--timing", default="host_20mhz",
                       help="timing table path or packaged name")
    p_run.add_argument("--clock-hz", type=int, default=20_000_000)
    p_run.add_argument("--limit", type=int, default=None, help="stop at this cycle bound")
    p_run.add_argument("--out", help="output directory (default: print to stdout)")
    p_run.set_defaults(func=_cmd_run)

    p_sc = sub.add_parser("scenario", help="run a scenario by name or path")
    p_sc.add_argument("name", help="scenario path, FEMU_CONFIG_DIR entry, or packaged name")
    p_sc.add_argument("--out", help="artifact directory")
    p_sc.add_argument("--seed", type=int, default=0, help="seed for noise sample sources")
    p_sc.add_argument("--plot", action="store_true", help="also render summary.png")
    p_sc.add_argument("--describe", action="store_true", help="print the resolved scenario and exit")
    p_sc.set_defaults(func=_cmd_scenario)

    p_serve = sub.add_parser("serve", help="speak the JSON-lines control protocol")
    p_serve.add_argument("--stdio", action="store_true", help="serve on stdin/stdout (default)")
    p_serve.add_argument("--tcp", metavar="HOST:PORT", help="serve on TCP instead")
    p_serve.set_defaults(func=_cmd_serve)

    p_val = sub.add_parser("validate", help="validate any config file (schema sniffed)")
    p_val.add_argument("file", help="model, program, timing, accelerator, or scenario JSON")
    p_val.set_defaults(func=_cmd_validate)

    p_exp = sub.add_parser("export", help="flatten a report JSON to CSV")
    p_exp.add_argument("report", help="report.json from run or a scenario run directory")
    p_exp.add_argument("--out", help="CSV file (default: stdout)")
    p_exp.set_defaults(func=_cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        sys.stderr.write(f"error[{exc.code}]: {exc}\n")
        return 2
    except FemuError as exc:
        sys.stderr.write(f"error[{exc.code}]: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Debugger-style control protocol over JSON lines.

One request per line::

    {"id": 7, "cmd": "run", "args": {"limit": null}}

One reply per line, canonical JSON (sorted keys, compact separators),
echoing ``id`` verbatim::

    {"id": 7, "ok": true, "result": {...}}
    {"id": 7, "ok": false, "error": {"code": "...", "message": "..."}}

The command set is closed: load_program, run, step, halt, reset,
read_counters, estimate_energy, configure_adc, flash_init, flash_read,
flash_write, register_accelerator, offload, shutdown. Anything else is
an UnknownCommand error; malformed lines get a BadArguments reply with
``id: null``. Errors never tear down the session.

A session is single-threaded and commands are synchronous, so ``halt``
is an acknowledged no-op by construction: there is never a run in
flight when a command is being read. It still reports the current
cycle so clients can treat it uniformly.

``estimate_energy`` replies carry the report twice: structured under
``report`` and as the exact canonical text under ``canonical``. Clients
in other languages write ``canonical`` to disk when byte-identical
artifacts matter; reserializing floats through a foreign runtime's
formatter would not survive that comparison.
"""

from __future__ import annotations

import base64
import json
import socketserver
import sys
from pathlib import Path

import numpy as np

from .accel import (
    Platform,
    load_accelerator,
    offload,
    operands_to_json,
    parse_accelerator,
    parse_operands,
    register_accelerator,
)
from .energy import CounterMode, counters_snapshot, estimate_energy
from .engine import EngineConfig, Simulator, TimingTable, load_program_file, parse_program
from .errors import (
    BadArguments,
    FemuError,
    InvalidState,
    MissingInput,
    OutOfRange,
    UnknownCommand,
    UnknownTarget,
)
from .model import (
    ClockConfig,
    canonical_json,
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
    no_underrun_bound_cycles,
)

DATA_DIR = Path(__file__).parent / "data"
_MAX_TRANSFER = 1 << 26  # 64 MiB per flash_read/flash_write call


def _doc_arg(args: dict, inline_key: str, path_key: str, role: str, required: bool = True) -> dict | None:
    """Fetches a JSON document given inline or as a file path."""
    if inline_key in args:
        doc = args[inline_key]
        if not isinstance(doc, dict):
            raise BadArguments(f"{inline_key} must be a JSON object")
        return doc
    if path_key in args:
        path = Path(args[path_key])
        if not path.is_file():
            raise MissingInput(f"{role} file not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    if required:
        raise BadArguments(f"need {inline_key} or {path_key}")
    return None


class Session:
    """One control-protocol client's state.

    Starts with the packaged power model, timing table, and an empty
    virtual flash; no program is loaded. Reconfiguring the platform
    (ADC, flash mode, accelerators, a new program) rebuilds the
    simulator, which zeroes run state; flash contents persist.
    """

    def __init__(self):
        self.clock = ClockConfig()
        model, specs = load_energy_model(DATA_DIR / "models" / "tsmc65_uncalibrated.json")
        validate_energy_model(model, specs)
        self.model = model
        self.platform = Platform(domains=specs)
        self.timing = TimingTable.load(DATA_DIR / "timing" / "host_20mhz.json")
        self.flash = VirtualFlash()
        self.adc: AdcSession | None = None
        self.program = None
        self.sim: Simulator | None = None
        self.engine_config = EngineConfig()
        self.closed = False

    # -- plumbing

    def _rebuild_sim(self) -> None:
        if self.program is None:
            self.sim = None
            return
        self.sim = Simulator(
            program=self.program,
            timing=self.timing,
            platform=self.platform,
            clock=self.clock,
            adc=self.adc,
            flash=self.flash,
            config=self.engine_config,
        )

    def _require_sim(self) -> Simulator:
        if self.sim is None:
            raise InvalidState("no program loaded")
        return self.sim

    # -- commands

    def cmd_load_program(self, args: dict) -> dict:
        doc = _doc_arg(args, "program", "path", "program")
        program = parse_program(doc)
        if "clock_hz" in args:
            self.clock = ClockConfig(freq_hz=int(args["clock_hz"]))
        model_doc = _doc_arg(args, "energy_model", "energy_model_path", "energy model", required=False)
        if model_doc is not None:
            model, specs = parse_energy_model(model_doc)
            validate_energy_model(model, specs)
            self.model = model
            self.platform = Platform(domains=specs)
        timing_doc = _doc_arg(args, "timing", "timing_path", "timing table", required=False)
        if timing_doc is not None:
            self.timing = TimingTable.from_json(timing_doc)
        self.program = program
        self._rebuild_sim()
        return {"name": program.name, "phase_count": len(program.phases)}

    def cmd_run(self, args: dict) -> dict:
        sim = self._require_sim()
        limit = args.get("limit")
        outcome = sim.run_until(None if limit is None else int(limit))
        return outcome.to_json()

    def cmd_step(self, args: dict) -> dict:
        sim = self._require_sim()
        res = sim.step_phase()
        return {
            "index": res.index,
            "op": res.op,
            "cycles": res.cycles,
            "states_touched": list(res.states_touched),
        }

    def cmd_halt(self, args: dict) -> dict:
        # synchronous protocol: nothing can be running between commands
        return {"halted": True, "now": self.sim.now if self.sim is not None else 0}

    def cmd_reset(self, args: dict) -> dict:
        sim = self._require_sim()
        sim.reset()
        return sim.snapshot()

    def cmd_read_counters(self, args: dict) -> dict:
        sim = self._require_sim()
        mode = CounterMode(args.get("mode", "automatic"))
        counters = counters_snapshot(sim.outcome(), mode)
        doc = counters.to_json()
        doc["mode"] = mode.value
        return doc

    def cmd_estimate_energy(self, args: dict) -> dict:
        sim = self._require_sim()
        mode = CounterMode(args.get("mode", "automatic"))
        counters = counters_snapshot(sim.outcome(), mode)
        model_doc = _doc_arg(args, "model", "model_path", "energy model", required=False)
        if model_doc is not None:
            model, specs = parse_energy_model(model_doc)
            validate_energy_model(model, specs)
        else:
            model = self.model
        report = estimate_energy(counters, model, self.clock)
        doc = report.to_json()
        return {"mode": mode.value, "report": doc, "canonical": canonical_json(doc)}

    def cmd_configure_adc(self, args: dict) -> dict:
        try:
            soft = SoftFifo(
                capacity=int(args["soft_capacity"]),
                refill_batch=int(args["refill_batch"]),
                refill_latency_cycles=int(args["refill_latency_cycles"]),
            )
            hard = HardFifo(capacity=int(args["hard_capacity"]))
            config = AdcConfig(
                fs_hz=int(args["fs_hz"]),
                underrun_policy=UnderrunPolicy(args.get("underrun_policy", "fatal")),
            )
            source_doc = args["source"]
        except KeyError as exc:
            raise BadArguments(f"configure_adc missing field {exc}") from exc
        if "data" in source_doc:
            source = SampleSource(np.asarray(source_doc["data"], dtype=np.int64).astype(np.int16), label="inline")
        elif "file" in source_doc:
            path = Path(source_doc["file"])
            if not path.is_file():
                raise MissingInput(f"sample source file not found: {path}")
            source = SampleSource.from_file(path)
        else:
            source = SampleSource.synthetic(
                source_doc.get("kind", "ramp"), int(source_doc.get("count", 0)), seed=int(source_doc.get("seed", 0))
            )
        self.adc = AdcSession(source=source, config=config, soft=soft, hard=hard, clock=self.clock)
        self._rebuild_sim()
        return {
            "fs_hz": config.fs_hz,
            "source_len": len(source),
            "no_underrun_bound_cycles": no_underrun_bound_cycles(soft, hard, config.fs_hz, self.clock),
        }

    def cmd_flash_init(self, args: dict) -> dict:
        mode = FlashMode(args.get("mode", "virtual"))
        self.flash = VirtualFlash(mode=mode)
        self._rebuild_sim()
        return {"mode": mode.value, "bandwidth_bps": self.flash.bandwidth_bps}

    def cmd_flash_read(self, args: dict) -> dict:
        try:
            addr = int(args["addr"])
            length = int(args["length"])
        except KeyError as exc:
            raise BadArguments(f"flash_read missing field {exc}") from exc
        if length > _MAX_TRANSFER:
            raise OutOfRange(f"flash_read of {length} bytes exceeds per-call cap {_MAX_TRANSFER}")
        data = self.flash.read(addr, length)
        return {"addr": addr, "data": base64.b64encode(data).decode("ascii")}

    def cmd_flash_write(self, args: dict) -> dict:
        try:
            addr = int(args["addr"])
            raw = args["data"]
        except KeyError as exc:
            raise BadArguments(f"flash_write missing field {exc}") from exc
        try:
            data = base64.b64decode(raw, validate=True)
        except (TypeError, ValueError) as exc:
            raise BadArguments(f"data is not valid base64: {exc}") from exc
        if len(data) > _MAX_TRANSFER:
            raise OutOfRange(f"flash_write of {len(data)} bytes exceeds per-call cap {_MAX_TRANSFER}")
        self.flash.write(addr, data)
        return {"addr": addr, "written": len(data)}

    def cmd_register_accelerator(self, args: dict) -> dict:
        doc = _doc_arg(args, "spec", "path", "accelerator spec")
        spec = parse_accelerator(doc)
        self.platform = register_accelerator(self.platform, spec)
        if spec.power is not None:
            self.model = merge_models(self.model, spec.energy_contribution(self.model))
        self._rebuild_sim()
        return {
            "name": spec.name,
            "stage": spec.stage.value,
            "kernels": list(spec.kernels),
            "domains": list(self.platform.domain_ids()),
        }

    def cmd_offload(self, args: dict) -> dict:
        try:
            name = args["accelerator"]
            operands_doc = args["operands"]
        except KeyError as exc:
            raise BadArguments(f"offload missing field {exc}") from exc
        accel = self.platform.accelerators.get(name)
        if accel is None:
            raise UnknownTarget(f"no accelerator {name!r} registered")
        ops = parse_operands(operands_doc)
        result = offload(accel, ops)
        if ops.kernel == "fft":
            re, im = result.output
            output = {"re": re.tolist(), "im": im.tolist()}
        else:
            output = result.output.tolist()
        return {
            "kernel": ops.kernel,
            "output": output,
            "host_cycles": result.host_cycles,
            "accel_cycles": result.accel_cycles,
            "total_cycles": result.total_cycles,
        }

    def cmd_shutdown(self, args: dict) -> dict:
        self.closed = True
        return {"shutting_down": True}

    _COMMANDS = {
        "load_program": cmd_load_program,
        "run": cmd_run,
        "step": cmd_step,
        "halt": cmd_halt,
        "reset": cmd_reset,
        "read_counters": cmd_read_counters,
        "estimate_energy": cmd_estimate_energy,
        "configure_adc": cmd_configure_adc,
        "flash_init": cmd_flash_init,
        "flash_read": cmd_flash_read,
        "flash_write": cmd_flash_write,
        "register_accelerator": cmd_register_accelerator,
        "offload": cmd_offload,
        "shutdown": cmd_shutdown,
    }

    # -- dispatch

    def handle_message(self, msg: dict) -> dict:
        msg_id = msg.get("id") if isinstance(msg, dict) else None
        try:
            if not isinstance(msg, dict):
                raise BadArguments("message must be a JSON object")
            cmd = msg.get("cmd")
            handler = self._COMMANDS.get(cmd)
            if handler is None:
                raise UnknownCommand(f"unknown command {cmd!r}")
            args = msg.get("args", {})
            if not isinstance(args, dict):
                raise BadArguments("args must be a JSON object")
            result = handler(self, args)
            return {"id": msg_id, "ok": True, "result": result}
        except FemuError as exc:
            return {"id": msg_id, "ok": False, "error": {"code": exc.code, "message": str(exc)}}
        except (KeyError, TypeError, ValueError) as exc:
            return {"id": msg_id, "ok": False, "error": {"code": "BadArguments", "message": str(exc)}}
        except Exception as exc:  # session must survive anything
            return {"id": msg_id, "ok": False, "error": {"code": "InternalError", "message": repr(exc)}}

    def handle_line(self, line: str) -> str:
        line = line.strip()
        if not line:
            reply = {"id": None, "ok": False, "error": {"code": "BadArguments", "message": "empty line"}}
            return canonical_json(reply)
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            reply = {"id": None, "ok": False, "error": {"code": "BadArguments", "message": f"malformed JSON: {exc}"}}
            return canonical_json(reply)
        return canonical_json(self.handle_message(msg))


def serve_stdio(stdin=None, stdout=None) -> None:
    """One session over stdin/stdout; returns on shutdown or EOF."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    session = Session()
    for line in stdin:
        reply = session.handle_line(line)
        stdout.write(reply + "\n")
        stdout.flush()
        if session.closed:
            break


class _ControlHandler(socketserver.StreamRequestHandler):
    def handle(self):
        session = Session()
        for raw in self.rfile:
            reply = session.handle_line(raw.decode("utf-8", errors="replace"))
            self.wfile.write(reply.encode("utf-8") + b"\n")
            self.wfile.flush()
            if session.closed:
                break


class ControlServer(socketserver.ThreadingTCPServer):
    """TCP transport: one independent session per connection."""

    allow_reuse_address = True
    daemon_threads = True


def serve_tcp(host: str = "127.0.0.1", port: int = 0) -> ControlServer:
    """Starts a TCP server; caller runs ``serve_forever`` (or uses the
    returned server's address for a client, in tests)."""
    return ControlServer((host, port), _ControlHandler)

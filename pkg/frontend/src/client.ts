/**
 * FemuClient: a thin scripting wrapper over the control protocol.
 *
 * One client drives one server session. Requests are serialized: each
 * one is written only after the previous reply arrived, and ids
 * increase strictly, so replies correlate positionally and the id check
 * is a tripwire rather than a router. All computation stays server
 * side; this class only moves JSON and converts flash payloads between
 * bytes and base64.
 */
import { ConnectFailed, ProtocolError, ServerError, type ServerErrorCode } from "./errors.js";
import { StdioTransport, TcpTransport, type Transport } from "./transport.js";

// ----------------------------------------------------------- wire types

export type PhaseDoc =
  | { op: "compute"; kernel: string; target?: string; reps?: number }
  | { op: "acquire"; fs_hz: number; n_samples: number; per_sample_cpu_cycles: number }
  | { op: "sleep"; mode: "clock_gated" | "power_gated"; duration_cycles: number }
  | { op: "flash_read"; bytes: number }
  | { op: "flash_write"; bytes: number }
  | { op: "marker"; action: "start" | "stop" };

export interface ProgramDoc {
  name: string;
  phases: PhaseDoc[];
}

export interface CountersDoc {
  window_cycles: number;
  cycles: Record<string, Record<string, number>>;
}

export interface PhaseAttributionDoc {
  index: number;
  op: string;
  start_cycle: number;
  cycles: number;
}

export interface RunOutcomeDoc {
  automatic: CountersDoc;
  manual: CountersDoc | null;
  phases: PhaseAttributionDoc[];
  window_cycles: number;
  finished: boolean;
  stall_cycles: number;
  underruns: number;
  refill_events: number;
  samples_delivered: number;
}

export interface DomainEnergyDoc {
  cycles: Record<string, number>;
  energy_j: Record<string, number>;
  total_j: number;
  active_share: number;
  sleep_share: number;
}

export interface EnergyReportDoc {
  technology: string;
  voltage_v: number;
  freq_hz: number;
  window_cycles: number;
  window_seconds: number;
  domains: Record<string, DomainEnergyDoc>;
  energy_shares: Record<string, number>;
  total_j: number;
}

export interface EnergyEstimate {
  mode: string;
  report: EnergyReportDoc;
  /**
   * The report as the server's exact canonical JSON text. Write this
   * when byte-identical artifacts matter; reserializing the floats
   * through a JS formatter would not survive that comparison.
   */
  canonical: string;
}

export interface LoadProgramArgs {
  program?: ProgramDoc;
  path?: string;
  clock_hz?: number;
  energy_model?: Record<string, unknown>;
  energy_model_path?: string;
  timing?: Record<string, unknown>;
  timing_path?: string;
}

export interface AdcSourceDoc {
  kind?: "ramp" | "sine" | "zeros" | "noise";
  count?: number;
  seed?: number;
  data?: number[];
  file?: string;
}

export interface ConfigureAdcArgs {
  fs_hz: number;
  soft_capacity: number;
  refill_batch: number;
  refill_latency_cycles: number;
  hard_capacity: number;
  underrun_policy?: "fatal" | "count_and_stall";
  source: AdcSourceDoc;
}

export type OperandsDoc =
  | { kernel: "mm"; a: number[][]; b: number[][] }
  | { kernel: "conv"; input: number[][][]; filters: number[][][][] }
  | { kernel: "fft"; re: number[]; im: number[] };

export interface OffloadResult {
  kernel: string;
  output: number[][] | number[][][] | { re: number[]; im: number[] };
  host_cycles: number;
  accel_cycles: number;
  total_cycles: number;
}

export interface SnapshotDoc {
  now: number;
  phase_index: number;
  finished: boolean;
  [key: string]: unknown;
}

// ----------------------------------------------------------- connect

export interface SpawnTarget {
  command?: string;
  args?: string[];
}

export interface TcpTarget {
  host?: string;
  port: number;
}

export type ConnectTarget = SpawnTarget | TcpTarget;

const DEFAULT_COMMAND = "python3";
const DEFAULT_ARGS = ["-m", "femu", "serve", "--stdio"];

interface WireReply {
  id: unknown;
  ok: boolean;
  result?: unknown;
  error?: { code: ServerErrorCode; message: string };
}

export class FemuClient {
  readonly transport: Transport;
  private lastId = 0;
  private chain: Promise<unknown> = Promise.resolve();

  private constructor(transport: Transport) {
    this.transport = transport;
  }

  /**
   * Spawns a server (default: `python3 -m femu serve --stdio`) or
   * connects to a TCP address, then verifies the session with a reset
   * round-trip. A fresh session answers reset with InvalidState (no
   * program loaded); any well-formed correlated reply proves the peer
   * speaks the protocol.
   */
  static async connect(target: ConnectTarget = {}): Promise<FemuClient> {
    let transport: Transport;
    if ("port" in target) {
      transport = await TcpTransport.connect(target.host ?? "127.0.0.1", target.port);
    } else {
      transport = await StdioTransport.spawn(target.command ?? DEFAULT_COMMAND, target.args ?? DEFAULT_ARGS);
    }
    const client = new FemuClient(transport);
    try {
      await client.request("reset");
    } catch (err) {
      if (!(err instanceof ServerError)) {
        await transport.close();
        const detail = err instanceof Error ? err.message : String(err);
        throw new ConnectFailed(`handshake failed: ${detail}`);
      }
    }
    return client;
  }

  /** Sends one command and returns its result; ServerError on `ok: false`. */
  request(cmd: string, args: Record<string, unknown> = {}): Promise<unknown> {
    const turn = this.chain.then(() => this.exchange(cmd, args));
    // keep the chain alive whether this request succeeds or not
    this.chain = turn.then(
      () => undefined,
      () => undefined,
    );
    return turn;
  }

  private async exchange(cmd: string, args: Record<string, unknown>): Promise<unknown> {
    const id = ++this.lastId;
    this.transport.writeLine(JSON.stringify({ id, cmd, args }));
    const line = await this.transport.readLine();
    if (line === null) {
      throw new ProtocolError(`stream closed while waiting for the reply to ${cmd} (id ${id})`);
    }
    let reply: WireReply;
    try {
      reply = JSON.parse(line) as WireReply;
    } catch {
      throw new ProtocolError(`unparseable reply line: ${line.slice(0, 120)}`);
    }
    if (reply.id !== id) {
      throw new ProtocolError(`reply id ${JSON.stringify(reply.id)} does not match request id ${id}`);
    }
    if (reply.ok) return reply.result;
    const error = reply.error ?? { code: "InternalError" as const, message: "error reply without error body" };
    throw new ServerError(error.code, error.message);
  }

  // ----------------------------------------------------------- verbs

  loadProgram(args: LoadProgramArgs): Promise<{ name: string; phase_count: number }> {
    return this.request("load_program", args as Record<string, unknown>) as Promise<{
      name: string;
      phase_count: number;
    }>;
  }

  run(limit?: number): Promise<RunOutcomeDoc> {
    return this.request("run", limit === undefined ? {} : { limit }) as Promise<RunOutcomeDoc>;
  }

  step(): Promise<{ index: number; op: string; cycles: number; states_touched: string[] }> {
    return this.request("step") as Promise<{
      index: number;
      op: string;
      cycles: number;
      states_touched: string[];
    }>;
  }

  halt(): Promise<{ halted: boolean; now: number }> {
    return this.request("halt") as Promise<{ halted: boolean; now: number }>;
  }

  reset(): Promise<SnapshotDoc> {
    return this.request("reset") as Promise<SnapshotDoc>;
  }

  readCounters(mode?: "automatic" | "manual"): Promise<CountersDoc & { mode: string }> {
    return this.request("read_counters", mode === undefined ? {} : { mode }) as Promise<
      CountersDoc & { mode: string }
    >;
  }

  estimateEnergy(
    opts: { mode?: "automatic" | "manual"; model?: Record<string, unknown>; model_path?: string } = {},
  ): Promise<EnergyEstimate> {
    return this.request("estimate_energy", opts as Record<string, unknown>) as Promise<EnergyEstimate>;
  }

  configureAdc(
    cfg: ConfigureAdcArgs,
  ): Promise<{ fs_hz: number; source_len: number; no_underrun_bound_cycles: number }> {
    return this.request("configure_adc", cfg as unknown as Record<string, unknown>) as Promise<{
      fs_hz: number;
      source_len: number;
      no_underrun_bound_cycles: number;
    }>;
  }

  initFlash(mode: "virtual" | "physical_model" = "virtual"): Promise<{ mode: string; bandwidth_bps: number }> {
    return this.request("flash_init", { mode }) as Promise<{ mode: string; bandwidth_bps: number }>;
  }

  async readFlash(addr: number, length: number): Promise<Uint8Array> {
    const result = (await this.request("flash_read", { addr, length })) as { addr: number; data: string };
    return new Uint8Array(Buffer.from(result.data, "base64"));
  }

  async writeFlash(addr: number, data: Uint8Array): Promise<number> {
    const result = (await this.request("flash_write", {
      addr,
      data: Buffer.from(data).toString("base64"),
    })) as { addr: number; written: number };
    return result.written;
  }

  registerAccelerator(args: {
    spec?: Record<string, unknown>;
    path?: string;
  }): Promise<{ name: string; stage: string; kernels: string[]; domains: string[] }> {
    return this.request("register_accelerator", args) as Promise<{
      name: string;
      stage: string;
      kernels: string[];
      domains: string[];
    }>;
  }

  offload(accelerator: string, operands: OperandsDoc): Promise<OffloadResult> {
    return this.request("offload", { accelerator, operands }) as Promise<OffloadResult>;
  }

  shutdown(): Promise<{ shutting_down: boolean }> {
    return this.request("shutdown") as Promise<{ shutting_down: boolean }>;
  }

  /** Polite teardown: shutdown if the server is still there, then close. */
  async close(): Promise<void> {
    try {
      await this.shutdown();
    } catch {
      // stream already gone; closing is all that is left
    }
    await this.transport.close();
  }
}

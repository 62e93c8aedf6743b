/**
 * Reproduces the three shipped case studies by driving a server through
 * the client, the way a measurement notebook would:
 *
 *   1. acquisition duty cycling across six sampling rates
 *   2. kernel offload onto the CGRA vs. CPU-only execution
 *   3. flash readout in virtual vs. physical-model bandwidth mode
 *
 * Everything printed comes from server replies; the script only
 * formats. Run with: npm run example
 */
import fs from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";

import { FemuClient } from "../src/index.js";

// works from examples/ and from the compiled copy under dist/
function findDataDir(from: string): string {
  let dir = from;
  for (;;) {
    const candidate = path.join(dir, "src", "femu", "data");
    if (fs.existsSync(candidate)) return candidate;
    const parent = path.dirname(dir);
    if (parent === dir) throw new Error(`cannot locate src/femu/data above ${from}`);
    dir = parent;
  }
}

const dataDir = findDataDir(fileURLToPath(new URL(".", import.meta.url)));
const scenarioDir = path.join(dataDir, "scenarios");

function pct(x: number): string {
  return (100 * x).toFixed(3).padStart(8) + " %";
}

function uj(x: number): string {
  return (1e6 * x).toFixed(2).padStart(10) + " uJ";
}

async function acquisition(): Promise<void> {
  console.log("== acquisition: duty cycling across sampling rates ==");
  const scenario = JSON.parse(fs.readFileSync(path.join(scenarioDir, "acquisition.json"), "utf8")) as {
    adc: Record<string, unknown>;
    runs: Array<{ id: string; program: string; adc?: Record<string, unknown> }>;
  };
  for (const run of scenario.runs) {
    const client = await FemuClient.connect();
    try {
      await client.configureAdc({ ...scenario.adc, ...(run.adc ?? {}) } as never);
      await client.loadProgram({ path: path.resolve(scenarioDir, run.program) });
      const outcome = await client.run();
      const { report } = await client.estimateEnergy();
      const fs_hz = (run.adc as { fs_hz: number }).fs_hz;
      console.log(
        `  fs ${String(fs_hz).padStart(6)} Hz  window ${report.window_seconds.toFixed(1)} s` +
          `  cpu active ${pct(report.domains.cpu.active_share)}` +
          `  samples ${outcome.samples_delivered}  total ${uj(report.total_j)}`,
      );
    } finally {
      await client.close();
    }
  }
}

async function processing(): Promise<void> {
  console.log("== processing: CGRA offload vs CPU-only ==");
  const client = await FemuClient.connect();
  try {
    await client.registerAccelerator({ path: path.join(dataDir, "accels", "cgra_rtl.json") });
    const cycles: Record<string, number> = {};
    for (const kernel of ["mm", "conv", "fft"]) {
      for (const target of ["cpu", "cgra"]) {
        await client.loadProgram({ path: path.join(dataDir, "programs", `${kernel}_${target}.json`) });
        const outcome = await client.run();
        const { report } = await client.estimateEnergy();
        cycles[`${kernel}_${target}`] = outcome.window_cycles;
        console.log(
          `  ${kernel.padEnd(4)} on ${target.padEnd(4)}  ${String(outcome.window_cycles).padStart(9)} cycles` +
            `  ${uj(report.total_j)}`,
        );
      }
      const speedup = cycles[`${kernel}_cpu`] / cycles[`${kernel}_cgra`];
      console.log(`  ${kernel.padEnd(4)} speedup ${speedup.toFixed(2)}x`);
    }
  } finally {
    await client.close();
  }
}

async function flash(): Promise<void> {
  console.log("== flash: virtual vs physical-model bandwidth ==");
  const client = await FemuClient.connect();
  try {
    const program = path.join(dataDir, "programs", "flash_240_windows.json");
    const seconds: Record<string, number> = {};
    for (const mode of ["virtual", "physical_model"] as const) {
      const init = await client.initFlash(mode);
      await client.loadProgram({ path: program });
      await client.run();
      const { report } = await client.estimateEnergy();
      seconds[mode] = report.window_seconds;
      console.log(
        `  ${mode.padEnd(14)}  ${String(init.bandwidth_bps).padStart(8)} B/s` +
          `  240 windows in ${report.window_seconds.toFixed(1).padStart(6)} s (modeled)`,
      );
    }
    console.log(`  speedup ${(seconds.physical_model / seconds.virtual).toFixed(0)}x`);
  } finally {
    await client.close();
  }
}

await acquisition();
await processing();
await flash();

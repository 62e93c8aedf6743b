import { fileURLToPath } from "node:url";
import path from "node:path";

export const repoRoot = path.resolve(fileURLToPath(new URL("../..", import.meta.url)));
export const dataDir = path.join(repoRoot, "src", "femu", "data");

export const pythonBin = process.env.FEMU_PYTHON ?? "python3";

/**
 * Python's canonical serialization (sorted keys, compact separators)
 * reproduced for float-free JSON trees. Floats are rejected on purpose:
 * their text must come from the server, never from a JS formatter.
 */
export function stringifySorted(value: unknown): string {
  if (value === null || typeof value === "boolean") return JSON.stringify(value);
  if (typeof value === "number") {
    if (!Number.isSafeInteger(value)) {
      throw new Error(`refusing to format non-integer number ${value}; use the server's canonical text`);
    }
    return String(value);
  }
  if (typeof value === "string") {
    if (!/^[\x00-\x7f]*$/.test(value)) throw new Error(`non-ASCII string needs server-side formatting: ${value}`);
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(stringifySorted).join(",") + "]";
  }
  if (typeof value === "object") {
    const obj = value as Record<string, unknown>;
    const parts = Object.keys(obj)
      .sort()
      .map((key) => JSON.stringify(key) + ":" + stringifySorted(obj[key]));
    return "{" + parts.join(",") + "}";
  }
  throw new Error(`unsupported value of type ${typeof value}`);
}

/**
 * Strips insignificant whitespace from JSON text. Indented and compact
 * dumps of the same document differ only in whitespace outside strings,
 * so this maps the CLI's indented artifacts onto canonical text without
 * touching a single number.
 */
export function minifyJson(text: string): string {
  let out = "";
  let inString = false;
  for (let i = 0; i < text.length; i++) {
    const ch = text[i];
    if (inString) {
      out += ch;
      if (ch === "\\") {
        out += text[++i];
        continue;
      }
      if (ch === '"') inString = false;
    } else if (ch === '"') {
      inString = true;
      out += ch;
    } else if (ch !== " " && ch !== "\n" && ch !== "\t" && ch !== "\r") {
      out += ch;
    }
  }
  return out;
}

/** Deterministic PRNG (mulberry32); good enough for test fixtures. */
export function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomInt32Matrix(rng: () => number, rows: number, cols: number): number[][] {
  const out: number[][] = [];
  for (let r = 0; r < rows; r++) {
    const row: number[] = [];
    for (let c = 0; c < cols; c++) {
      row.push(Math.floor(rng() * 4294967296) - 2147483648);
    }
    out.push(row);
  }
  return out;
}

export function randomBytes(rng: () => number, n: number): Uint8Array {
  const out = new Uint8Array(n);
  for (let i = 0; i < n; i++) out[i] = Math.floor(rng() * 256);
  return out;
}

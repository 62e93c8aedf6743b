/**
 * Line transports for the control protocol.
 *
 * Both transports expose the same minimal surface: write one line, read
 * one line, close. Framing is newline-delimited UTF-8; everything above
 * this layer deals in whole lines only.
 */
import { spawn, type ChildProcess } from "node:child_process";
import net from "node:net";

import { ConnectFailed } from "./errors.js";

export interface Transport {
  writeLine(line: string): void;
  /** Next complete line without its newline, or null at end of stream. */
  readLine(): Promise<string | null>;
  close(): Promise<void>;
}

/** Splits a byte stream into lines and hands them out one at a time. */
class LineReader {
  private buffer = "";
  private lines: string[] = [];
  private waiters: Array<(line: string | null) => void> = [];
  private ended = false;

  feed(chunk: Buffer | string): void {
    this.buffer += chunk.toString();
    for (;;) {
      const nl = this.buffer.indexOf("\n");
      if (nl < 0) break;
      const line = this.buffer.slice(0, nl);
      this.buffer = this.buffer.slice(nl + 1);
      const waiter = this.waiters.shift();
      if (waiter) waiter(line);
      else this.lines.push(line);
    }
  }

  end(): void {
    this.ended = true;
    for (const waiter of this.waiters.splice(0)) waiter(null);
  }

  next(): Promise<string | null> {
    const queued = this.lines.shift();
    if (queued !== undefined) return Promise.resolve(queued);
    if (this.ended) return Promise.resolve(null);
    return new Promise((resolve) => this.waiters.push(resolve));
  }
}

export class StdioTransport implements Transport {
  private constructor(
    readonly child: ChildProcess,
    private readonly reader: LineReader,
  ) {}

  static async spawn(command: string, args: string[]): Promise<StdioTransport> {
    const child = spawn(command, args, { stdio: ["pipe", "pipe", "inherit"] });
    await new Promise<void>((resolve, reject) => {
      child.once("spawn", () => resolve());
      child.once("error", (err) => reject(new ConnectFailed(`cannot spawn ${command}: ${err.message}`)));
    });
    const reader = new LineReader();
    child.stdout!.on("data", (chunk) => reader.feed(chunk));
    child.stdout!.on("close", () => reader.end());
    // A stalled reader must not hold the loop open after the child dies,
    // and a write into a dead pipe (EPIPE) must surface as end-of-stream
    // on the read side, not as an unhandled stream error.
    child.once("exit", () => reader.end());
    child.stdin!.on("error", () => reader.end());
    return new StdioTransport(child, reader);
  }

  writeLine(line: string): void {
    if (!this.child.stdin!.writable) return; // the dropped write shows up as EOF
    this.child.stdin!.write(line + "\n");
  }

  readLine(): Promise<string | null> {
    return this.reader.next();
  }

  async close(): Promise<void> {
    if (this.child.exitCode !== null || this.child.signalCode !== null) return;
    this.child.stdin!.end();
    const exited = await new Promise<boolean>((resolve) => {
      const timer = setTimeout(() => resolve(false), 2000);
      this.child.once("exit", () => {
        clearTimeout(timer);
        resolve(true);
      });
    });
    if (!exited) this.child.kill("SIGKILL");
  }
}

export class TcpTransport implements Transport {
  private constructor(
    private readonly socket: net.Socket,
    private readonly reader: LineReader,
  ) {}

  static async connect(host: string, port: number): Promise<TcpTransport> {
    const socket = await new Promise<net.Socket>((resolve, reject) => {
      const sock = net.connect({ host, port });
      sock.once("connect", () => resolve(sock));
      sock.once("error", (err) => reject(new ConnectFailed(`cannot connect to ${host}:${port}: ${err.message}`)));
    });
    const reader = new LineReader();
    socket.on("data", (chunk) => reader.feed(chunk));
    socket.on("close", () => reader.end());
    socket.on("error", () => reader.end());
    return new TcpTransport(socket, reader);
  }

  writeLine(line: string): void {
    if (this.socket.destroyed) return;
    this.socket.write(line + "\n");
  }

  readLine(): Promise<string | null> {
    return this.reader.next();
  }

  async close(): Promise<void> {
    await new Promise<void>((resolve) => this.socket.end(() => resolve()));
    this.socket.destroy();
  }
}

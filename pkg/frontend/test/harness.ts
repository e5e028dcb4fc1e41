// Test plumbing: spawn the Python teleop service, talk to it over raw
// TCP with the same Transport interface the browser uses over WebSocket.

import { ChildProcess, execFile, spawn } from "node:child_process";
import { once } from "node:events";
import { createInterface } from "node:readline";
import { createConnection, Socket } from "node:net";
import { readFileSync } from "node:fs";
import { promisify } from "node:util";
import path from "node:path";
import { Transport } from "../src/client";

export const REPO_ROOT = path.resolve(__dirname, "..", "..");
export const DATA_DIR = path.join(REPO_ROOT, "src", "dexhand", "data");

const execFileP = promisify(execFile);

export interface Service {
  port: number;
  proc: ChildProcess;
  stop(): void;
}

export async function startService(): Promise<Service> {
  const proc = spawn("python3", ["-m", "dexhand.cli", "serve",
                                 "--bind", "127.0.0.1:0"],
                     { cwd: REPO_ROOT, stdio: ["ignore", "ignore", "pipe"] });
  const port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(
      () => reject(new Error("service did not start within 15s")), 15000);
    const rl = createInterface({ input: proc.stderr! });
    rl.on("line", (line) => {
      const m = line.match(/listening on 127\.0\.0\.1:(\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve(Number(m[1]));
      }
    });
    proc.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited early (code ${code})`));
    });
  });
  return { port, proc, stop: () => proc.kill("SIGINT") };
}

export class TcpTransport implements Transport {
  private socket: Socket;
  private buffer = "";
  private lineCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;
  ready: Promise<void>;

  constructor(port: number, host = "127.0.0.1") {
    this.socket = createConnection(port, host);
    this.ready = once(this.socket, "connect").then(() => undefined);
    this.socket.setNoDelay(true);
    this.socket.on("data", (chunk) => {
      this.buffer += chunk.toString("utf-8");
      let idx: number;
      while ((idx = this.buffer.indexOf("\n")) >= 0) {
        const line = this.buffer.slice(0, idx);
        this.buffer = this.buffer.slice(idx + 1);
        if (line.trim()) this.lineCb?.(line);
      }
    });
    this.socket.on("close", () => this.closeCb?.());
    this.socket.on("error", () => undefined);
  }

  send(line: string) {
    this.socket.write(line + "\n");
  }
  onLine(cb: (line: string) => void) {
    this.lineCb = cb;
  }
  onClose(cb: () => void) {
    this.closeCb = cb;
  }
  close() {
    this.socket.end();
    this.socket.destroy();
  }
}

export interface RecordingFrame {
  t: number;
  keypoints: number[][];
}

export function readRecording(name: string): RecordingFrame[] {
  const text = readFileSync(path.join(DATA_DIR, name), "utf-8");
  return text
    .split("\n")
    .filter((line) => line.trim())
    .map((line) => JSON.parse(line) as RecordingFrame);
}

/** Run the offline CLI: calibrate the shipped reference, retarget the
 *  shipped recording, and return the parsed trajectory CSV rows. */
export async function offlineTrajectory(tmpdir: string): Promise<number[][]> {
  const calib = path.join(tmpdir, "calib.yaml");
  const out = path.join(tmpdir, "traj.csv");
  await execFileP("python3", ["-m", "dexhand.cli", "calibrate",
    "--frame", path.join(DATA_DIR, "sample_reference.jsonl"),
    "--out", calib], { cwd: REPO_ROOT });
  await execFileP("python3", ["-m", "dexhand.cli", "retarget",
    "--calib", calib,
    "--in", path.join(DATA_DIR, "sample_recording.jsonl"),
    "--out", out], { cwd: REPO_ROOT });
  const lines = readFileSync(out, "utf-8").trim().split("\n");
  return lines.slice(1).map((line) => line.split(",").map(Number));
}

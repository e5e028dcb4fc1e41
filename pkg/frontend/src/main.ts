// Operator console wiring: connection lifecycle, mode switching
// (sliders / drag / recording scrub), frame emission, and readouts.

import { SessionClient, WsTransport } from "./client";
import {
  SliderState,
  neutralSliders,
  posedKeypoints,
} from "./handTemplate";
import { FINGER_NAMES, ModelReply, SolutionReply, validateModel } from "./protocol";
import { ConsoleScene } from "./scene";

const EMIT_INTERVAL_MS = 1000 / 60; // frame emission cap

type Mode = "sliders" | "drag" | "scrub";

interface RecordingFrame {
  t: number;
  keypoints: number[][];
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

class Console {
  private client: SessionClient | null = null;
  private scene: ConsoleScene | null = null;
  private model: ModelReply | null = null;
  private sliders: SliderState = neutralSliders();
  private mode: Mode = "sliders";
  private recording: RecordingFrame[] = [];
  private lastEmit = 0;
  private emitTimer: number | null = null;
  private frameClock = 0;
  private lastEditAt = 0;
  // slider-mode base skeleton: the calibration reference capture, so
  // regenerated poses keep the calibrated phalange lengths
  private templateBase: number[][] | null = null;

  private banner = el<HTMLDivElement>("banner");
  private status = el<HTMLSpanElement>("status");
  private degraded = el<HTMLSpanElement>("degraded");
  private readout = el<HTMLSpanElement>("readout");

  async connect() {
    const url = `ws://${location.hostname}:${Number(location.port) + 1}`;
    this.showBanner(`connecting to ${url} ...`);
    const transport = new WsTransport(url);
    try {
      await transport.ready;
    } catch (err) {
      this.showBanner(`${err}; retrying in 2s`);
      setTimeout(() => this.connect(), 2000);
      return;
    }
    const client = new SessionClient(transport);
    transport.onClose(() => {
      this.showBanner("disconnected; reconnecting in 2s (edits buffered)");
      this.client = null;
      setTimeout(() => this.connect(), 2000);
    });
    const previous = sessionStorage.getItem("dexhand-session") ?? undefined;
    let hello: ModelReply;
    try {
      hello = await client.hello(previous);
    } catch {
      hello = await client.hello(); // stale or busy session: start fresh
    }
    const problem = validateModel(hello);
    if (problem) {
      this.showBanner(`refusing to render: ${problem}`);
      return;
    }
    sessionStorage.setItem("dexhand-session", hello.session);
    this.client = client;
    this.model = hello;
    client.onSolution = (sol) => this.onSolution(sol);
    client.onProtocolError = (reason) => this.showBanner(reason);
    this.hideBanner();
    this.status.textContent =
      `session ${hello.session} | model ${hello.model.name}` +
      (hello.calibrated ? " | calibrated" : " | NOT calibrated");

    if (!this.scene) {
      this.scene = new ConsoleScene(el<HTMLCanvasElement>("view"),
                                    hello.model);
      this.scene.onKeypointDrag = () => this.noteEdit();
      this.scene.renderLoop();
    }
    this.scene.setRobotKeypoints(hello.rest_keypoints);
    this.scene.setHumanKeypoints(hello.rest_keypoints);
    if (!hello.calibrated) {
      await this.calibrateFromCurrentPose();
    }
    this.noteEdit();
  }

  private showBanner(text: string) {
    this.banner.textContent = text;
    this.banner.style.display = "block";
  }
  private hideBanner() {
    this.banner.style.display = "none";
  }

  async calibrateFromCurrentPose() {
    if (!this.client || !this.scene) return;
    const reference = this.scene.getHumanKeypoints();
    try {
      await this.client.calibrate(reference);
      this.templateBase = reference;
      this.status.textContent += " | calibrated";
    } catch (err) {
      this.showBanner(`calibration failed: ${err}`);
    }
  }

  private currentKeypoints(): number[][] | null {
    if (!this.scene || !this.model) return null;
    if (this.mode === "sliders") {
      const base = this.templateBase ?? this.model.rest_keypoints;
      const posed = posedKeypoints(base, this.sliders);
      this.scene.setHumanKeypoints(posed);
      return posed;
    }
    if (this.mode === "drag") return this.scene.getHumanKeypoints();
    return null; // scrub mode emits explicitly
  }

  /** Throttled emission: at most 60 Hz, latest edit wins. */
  private noteEdit() {
    this.lastEditAt = performance.now();
    if (this.emitTimer !== null) return;
    const wait = Math.max(0, this.lastEmit + EMIT_INTERVAL_MS - performance.now());
    this.emitTimer = window.setTimeout(() => {
      this.emitTimer = null;
      this.lastEmit = performance.now();
      const kp = this.currentKeypoints();
      if (kp && this.client) {
        this.frameClock += 1;
        this.client.submitEdit(this.frameClock, kp);
      }
    }, wait);
  }

  private onSolution(sol: SolutionReply) {
    this.scene?.setRobotKeypoints(sol.keypoints);
    this.degraded.style.display = sol.degraded ? "inline" : "none";
    const latency = performance.now() - this.lastEditAt;
    this.readout.textContent =
      `objective ${sol.objective.toExponential(2)} | ` +
      `residual ${(sol.residual_rms * 1000).toFixed(2)} mm | ` +
      `solve ${sol.solve_ms.toFixed(1)} ms | ` +
      `edit->render ${latency.toFixed(0)} ms`;
  }

  buildSliderPanel() {
    const panel = el<HTMLDivElement>("sliders");
    FINGER_NAMES.forEach((name, fi) => {
      const row = document.createElement("div");
      row.className = "slider-row";
      const label = document.createElement("label");
      label.textContent = name;
      row.appendChild(label);
      for (const kind of ["curl", "spread"] as const) {
        const input = document.createElement("input");
        input.type = "range";
        input.min = kind === "curl" ? "0" : "-1";
        input.max = "1";
        input.step = "0.01";
        input.value = "0";
        input.title = `${name} ${kind}`;
        input.addEventListener("input", () => {
          this.sliders[kind][fi] = Number(input.value);
          if (this.mode === "sliders") this.noteEdit();
        });
        row.appendChild(input);
      }
      panel.appendChild(row);
    });
  }

  bindModeAndFiles() {
    const select = el<HTMLSelectElement>("mode");
    select.addEventListener("change", () => {
      this.mode = select.value as Mode;
      el<HTMLDivElement>("sliders").style.display =
        this.mode === "sliders" ? "block" : "none";
      el<HTMLDivElement>("scrubber").style.display =
        this.mode === "scrub" ? "block" : "none";
      if (this.mode !== "scrub") this.noteEdit();
    });

    el<HTMLButtonElement>("recalibrate").addEventListener("click", () => {
      void this.calibrateFromCurrentPose();
    });

    const file = el<HTMLInputElement>("recording");
    const scrub = el<HTMLInputElement>("scrub");
    file.addEventListener("change", async () => {
      const blob = file.files?.[0];
      if (!blob) return;
      const text = await blob.text();
      this.recording = text
        .split("\n")
        .filter((line) => line.trim())
        .map((line) => JSON.parse(line) as RecordingFrame);
      scrub.max = String(this.recording.length - 1);
      scrub.value = "0";
      this.status.textContent += ` | loaded ${this.recording.length} frames`;
    });
    scrub.addEventListener("input", () => {
      const frame = this.recording[Number(scrub.value)];
      if (frame && this.scene && this.client) {
        this.scene.setHumanKeypoints(frame.keypoints);
        this.lastEditAt = performance.now();
        this.client.submitEdit(frame.t, frame.keypoints);
      }
    });
  }
}

const app = new Console();
app.buildSliderPanel();
app.bindModeAndFiles();
void app.connect();

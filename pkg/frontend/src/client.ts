// Session client: line-framed transports plus the one-in-flight,
// latest-edit-wins frame pump the service's drop policy assumes.

import {
  CalibratedReply,
  ModelReply,
  ServerMessage,
  SolutionReply,
  StatsReply,
} from "./protocol";

export interface Transport {
  send(line: string): void;
  onLine(cb: (line: string) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

/** Browser transport: one WebSocket text message per protocol line. */
export class WsTransport implements Transport {
  private ws: WebSocket;
  private lineCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;
  ready: Promise<void>;

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ready = new Promise((resolve, reject) => {
      this.ws.onopen = () => resolve();
      this.ws.onerror = () => reject(new Error(`cannot reach ${url}`));
    });
    this.ws.onmessage = (ev: MessageEvent) => this.lineCb?.(String(ev.data));
    this.ws.onclose = () => this.closeCb?.();
  }

  send(line: string) {
    this.ws.send(line);
  }
  onLine(cb: (line: string) => void) {
    this.lineCb = cb;
  }
  onClose(cb: () => void) {
    this.closeCb = cb;
  }
  close() {
    this.ws.close();
  }
}

interface Pending {
  resolve: (msg: ServerMessage) => void;
  reject: (err: Error) => void;
}

/**
 * Request/reply session over a transport. Every sent message expects
 * exactly one reply line, in order; the client keeps at most one frame
 * in flight and locally overwrites queued edits with the newest one, so
 * the server never has to drop on our account.
 */
export class SessionClient {
  private pending: Pending[] = [];
  private pendingEdit: { t: number; keypoints: number[][] } | null = null;
  private frameInFlight = false;
  sessionId: string | null = null;
  onSolution: ((sol: SolutionReply) => void) | null = null;
  onProtocolError: ((reason: string) => void) | null = null;

  constructor(private transport: Transport) {
    transport.onLine((line) => this.handleLine(line));
  }

  private handleLine(line: string) {
    let msg: ServerMessage;
    try {
      msg = JSON.parse(line) as ServerMessage;
    } catch {
      this.onProtocolError?.(`unparseable reply: ${line.slice(0, 80)}`);
      return;
    }
    const waiter = this.pending.shift();
    if (waiter) {
      waiter.resolve(msg);
    } else {
      this.onProtocolError?.(`unexpected reply ${msg.type}`);
    }
  }

  private request(doc: object): Promise<ServerMessage> {
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.transport.send(JSON.stringify(doc));
    });
  }

  private async expect<T extends ServerMessage>(
    doc: object,
    type: T["type"],
  ): Promise<T> {
    const reply = await this.request(doc);
    if (reply.type === "error") {
      throw new Error(reply.reason);
    }
    if (reply.type !== type) {
      throw new Error(`expected ${type} reply, got ${reply.type}`);
    }
    return reply as T;
  }

  async hello(session?: string): Promise<ModelReply> {
    const doc: Record<string, unknown> = { type: "hello" };
    if (session) doc.session = session;
    const reply = await this.expect<ModelReply>(doc, "model");
    this.sessionId = reply.session;
    return reply;
  }

  calibrate(keypoints: number[][]): Promise<CalibratedReply> {
    return this.expect({ type: "calibrate", keypoints }, "calibrated");
  }

  configure(beta?: number, keys?: "all" | "fingertips") {
    const doc: Record<string, unknown> = { type: "config" };
    if (beta !== undefined) doc.beta = beta;
    if (keys !== undefined) doc.keys = keys;
    return this.expect(doc, "ack");
  }

  stats(): Promise<StatsReply> {
    return this.expect({ type: "stats" }, "stats");
  }

  /** Lockstep frame solve (scrubbing and tests). */
  solveFrame(t: number, keypoints: number[][]): Promise<SolutionReply> {
    return this.expect({ type: "frame", t, keypoints }, "solution");
  }

  /**
   * Live editing path: at most one frame in flight; while a solve is
   * pending the newest edit replaces any queued one.
   */
  submitEdit(t: number, keypoints: number[][]) {
    this.pendingEdit = { t, keypoints };
    void this.pump();
  }

  private async pump() {
    if (this.frameInFlight || !this.pendingEdit) return;
    const edit = this.pendingEdit;
    this.pendingEdit = null;
    this.frameInFlight = true;
    try {
      const sol = await this.solveFrame(edit.t, edit.keypoints);
      this.onSolution?.(sol);
    } catch (err) {
      this.onProtocolError?.(String(err));
    } finally {
      this.frameInFlight = false;
      if (this.pendingEdit) void this.pump();
    }
  }

  close() {
    this.transport.close();
  }
}

// Wire protocol types for the teleop service (see docs/protocol.md in the
// repository root). One JSON object per line / WebSocket text message.

export type Vec3 = [number, number, number];

export interface JointDoc {
  name: string;
  axis: Vec3;
  offset: Vec3;
  limits: [number, number];
}

export interface FingerDoc {
  name: string;
  joints: JointDoc[];
  tip_offset: Vec3;
}

export interface ModelDoc {
  name: string;
  palm_frame: { translation: Vec3; rotation_rpy: Vec3 };
  fingers: FingerDoc[];
  rest_keypoints?: number[][];
}

export interface ModelReply {
  type: "model";
  session: string;
  schema_version: number;
  model: ModelDoc;
  rest_keypoints: number[][];
  calibrated: boolean;
}

export interface CalibratedReply {
  type: "calibrated";
  ratios: number[];
}

export interface SolutionReply {
  type: "solution";
  t: number;
  q: number[];
  motors: number[];
  objective: number;
  residual_rms: number;
  iterations: number;
  solve_ms: number;
  degraded: boolean;
  keypoints: number[][];
}

export interface StatsReply {
  type: "stats";
  session: string;
  frames: number;
  solved: number;
  rejected: number;
  dropped: number;
  mean_solve_ms: number;
}

export interface AckReply {
  type: "ack";
  beta: number;
  keys: string;
}

export interface ErrorReply {
  type: "error";
  reason: string;
}

export type ServerMessage =
  | ModelReply
  | CalibratedReply
  | SolutionReply
  | StatsReply
  | AckReply
  | ErrorReply;

export const SCHEMA_VERSION = 1;

export const NUM_KEYPOINTS = 21;
export const NUM_JOINTS = 20;
export const FINGER_NAMES = ["thumb", "index", "middle", "ring", "pinky"] as const;

/** Row of keypoint (finger, point) in the flat 21x3 layout. */
export function keypointIndex(finger: number, point: number): number {
  if (point === 0) return 0;
  return 1 + 4 * finger + (point - 1);
}

export function validateModel(reply: ModelReply): string | null {
  if (reply.schema_version !== SCHEMA_VERSION) {
    return `unsupported schema version ${reply.schema_version} (expected ${SCHEMA_VERSION})`;
  }
  const m = reply.model;
  if (!m || !Array.isArray(m.fingers) || m.fingers.length !== 5) {
    return "model must have exactly 5 fingers";
  }
  for (const f of m.fingers) {
    if (!Array.isArray(f.joints) || f.joints.length !== 4) {
      return `finger ${f.name}: expected 4 joints`;
    }
  }
  if (!Array.isArray(reply.rest_keypoints) || reply.rest_keypoints.length !== NUM_KEYPOINTS) {
    return "rest_keypoints must have 21 rows";
  }
  return null;
}

// Parametric 21-keypoint hand pose: per-finger curl and spread sliders
// regenerate keypoints from a base skeleton (the calibration reference),
// so phalange lengths always stay positive - rotations preserve them.

import { Vec3, keypointIndex } from "./protocol";

export interface SliderState {
  curl: number[]; // per finger, 0..1
  spread: number[]; // per finger, -1..1
}

export function neutralSliders(): SliderState {
  return { curl: [0, 0, 0, 0, 0], spread: [0, 0, 0, 0, 0] };
}

// Cumulative joint weighting along a finger: distal segments curl more.
const CURL_WEIGHTS = [0.35, 0.95, 0.85, 0.65];
const MAX_CURL = 1.45; // rad at curl = 1 for the most bent segment
const MAX_SPREAD = 0.35; // rad at |spread| = 1

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}
function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}
function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}
function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}
function normalize(a: Vec3): Vec3 {
  const n = norm(a) || 1;
  return [a[0] / n, a[1] / n, a[2] / n];
}

function rotateAbout(v: Vec3, axis: Vec3, angle: number): Vec3 {
  // Rodrigues formula on a single vector.
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  const k = normalize(axis);
  const kv = cross(k, v);
  const dot = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
  return [
    v[0] * c + kv[0] * s + k[0] * dot * (1 - c),
    v[1] * c + kv[1] * s + k[1] * dot * (1 - c),
    v[2] * c + kv[2] * s + k[2] * dot * (1 - c),
  ];
}

/** Outward palm normal estimated from the base skeleton. */
export function palmNormal(base: number[][]): Vec3 {
  const wrist = base[0] as Vec3;
  const indexBase = base[keypointIndex(1, 1)] as Vec3;
  const pinkyBase = base[keypointIndex(4, 1)] as Vec3;
  return normalize(cross(sub(indexBase, wrist), sub(pinkyBase, wrist)));
}

/**
 * Regenerate the 21 keypoints from the base skeleton and slider values.
 * Spread swings each whole finger about the palm normal at its base
 * joint; curl folds the chain segment by segment about the finger's
 * flexion axis (perpendicular to the palm normal and the finger
 * direction).
 */
export function posedKeypoints(base: number[][], sliders: SliderState): number[][] {
  const out = base.map((row) => [...row]);
  const normal = palmNormal(base);
  for (let fi = 0; fi < 5; fi++) {
    const rows = [0, 1, 2, 3, 4].map((j) => keypointIndex(fi, j));
    const pts = rows.map((r) => base[r] as Vec3);
    const dir = normalize(sub(pts[2], pts[1]));
    const flexAxis = normalize(cross(normal, dir));
    const spread = sliders.spread[fi] * MAX_SPREAD;
    const curl = sliders.curl[fi] * MAX_CURL;

    // rigid spread about the base joint
    const spreadPts = pts.map((p, j) =>
      j <= 1 ? p : add(pts[1], rotateAbout(sub(p, pts[1]), normal, spread)),
    );
    const axis = rotateAbout(flexAxis, normal, spread);

    // segment-by-segment curl from the base joint outward
    let anchor = spreadPts[1];
    let accumulated = 0;
    const posed: Vec3[] = [spreadPts[0], spreadPts[1]];
    for (let j = 2; j <= 4; j++) {
      accumulated += curl * CURL_WEIGHTS[j - 1];
      const seg = sub(spreadPts[j], spreadPts[j - 1]);
      anchor = add(anchor, rotateAbout(seg, axis, accumulated));
      posed.push(anchor);
    }
    for (let j = 1; j <= 4; j++) {
      out[rows[j]] = [...posed[j]];
    }
  }
  return out;
}

/** Clamp a dragged keypoint into the bounded workspace box. */
export function clampToWorkspace(p: Vec3, half = 0.35): Vec3 {
  return [
    Math.min(half, Math.max(-half, p[0])),
    Math.min(half, Math.max(-half, p[1])),
    Math.min(half, Math.max(-half, p[2])),
  ];
}

export function phalangeLengths(keypoints: number[][]): number[] {
  const lengths: number[] = [];
  for (let fi = 0; fi < 5; fi++) {
    for (let j = 0; j < 4; j++) {
      const a = keypoints[keypointIndex(fi, j)] as Vec3;
      const b = keypoints[keypointIndex(fi, j + 1)] as Vec3;
      lengths.push(norm(sub(b, a)));
    }
  }
  return lengths;
}

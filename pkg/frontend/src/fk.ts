// Client-side forward kinematics over the served model document.
//
// This duplicates the server's FK on purpose: the rendered skeleton is
// computed locally from solved joint angles, and the duplication is
// validated against the server-provided keypoints rather than trusted
// (catches model-serialization drift at the language boundary).

import { ModelDoc, NUM_JOINTS, NUM_KEYPOINTS, Vec3, keypointIndex } from "./protocol";

type Mat3 = number[]; // row-major 9

const IDENTITY: Mat3 = [1, 0, 0, 0, 1, 0, 0, 0, 1];

function matMul(a: Mat3, b: Mat3): Mat3 {
  const out = new Array<number>(9);
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      out[3 * i + j] =
        a[3 * i] * b[j] + a[3 * i + 1] * b[3 + j] + a[3 * i + 2] * b[6 + j];
    }
  }
  return out;
}

function matVec(a: Mat3, v: Vec3): Vec3 {
  return [
    a[0] * v[0] + a[1] * v[1] + a[2] * v[2],
    a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
    a[6] * v[0] + a[7] * v[1] + a[8] * v[2],
  ];
}

function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

/** Rodrigues rotation about a unit axis. */
export function rotationAboutAxis(axis: Vec3, angle: number): Mat3 {
  const [x, y, z] = axis;
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  const t = 1 - c;
  return [
    c + x * x * t, x * y * t - z * s, x * z * t + y * s,
    y * x * t + z * s, c + y * y * t, y * z * t - x * s,
    z * x * t - y * s, z * y * t + x * s, c + z * z * t,
  ];
}

function rpyMatrix(rpy: Vec3): Mat3 {
  const [r, p, y] = rpy;
  const rz = rotationAboutAxis([0, 0, 1], y);
  const ry = rotationAboutAxis([0, 1, 0], p);
  const rx = rotationAboutAxis([1, 0, 0], r);
  return matMul(matMul(rz, ry), rx);
}

/** All 21 keypoint positions in the wrist frame, canonical row order. */
export function forwardKeypoints(model: ModelDoc, q: number[]): Vec3[] {
  if (q.length !== NUM_JOINTS) {
    throw new Error(`expected ${NUM_JOINTS} joint values, got ${q.length}`);
  }
  const palmRot = rpyMatrix(model.palm_frame.rotation_rpy);
  const palmT = model.palm_frame.translation;
  const out: Vec3[] = new Array(NUM_KEYPOINTS);
  out[0] = [0, 0, 0];
  model.fingers.forEach((finger, fi) => {
    let rot = matMul(IDENTITY, palmRot);
    let pos: Vec3 = [palmT[0], palmT[1], palmT[2]];
    const origins: Vec3[] = [];
    finger.joints.forEach((joint, k) => {
      pos = add(pos, matVec(rot, joint.offset));
      origins.push(pos);
      rot = matMul(rot, rotationAboutAxis(joint.axis, q[4 * fi + k]));
    });
    const tip = add(pos, matVec(rot, finger.tip_offset));
    const points = [origins[0], origins[2], origins[3], tip];
    points.forEach((p, j) => {
      out[keypointIndex(fi, j + 1)] = p;
    });
  });
  return out;
}

/** Per-finger polyline rows (wrist -> base -> ... -> tip) for rendering. */
export function skeletonPolylines(keypoints: Vec3[]): Vec3[][] {
  const lines: Vec3[][] = [];
  for (let fi = 0; fi < 5; fi++) {
    const line: Vec3[] = [keypoints[0]];
    for (let j = 1; j <= 4; j++) line.push(keypoints[keypointIndex(fi, j)]);
    lines.push(line);
  }
  return lines;
}

export function maxDeviation(a: Vec3[] | number[][], b: Vec3[] | number[][]): number {
  let worst = 0;
  for (let i = 0; i < a.length; i++) {
    for (let k = 0; k < 3; k++) {
      worst = Math.max(worst, Math.abs(a[i][k] - b[i][k]));
    }
  }
  return worst;
}

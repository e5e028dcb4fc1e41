"""Forward kinematics of the tracked keypoints and their geometric Jacobians.

Each finger is a serial chain of four revolute joints; a joint contributes
a translation by its stored offset followed by a rotation about its stored
axis, both expressed in the parent frame.  Tracked points sit at the
base-joint origin (palm-fixed), the third and fourth joint origins, and
the fingertip, so keypoint (i, j) moves under exactly the first
CONTROLLING_JOINTS[j] joints of finger i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    NUM_JOINTS,
    NUM_KEYPOINTS,
    FingerChain,
    HandModel,
    keypoint_index,
)

# Number of chain joints that move keypoint j (j = 0 wrist .. 4 tip).
CONTROLLING_JOINTS = (0, 0, 2, 3, 4)


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix for a unit axis."""
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    t = 1.0 - c
    return np.array(
        [
            [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
            [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
            [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
        ]
    )


@dataclass(frozen=True)
class FingerFK:
    """Pose-dependent finger state: keypoints c1..c4 plus the per-joint
    world-frame axes and origins the Jacobians are assembled from."""

    points: np.ndarray        # (4, 3) keypoints c1..c4 in wrist frame
    joint_origins: np.ndarray  # (4, 3)
    joint_axes: np.ndarray     # (4, 3) axes in wrist frame


def finger_fk(chain: FingerChain, qf: np.ndarray,
              palm_rotation: np.ndarray, palm_translation: np.ndarray) -> FingerFK:
    rot = palm_rotation
    pos = palm_translation
    origins = np.empty((4, 3))
    axes = np.empty((4, 3))
    for k, jd in enumerate(chain.joints):
        pos = pos + rot @ jd.offset
        origins[k] = pos
        axes[k] = rot @ jd.axis
        rot = rot @ rotation_about_axis(jd.axis, qf[k])
    tip = pos + rot @ chain.tip_offset
    points = np.stack([origins[0], origins[2], origins[3], tip])
    return FingerFK(points, origins, axes)


def forward_keypoints(q, model: HandModel) -> np.ndarray:
    """All 21 keypoint positions in the wrist frame, wrist row first."""
    q = np.asarray(q, dtype=float)
    if q.shape != (NUM_JOINTS,):
        raise ValueError(f"expected {NUM_JOINTS} joint values, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("joint vector contains non-finite values")
    out = np.zeros((NUM_KEYPOINTS, 3))
    for i, chain in enumerate(model.fingers):
        fk = finger_fk(chain, q[4 * i:4 * i + 4],
                       model.palm_rotation, model.palm_translation)
        out[keypoint_index(i, 1):keypoint_index(i, 4) + 1] = fk.points
    return out


@dataclass(frozen=True)
class KeypointJacobian:
    """3x4 linear (m/rad) and angular (rad/rad) blocks over the keypoint's
    finger chain; columns for joints distal to the keypoint are zero."""

    finger: int
    point: int
    linear: np.ndarray
    angular: np.ndarray


def finger_point_jacobians(fk: FingerFK) -> np.ndarray:
    """Linear Jacobians of keypoints c1..c4, shape (4, 3, 4).

    Column k of point j is axis_k x (p_j - o_k) when joint k controls the
    point, else zero.
    """
    jac = np.zeros((4, 3, 4))
    for j in range(4):
        n_ctl = CONTROLLING_JOINTS[j + 1]
        if n_ctl == 0:
            continue
        arms = fk.points[j] - fk.joint_origins[:n_ctl]
        jac[j, :, :n_ctl] = np.cross(fk.joint_axes[:n_ctl], arms).T
    return jac


def keypoint_jacobian(q, model: HandModel, key: tuple[int, int]) -> KeypointJacobian:
    """Analytic geometric Jacobian of keypoint (finger, point)."""
    finger, point = key
    q = np.asarray(q, dtype=float)
    if point == 0:
        zeros = np.zeros((3, 4))
        return KeypointJacobian(finger, point, zeros, zeros.copy())
    chain = model.fingers[finger]
    fk = finger_fk(chain, q[4 * finger:4 * finger + 4],
                   model.palm_rotation, model.palm_translation)
    n_ctl = CONTROLLING_JOINTS[point]
    linear = np.zeros((3, 4))
    angular = np.zeros((3, 4))
    if n_ctl:
        arms = fk.points[point - 1] - fk.joint_origins[:n_ctl]
        linear[:, :n_ctl] = np.cross(fk.joint_axes[:n_ctl], arms).T
        angular[:, :n_ctl] = fk.joint_axes[:n_ctl].T
    return KeypointJacobian(finger, point, linear, angular)


def _batch_rotation(axis: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """(N,) angles about one fixed unit axis -> (N, 3, 3) matrices."""
    x, y, z = axis
    c = np.cos(angles)
    s = np.sin(angles)
    t = 1.0 - c
    rot = np.empty((angles.shape[0], 3, 3))
    rot[:, 0, 0] = c + x * x * t
    rot[:, 0, 1] = x * y * t - z * s
    rot[:, 0, 2] = x * z * t + y * s
    rot[:, 1, 0] = y * x * t + z * s
    rot[:, 1, 1] = c + y * y * t
    rot[:, 1, 2] = y * z * t - x * s
    rot[:, 2, 0] = z * x * t - y * s
    rot[:, 2, 1] = z * y * t + x * s
    rot[:, 2, 2] = c + z * z * t
    return rot


def batch_fingertips(model: HandModel, finger: int, qf: np.ndarray) -> np.ndarray:
    """Fingertip positions for a (N, 4) batch of one finger's joint angles."""
    qf = np.asarray(qf, dtype=float)
    chain = model.fingers[finger]
    n = qf.shape[0]
    rot = np.broadcast_to(model.palm_rotation, (n, 3, 3))
    pos = np.broadcast_to(model.palm_translation, (n, 3)).copy()
    for k, jd in enumerate(chain.joints):
        pos = pos + rot @ jd.offset
        rot = rot @ _batch_rotation(jd.axis, qf[:, k])
    return pos + rot @ chain.tip_offset

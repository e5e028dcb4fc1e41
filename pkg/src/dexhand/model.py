"""Kinematic description of a five-finger, four-phalange, 20-DoF hand.

A hand model is loaded from a YAML file with this shape::

    name: nominal-20dof
    palm_frame:
      translation: [x, y, z]          # wrist -> palm origin, meters
      rotation_rpy: [roll, pitch, yaw]
    fingers:                          # exactly: thumb, index, middle, ring, pinky
      - name: thumb
        joints:                       # exactly 4, base to tip
          - name: TM-1
            axis: [ax, ay, az]        # unit rotation axis, parent frame
            offset: [ox, oy, oz]      # translation from parent origin, parent frame
            limits: [lo, hi]          # radians, lo < hi
          - ...
        tip_offset: [x, y, z]         # last joint frame -> fingertip
    rest_keypoints:                   # optional: the 21 keypoints at q = 0
      - [x, y, z]                     # (documentation / cross-check, row order below)
      ...

Conventions fixed here and shared by every other module:

* Finger order is thumb, index, middle, ring, pinky (indices 0..4).
* Joint vectors hold 20 radians, finger-major and base-to-tip, so
  q[0:4] is the thumb chain and q[4:8] the index chain, etc.
* Keypoints are addressed as (finger i, point j) with j = 0 the shared
  wrist point and j = 4 the fingertip.  Flattened row order: wrist first,
  then finger-major / base-to-tip (21 rows total).
* The two base joints of every finger are co-located (the second joint's
  offset must be zero): they approximate the MCP/TM ball joint, and a
  nonzero offset between them would make the proximal phalange length
  pose-dependent.

Tracked points sit at the base-joint origin, the third and fourth joint
origins, and the fingertip; phalange j of finger i connects keypoints
(i, j) and (i, j+1), giving 20 phalanges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

FINGER_NAMES = ("thumb", "index", "middle", "ring", "pinky")
THUMB = 0
JOINTS_PER_FINGER = 4
NUM_JOINTS = 20
NUM_KEYPOINTS = 21

THUMB_JOINT_NAMES = ("TM-1", "TM-2", "MCP", "IP")
NONTHUMB_JOINT_NAMES = ("MCP-1", "MCP-2", "PIP", "DIP")

# Keypoint (i, j>=1) sits at the origin of this chain joint; j=4 is the tip.
KEYPOINT_JOINT_OF = (0, 2, 3)

_AXIS_UNIT_TOL = 1e-6
_AXIS_ANGLE_TOL = 1e-9


class ModelError(ValueError):
    """Raised when a model document violates the schema or an invariant."""


def keypoint_index(finger: int, point: int) -> int:
    """Row of keypoint (finger, point) in the flattened 21x3 layout."""
    if not (0 <= finger <= 4 and 0 <= point <= 4):
        raise ValueError(f"keypoint id out of range: ({finger}, {point})")
    if point == 0:
        return 0
    return 1 + 4 * finger + (point - 1)


KEYPOINT_IDS: tuple[tuple[int, int], ...] = ((0, 0),) + tuple(
    (i, j) for i in range(5) for j in range(1, 5)
)

PHALANGE_IDS: tuple[tuple[int, int], ...] = tuple(
    (i, j) for i in range(5) for j in range(4)
)


def joint_index(finger: int, joint: int) -> int:
    return finger * JOINTS_PER_FINGER + joint


def _as_vec3(value, where: str) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"{where}: expected 3 numbers, got {value!r}") from exc
    if v.shape != (3,):
        raise ModelError(f"{where}: expected 3 numbers, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ModelError(f"{where}: non-finite value")
    v.flags.writeable = False
    return v


@dataclass(frozen=True)
class JointDef:
    """One revolute joint: rotation axis and origin offset in the parent frame."""

    name: str
    axis: np.ndarray
    offset: np.ndarray
    lower: float
    upper: float


@dataclass(frozen=True)
class FingerChain:
    """Four-joint serial chain of one finger, wrist side to tip."""

    name: str
    joints: tuple[JointDef, ...]
    tip_offset: np.ndarray

    @property
    def link_lengths(self) -> np.ndarray:
        """The four phalange lengths: base offset, joints 2/3 offsets, tip."""
        j = self.joints
        return np.array(
            [
                float(np.linalg.norm(j[0].offset)),
                float(np.linalg.norm(j[2].offset)),
                float(np.linalg.norm(j[3].offset)),
                float(np.linalg.norm(self.tip_offset)),
            ]
        )

    @property
    def lower(self) -> np.ndarray:
        return np.array([jd.lower for jd in self.joints])

    @property
    def upper(self) -> np.ndarray:
        return np.array([jd.upper for jd in self.joints])


@dataclass(frozen=True)
class HandModel:
    """Validated, immutable hand description. Safe to share across threads."""

    name: str
    fingers: tuple[FingerChain, ...]
    palm_translation: np.ndarray
    palm_rotation: np.ndarray  # 3x3, wrist -> palm
    rest_keypoints: np.ndarray | None = None

    @property
    def lower_limits(self) -> np.ndarray:
        return np.concatenate([f.lower for f in self.fingers])

    @property
    def upper_limits(self) -> np.ndarray:
        return np.concatenate([f.upper for f in self.fingers])

    def mid_range(self) -> np.ndarray:
        return 0.5 * (self.lower_limits + self.upper_limits)

    def joint_names(self) -> list[str]:
        return [
            f"{f.name} {jd.name}" for f in self.fingers for jd in f.joints
        ]


def clamp_to_limits(q, model: HandModel) -> np.ndarray:
    """Clip a 20-joint vector into the model's limit box. Idempotent."""
    q = np.asarray(q, dtype=float)
    if q.shape != (NUM_JOINTS,):
        raise ValueError(f"expected {NUM_JOINTS} joint values, got shape {q.shape}")
    return np.clip(q, model.lower_limits, model.upper_limits)


def _rpy_matrix(rpy: np.ndarray) -> np.ndarray:
    r, p, y = rpy
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def _validate_finger(doc: dict, index: int) -> FingerChain:
    expected_name = FINGER_NAMES[index]
    name = doc.get("name")
    if name != expected_name:
        raise ModelError(
            f"finger {index}: expected name {expected_name!r}, got {name!r}"
        )
    joints_doc = doc.get("joints")
    if not isinstance(joints_doc, list) or len(joints_doc) != JOINTS_PER_FINGER:
        n = len(joints_doc) if isinstance(joints_doc, list) else 0
        raise ModelError(f"finger {name}: expected 4 joints, got {n}")

    expected_joints = THUMB_JOINT_NAMES if index == THUMB else NONTHUMB_JOINT_NAMES
    joints = []
    for k, jdoc in enumerate(joints_doc):
        jname = jdoc.get("name")
        if jname != expected_joints[k]:
            raise ModelError(
                f"finger {name} joint {k}: expected name "
                f"{expected_joints[k]!r}, got {jname!r}"
            )
        where = f"{name} {jname}"
        axis = _as_vec3(jdoc.get("axis"), f"{where} axis")
        norm = float(np.linalg.norm(axis))
        if abs(norm - 1.0) > _AXIS_UNIT_TOL:
            raise ModelError(f"{where}: axis is not a unit vector (norm {norm:.6g})")
        axis = axis / norm
        axis.flags.writeable = False
        offset = _as_vec3(jdoc.get("offset"), f"{where} offset")
        limits = jdoc.get("limits")
        if not isinstance(limits, (list, tuple)) or len(limits) != 2:
            raise ModelError(f"{where}: limits must be [lo, hi]")
        lo, hi = float(limits[0]), float(limits[1])
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ModelError(f"{where}: non-finite limit")
        if not lo < hi:
            raise ModelError(f"{where}: lower limit {lo} not below upper limit {hi}")
        joints.append(JointDef(jname, axis, offset, lo, hi))

    if float(np.linalg.norm(joints[1].offset)) != 0.0:
        raise ModelError(
            f"finger {name}: joint {joints[1].name} offset must be zero "
            "(co-located ball-joint pair)"
        )

    tip_offset = _as_vec3(doc.get("tip_offset"), f"{name} tip_offset")

    chain = FingerChain(name, tuple(joints), tip_offset)

    for slot, length in zip(("base", "proximal", "intermediate", "distal"),
                            chain.link_lengths):
        if length <= 0.0:
            raise ModelError(f"finger {name}: {slot} link length must be positive")

    a0, a1, a2, a3 = (jd.axis for jd in joints)
    if abs(float(a0 @ a1)) > _AXIS_ANGLE_TOL:
        raise ModelError(
            f"finger {name}: axes {joints[0].name} and {joints[1].name} "
            "must be perpendicular"
        )
    if index != THUMB:
        # MCP-2 / PIP / DIP are a parallel flexion stack.
        for other, jd in ((a2, joints[2]), (a3, joints[3])):
            if abs(abs(float(a1 @ other)) - 1.0) > _AXIS_ANGLE_TOL:
                raise ModelError(
                    f"finger {name}: flexion axes {joints[1].name} and {jd.name} "
                    "must be parallel"
                )
    return chain


def model_from_dict(doc: dict) -> HandModel:
    """Validate a parsed model document and build the immutable HandModel."""
    if not isinstance(doc, dict):
        raise ModelError("model document must be a mapping")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ModelError("model: missing 'name'")

    fingers_doc = doc.get("fingers")
    if not isinstance(fingers_doc, list) or len(fingers_doc) != 5:
        n = len(fingers_doc) if isinstance(fingers_doc, list) else 0
        raise ModelError(f"model: expected 5 fingers, got {n}")
    fingers = tuple(_validate_finger(fdoc, i) for i, fdoc in enumerate(fingers_doc))

    palm_doc = doc.get("palm_frame") or {}
    translation = _as_vec3(palm_doc.get("translation", [0.0, 0.0, 0.0]),
                           "palm_frame translation")
    rpy = _as_vec3(palm_doc.get("rotation_rpy", [0.0, 0.0, 0.0]),
                   "palm_frame rotation_rpy")
    rotation = _rpy_matrix(rpy)
    rotation.flags.writeable = False

    rest = doc.get("rest_keypoints")
    rest_arr = None
    if rest is not None:
        rest_arr = np.asarray(rest, dtype=float)
        if rest_arr.shape != (NUM_KEYPOINTS, 3):
            raise ModelError(
                f"rest_keypoints: expected {NUM_KEYPOINTS}x3, got {rest_arr.shape}"
            )
        if not np.all(np.isfinite(rest_arr)):
            raise ModelError("rest_keypoints: non-finite value")
        rest_arr.flags.writeable = False

    return HandModel(name, fingers, translation, rotation, rest_arr)


def load_model(source) -> HandModel:
    """Load and validate a hand model from a YAML path or file object."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    else:
        doc = yaml.safe_load(source)
    return model_from_dict(doc)


def _rpy_from_matrix(rot: np.ndarray) -> list[float]:
    # Inverse of _rpy_matrix (ZYX convention); pitch presumed away from +-pi/2.
    pitch = math.asin(max(-1.0, min(1.0, -rot[2, 0])))
    roll = math.atan2(rot[2, 1], rot[2, 2])
    yaw = math.atan2(rot[1, 0], rot[0, 0])
    return [roll + 0.0, pitch + 0.0, yaw + 0.0]  # normalize -0.0


def serialize_model(model: HandModel) -> dict:
    """Emit a document that load_model parses back to an identical model."""
    doc: dict = {
        "name": model.name,
        "palm_frame": {
            "translation": [float(x) for x in model.palm_translation],
            "rotation_rpy": _rpy_from_matrix(model.palm_rotation),
        },
        "fingers": [],
    }
    for chain in model.fingers:
        doc["fingers"].append(
            {
                "name": chain.name,
                "joints": [
                    {
                        "name": jd.name,
                        "axis": [float(x) for x in jd.axis],
                        "offset": [float(x) for x in jd.offset],
                        "limits": [jd.lower, jd.upper],
                    }
                    for jd in chain.joints
                ],
                "tip_offset": [float(x) for x in chain.tip_offset],
            }
        )
    if model.rest_keypoints is not None:
        doc["rest_keypoints"] = [[float(x) for x in row]
                                 for row in model.rest_keypoints]
    return doc


def save_model(model: HandModel, path, header: str | None = None) -> None:
    text = yaml.safe_dump(serialize_model(model), sort_keys=False)
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.rstrip().splitlines():
                fh.write(f"# {line}\n" if line else "#\n")
        fh.write(text)

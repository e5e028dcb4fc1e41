#!/usr/bin/env python3
"""Regenerate the packaged nominal hand model, poses file, and rest keypoints.

The geometry is an engineering stand-in with human-proportioned link
lengths and limits (no published CAD exists for the real hand); every
metric in the toolkit is defined relative to the loaded model, so the
numbers here only need to be plausible and self-consistent.

The thumb's sweep axis is constructed so the opposition arc starts on the
radial (index) side and ends in the pinky's curl pocket; abduction ranges
are graded per finger the way human hands are (index and pinky fan the
most, the middle finger barely).  Together these give the expected
monotone finger-to-thumb opposability ordering.
"""

import sys
from pathlib import Path

import numpy as np
import yaml

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dexhand.kinematics import forward_keypoints  # noqa: E402
from dexhand.model import model_from_dict, save_model  # noqa: E402

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "dexhand" / "data"

# Wrist frame: +x distal (toward the fingers), +y radial (thumb side),
# +z dorsal (back of hand). Positive flexion about +y curls toward -z.
Z = [0.0, 0.0, 1.0]
Y = [0.0, 1.0, 0.0]

NONTHUMB_FLEXION_LIMITS = {
    "MCP-2": [-0.26, 1.60],
    "PIP": [-0.05, 1.85],
    "DIP": [-0.05, 1.45],
}

# (base offset, abduction half-range, proximal, intermediate, distal).
NONTHUMB_GEOMETRY = {
    "index": ([0.090, 0.024, 0.0], 0.38, 0.048, 0.028, 0.0235),
    "middle": ([0.091, 0.0, 0.0], 0.27, 0.049, 0.029, 0.0240),
    "ring": ([0.086, -0.024, 0.0], 0.17, 0.045, 0.027, 0.0225),
    "pinky": ([0.078, -0.047, 0.0], 0.22, 0.036, 0.021, 0.019),
}

THUMB_BASE = np.array([0.040, 0.045, -0.012])
THUMB_COLUMN = np.array([0.55, 0.80, -0.25])  # rest direction, normalized below
THUMB_SEGMENTS = (0.052, 0.035, 0.028)        # metacarpal, proximal, distal
THUMB_SWEEP_TARGET = np.array([0.075, -0.055, -0.035])  # pinky curl pocket


def nonthumb_finger(name: str) -> dict:
    base, abd, prox, inter, dist = NONTHUMB_GEOMETRY[name]
    lim = NONTHUMB_FLEXION_LIMITS
    return {
        "name": name,
        "joints": [
            {"name": "MCP-1", "axis": Z, "offset": list(base),
             "limits": [-abd, abd]},
            {"name": "MCP-2", "axis": Y, "offset": [0.0, 0.0, 0.0],
             "limits": list(lim["MCP-2"])},
            {"name": "PIP", "axis": Y, "offset": [prox, 0.0, 0.0],
             "limits": list(lim["PIP"])},
            {"name": "DIP", "axis": Y, "offset": [inter, 0.0, 0.0],
             "limits": list(lim["DIP"])},
        ],
        "tip_offset": [dist, 0.0, 0.0],
    }


def thumb_finger() -> dict:
    u = THUMB_COLUMN / np.linalg.norm(THUMB_COLUMN)
    length = sum(THUMB_SEGMENTS)
    # TM-1 axis: rotate the rest tip onto the sweep target about the base.
    r0 = length * u
    r1 = THUMB_SWEEP_TARGET - THUMB_BASE
    r1 *= length / np.linalg.norm(r1)
    a1 = np.cross(r0, r1)
    a1 /= np.linalg.norm(a1)
    sweep = float(np.arctan2(np.linalg.norm(np.cross(r0, r1)), r0 @ r1))
    # TM-2: perpendicular to both the column and the sweep axis.
    a2 = np.cross(u, a1)
    a2 /= np.linalg.norm(a2)
    # MCP/IP flexion: perpendicular to the column, in-palm; positive curls
    # the tip palmar.
    flex = np.cross([0.0, 0.0, 1.0], u)
    flex /= np.linalg.norm(flex)
    return {
        "name": "thumb",
        "joints": [
            {"name": "TM-1", "axis": [float(x) for x in a1],
             "offset": [float(x) for x in THUMB_BASE],
             "limits": [-0.10, round(sweep, 3)]},
            {"name": "TM-2", "axis": [float(x) for x in a2],
             "offset": [0.0, 0.0, 0.0], "limits": [-0.40, 0.40]},
            {"name": "MCP", "axis": [float(x) for x in flex],
             "offset": [float(x) for x in THUMB_SEGMENTS[0] * u],
             "limits": [-0.10, 1.00]},
            {"name": "IP", "axis": [float(x) for x in flex],
             "offset": [float(x) for x in THUMB_SEGMENTS[1] * u],
             "limits": [-0.10, 1.00]},
        ],
        "tip_offset": [float(x) for x in THUMB_SEGMENTS[2] * u],
    }


MODEL_HEADER = """\
Nominal 20-DoF hand geometry.

Link lengths and joint limits below are human-proportioned engineering
stand-ins: no published geometry exists for the physical hand, and every
metric in this toolkit is defined relative to the loaded model rather
than hard-coded. Swap in a measured model file to analyze real hardware.

Frame: +x distal, +y radial (thumb side), +z dorsal. Units: m, rad.
Abduction ranges are graded per finger (index/pinky fan most, middle
least), and the thumb's TM-1 axis is oriented so its opposition sweep
runs from the index side across to the pinky.

rest_keypoints lists the 21 tracked points at q = 0 (wrist row first,
then thumb/index/middle/ring/pinky, base to tip).

Regenerate with scripts/make_nominal_model.py.
"""

POSES_HEADER = """\
Named analysis poses for the nominal hand (20 joint values each, canonical
finger-major order). Abduction joints (MCP-1 / TM-2) stay at zero; the
flexion-class joints (MCP-2, PIP, DIP; thumb TM-1, MCP, IP) are at zero
for "down", at their extension stop for "up", and at their flexion stop
for "curled".
"""


def build_model():
    doc = {
        "name": "nominal-20dof",
        "palm_frame": {"translation": [0.0, 0.0, 0.0],
                       "rotation_rpy": [0.0, 0.0, 0.0]},
        "fingers": [thumb_finger()] + [nonthumb_finger(n)
                                       for n in ("index", "middle", "ring",
                                                 "pinky")],
    }
    model = model_from_dict(doc)
    rest = forward_keypoints(np.zeros(20), model)
    doc["rest_keypoints"] = [[float(x) for x in row] for row in rest]
    return model_from_dict(doc)


def build_poses(model) -> dict:
    lo, hi = model.lower_limits, model.upper_limits
    flexion = np.zeros(20, dtype=bool)
    for f in range(5):
        flex_joints = (0, 2, 3) if f == 0 else (1, 2, 3)
        for k in flex_joints:
            flexion[4 * f + k] = True
    down = np.zeros(20)
    up = np.where(flexion, lo, 0.0)
    curled = np.where(flexion, hi, 0.0)
    return {
        "poses": {
            "down": [float(x) for x in down],
            "up": [float(x) for x in up],
            "curled": [float(x) for x in curled],
        }
    }


def main():
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    model = build_model()
    save_model(model, DATA_DIR / "nominal_hand.yaml", header=MODEL_HEADER)
    with open(DATA_DIR / "poses.yaml", "w", encoding="utf-8") as fh:
        for line in POSES_HEADER.rstrip().splitlines():
            fh.write(f"# {line}\n" if line else "#\n")
        yaml.safe_dump(build_poses(model), fh, sort_keys=False)
    print(f"wrote {DATA_DIR / 'nominal_hand.yaml'}")
    print(f"wrote {DATA_DIR / 'poses.yaml'}")


if __name__ == "__main__":
    main()

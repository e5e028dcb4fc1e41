"""Frame-stream files, offline replay, and trajectory CSV emission.

Frame files are JSON lines, one record per capture frame::

    {"t": <seconds>, "keypoints": [[x, y, z], ... 21 rows ...]}

Keypoint rows follow the canonical layout (wrist first, then finger-major
thumb-to-pinky, base-to-tip).  Timestamps must be strictly increasing.
Structural problems (bad JSON, wrong shape, non-monotone timestamps) are
hard errors naming the line; non-finite coordinate values parse into
frames and are rejected per-frame during replay instead, so a glitchy
capture never aborts a stream.

Trajectory CSV schema: ``t,q0..q19,m0..m19,objective`` with floats
emitted via repr (shortest round-trip), making outputs byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import NUM_KEYPOINTS, HandModel
from .retarget import (
    CalibrationProfile,
    FrameRejected,
    HumanHandFrame,
    RetargetConfig,
    RetargetState,
    correct_frame,
    solve_frame,
)


class FrameParseError(ValueError):
    """Hard structural error in a frame file; message names the line."""


def _parse_line(line: str, lineno: int) -> HumanHandFrame:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FrameParseError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(doc, dict):
        raise FrameParseError(f"line {lineno}: record must be an object")
    if "t" not in doc or "keypoints" not in doc:
        raise FrameParseError(f"line {lineno}: missing 't' or 'keypoints'")
    try:
        t = float(doc["t"])
    except (TypeError, ValueError) as exc:
        raise FrameParseError(f"line {lineno}: bad timestamp {doc['t']!r}") from exc
    kp = doc["keypoints"]
    if (not isinstance(kp, list) or len(kp) != NUM_KEYPOINTS
            or any(not isinstance(row, list) or len(row) != 3 for row in kp)):
        raise FrameParseError(f"line {lineno}: keypoints must be "
                              f"{NUM_KEYPOINTS} rows of 3 numbers")
    try:
        arr = np.asarray(kp, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FrameParseError(f"line {lineno}: non-numeric keypoint") from exc
    return HumanHandFrame(t, arr)


def read_frames(path) -> list[HumanHandFrame]:
    """Parse a frame file, validating structure and timestamp order."""
    frames: list[HumanHandFrame] = []
    prev_t = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            frame = _parse_line(line, lineno)
            if prev_t is not None and not frame.t > prev_t:
                raise FrameParseError(
                    f"line {lineno}: timestamp {frame.t!r} not after "
                    f"previous {prev_t!r}"
                )
            prev_t = frame.t
            frames.append(frame)
    return frames


def frame_to_json(frame: HumanHandFrame) -> str:
    doc = {"t": frame.t,
           "keypoints": [[float(x) for x in row] for row in frame.keypoints]}
    return json.dumps(doc, separators=(",", ":"))


def write_frames(frames, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(frame_to_json(frame))
            fh.write("\n")


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    q: np.ndarray
    motors: np.ndarray
    objective: float
    solve_ms: float
    status: str


@dataclass(frozen=True)
class JointTrajectory:
    points: list[TrajectoryPoint]
    rejected: int

    def solve_times_ms(self) -> np.ndarray:
        return np.array([p.solve_ms for p in self.points])


def replay(stream, profile: CalibrationProfile, config: RetargetConfig,
           model: HandModel) -> JointTrajectory:
    """Fold the per-frame solve over a frame stream with threaded state.

    Rejected frames are skipped and counted; they leave the solver state
    untouched, so the remaining trajectory is identical to a stream with
    those frames removed.
    """
    state = RetargetState.initial(model)
    points: list[TrajectoryPoint] = []
    rejected = 0
    for frame in stream:
        if not frame.is_finite():
            rejected += 1
            continue
        try:
            v = correct_frame(frame, profile)
            q, motors, diag = solve_frame(v, state, config, model)
        except FrameRejected:
            rejected += 1
            continue
        points.append(TrajectoryPoint(frame.t, q, motors, diag.objective,
                                      diag.solve_ms, diag.status))
    return JointTrajectory(points, rejected)


CSV_HEADER = ("t," + ",".join(f"q{i}" for i in range(20)) + ","
              + ",".join(f"m{i}" for i in range(20)) + ",objective")


def trajectory_row(point: TrajectoryPoint) -> str:
    cells = [repr(point.t)]
    cells += [repr(float(x)) for x in point.q]
    cells += [repr(float(x)) for x in point.motors]
    cells.append(repr(point.objective))
    return ",".join(cells)


def trajectory_to_csv(traj: JointTrajectory) -> str:
    lines = [CSV_HEADER]
    lines += [trajectory_row(p) for p in traj.points]
    return "\n".join(lines) + "\n"


def write_trajectory_csv(traj: JointTrajectory, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(trajectory_to_csv(traj))

"""Synthetic capture-recording generator: the end-to-end replay oracle.

There is no capture hardware in CI, so recordings are manufactured from a
known joint script: smooth per-joint sinusoids inside the limit box drive
the robot's forward kinematics, and the resulting keypoints are
"de-calibrated" into a plausible human hand by inverting the recursive
correction under a synthetic per-phalange scale.  Replaying such a
recording against the matching reference capture must recover the joint
script, which is what makes the generator an oracle.
"""

from __future__ import annotations

import numpy as np

from .kinematics import forward_keypoints
from .model import NUM_JOINTS, PHALANGE_IDS, HandModel, keypoint_index
from .retarget import CalibrationProfile, HumanHandFrame, calibrate


def joint_script(model: HandModel, frames: int, seed: int,
                 rate_hz: float = 30.0) -> tuple[np.ndarray, np.ndarray]:
    """Smooth in-limits joint trajectory: (times (N,), Q (N, 20))."""
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    lo, hi = model.lower_limits, model.upper_limits
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    amp = half * rng.uniform(0.3, 0.9, NUM_JOINTS)
    freq = rng.uniform(0.1, 0.45, NUM_JOINTS)
    phase = rng.uniform(0.0, 2.0 * np.pi, NUM_JOINTS)
    t = np.arange(frames) / rate_hz
    q = mid + amp * np.sin(2.0 * np.pi * freq * t[:, None] + phase)
    return t, q


def scaled_reference(model: HandModel, seed: int,
                     scale_range: tuple[float, float] = (0.78, 1.22),
                     ) -> HumanHandFrame:
    """A synthetic human reference capture: the robot's rest skeleton with
    each phalange rescaled by a random factor (a differently-sized hand
    in the same pose)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[1])
    rest = forward_keypoints(np.zeros(NUM_JOINTS), model)
    scales = rng.uniform(*scale_range, size=(5, 4))
    w = np.empty_like(rest)
    w[0] = rest[0]
    for i, j in PHALANGE_IDS:
        a, b = keypoint_index(i, j), keypoint_index(i, j + 1)
        w[b] = w[a] + scales[i, j] * (rest[b] - rest[a])
    return HumanHandFrame(0.0, w)


def decalibrate(robot_points: np.ndarray, ratios: np.ndarray) -> np.ndarray:
    """Invert the recursive correction: produce raw keypoints w such that
    correcting w with the given ratios returns robot_points."""
    w = np.empty_like(robot_points)
    w[0] = robot_points[0]
    for i, j in PHALANGE_IDS:
        a, b = keypoint_index(i, j), keypoint_index(i, j + 1)
        w[b] = w[a] + (robot_points[b] - robot_points[a]) / ratios[i, j]
    return w


def generate_recording(model: HandModel, frames: int = 300, seed: int = 7,
                       rate_hz: float = 30.0, noise_std: float = 0.0002,
                       ) -> tuple[HumanHandFrame, list[HumanHandFrame],
                                  np.ndarray, np.ndarray, CalibrationProfile]:
    """Build a recording plus its ground truth.

    Returns (reference capture, frames, times, joint script, profile).
    noise_std is per-axis Gaussian keypoint jitter in meters (sensor
    noise surrogate); the joint script remains the recovery target.
    """
    reference = scaled_reference(model, seed)
    profile = calibrate(reference, model)
    times, script = joint_script(model, frames, seed, rate_hz)
    noise_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[2])
    records = []
    for k in range(frames):
        points = forward_keypoints(script[k], model)
        w = decalibrate(points, profile.ratios)
        if noise_std > 0.0:
            w = w + noise_rng.normal(0.0, noise_std, w.shape)
        records.append(HumanHandFrame(float(times[k]), w))
    return reference, records, times, script, profile


def joint_script_csv(times: np.ndarray, script: np.ndarray) -> str:
    header = "t," + ",".join(f"q{i}" for i in range(NUM_JOINTS))
    lines = [header]
    for t, row in zip(times, script):
        lines.append(",".join([repr(float(t))] + [repr(float(x)) for x in row]))
    return "\n".join(lines) + "\n"

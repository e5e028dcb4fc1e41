"""Human-to-robot motion retargeting.

Pipeline per session:

1. One-shot calibration.  A single stored reference capture of the human
   hand fixes 20 per-phalange scaling ratios: robot phalange length over
   human phalange length.  Robot lengths are evaluated at the rest pose;
   they are pose-invariant anyway (rigid links), so the choice of pose
   only fixes the code path.
2. Recursive correction of every incoming frame.  Walking each finger
   from the wrist out, raw segment vectors are rescaled by the calibrated
   ratios, so the corrected skeleton has robot-length phalanges while
   preserving the captured segment directions.
3. Per-frame solve.  Joint angles minimize the squared distance between
   corrected keypoints and the robot keypoints, plus a smoothness penalty
   against the previous frame's solution, over the joint-limit box:

       sum_{(i,j) in K} |v_ij - p_ij(Q)|^2  +  beta * |Q - Q_prev|^2

   The objective is separable across fingers (keypoints of finger i
   depend only on finger i's four joints), so each frame solves five
   independent 4-variable box-constrained least-squares problems with a
   damped Gauss-Newton iteration, projected steps, and accept-only-on-
   decrease, warm-started at the previous solution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import yaml

from .kinematics import finger_fk, finger_point_jacobians, forward_keypoints, keypoint_jacobian
from .model import (
    FINGER_NAMES,
    NUM_JOINTS,
    NUM_KEYPOINTS,
    PHALANGE_IDS,
    HandModel,
    clamp_to_limits,
    keypoint_index,
)
from .transmission import joints_to_motors


class CalibrationError(ValueError):
    """Raised when a reference capture cannot produce valid ratios."""


class FrameRejected(ValueError):
    """Raised for frames the solver refuses (non-finite targets); the
    session state is left unchanged."""


@dataclass(frozen=True)
class HumanHandFrame:
    """One timestamped 21-keypoint observation in wrist coordinates (m)."""

    t: float
    keypoints: np.ndarray  # (21, 3), wrist row first, finger-major

    def __post_init__(self):
        kp = np.asarray(self.keypoints, dtype=float)
        if kp.shape != (NUM_KEYPOINTS, 3):
            raise ValueError(
                f"expected {NUM_KEYPOINTS}x3 keypoints, got shape {kp.shape}"
            )
        kp.flags.writeable = False
        object.__setattr__(self, "keypoints", kp)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.keypoints)))


@dataclass(frozen=True)
class CalibrationProfile:
    """Stored reference capture plus the 20 fixed scaling ratios,
    indexed [finger, phalange]."""

    reference: HumanHandFrame
    ratios: np.ndarray  # (5, 4), > 0

    def __post_init__(self):
        r = np.asarray(self.ratios, dtype=float)
        r.flags.writeable = False
        object.__setattr__(self, "ratios", r)


def calibrate(reference: HumanHandFrame, model: HandModel) -> CalibrationProfile:
    """Compute per-phalange ratios from one reference capture."""
    if not reference.is_finite():
        raise CalibrationError("reference capture contains non-finite values")
    rest = forward_keypoints(np.zeros(NUM_JOINTS), model)
    w = reference.keypoints
    ratios = np.empty((5, 4))
    for i, j in PHALANGE_IDS:
        a, b = keypoint_index(i, j), keypoint_index(i, j + 1)
        human_len = float(np.linalg.norm(w[b] - w[a]))
        if human_len == 0.0:
            raise CalibrationError(
                f"{FINGER_NAMES[i]} phalange {j}: zero-length segment in "
                "reference capture"
            )
        robot_len = float(np.linalg.norm(rest[b] - rest[a]))
        ratios[i, j] = robot_len / human_len
    return CalibrationProfile(reference, ratios)


def correct_frame(frame: HumanHandFrame, profile: CalibrationProfile) -> np.ndarray:
    """Rescale a raw frame's phalanges by the calibrated ratios, walking
    each finger from the wrist out. Returns the corrected 21x3 keypoints."""
    w = frame.keypoints
    v = np.empty_like(w)
    v[0] = w[0]
    r = profile.ratios
    for i in range(5):
        prev = v[0]
        for j in range(1, 5):
            idx = keypoint_index(i, j)
            prev = prev + r[i, j - 1] * (w[idx] - w[keypoint_index(i, j - 1)])
            v[idx] = prev
    return v


def keys_all() -> tuple[tuple[int, int], ...]:
    """All 20 non-wrist keypoints (the default selection)."""
    return tuple((i, j) for i in range(5) for j in range(1, 5))


def keys_fingertips() -> tuple[tuple[int, int], ...]:
    return tuple((i, 4) for i in range(5))


NAMED_KEY_SETS = {"all": keys_all, "fingertips": keys_fingertips}


@dataclass(frozen=True)
class RetargetConfig:
    """Solver knobs.

    The iteration cap is the determinism-carrying budget (it also bounds
    compute: ~60 iterations x 5 fingers of 4x4 Gauss-Newton steps). The
    wall-clock budget is a stream-liveness guard checked between
    iterations; it is sized two orders of magnitude above the normal
    frame cost so it only binds when the host stalls, because a binding
    wall-clock cutoff would break bit-for-bit determinism.
    """

    keys: tuple[tuple[int, int], ...] = field(default_factory=keys_all)
    beta: float = 0.05
    max_iterations: int = 60
    tol: float = 1e-12
    time_budget_ms: float = 1000.0

    def __post_init__(self):
        if not self.keys:
            raise ValueError("keypoint selection must be non-empty")
        for key in self.keys:
            i, j = key
            if not (0 <= i <= 4 and 0 <= j <= 4):
                raise ValueError(f"keypoint id out of range: {key}")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")


@dataclass
class RetargetState:
    """Per-session solver state: previous solution and frame counter."""

    q_prev: np.ndarray
    frame_count: int = 0

    @classmethod
    def initial(cls, model: HandModel) -> "RetargetState":
        return cls(q_prev=model.mid_range(), frame_count=0)


@dataclass(frozen=True)
class SolveDiagnostics:
    objective: float
    iterations: int
    residuals: dict[tuple[int, int], float]
    solve_ms: float
    status: str  # "converged" | "budget"

    @property
    def residual_rms(self) -> float:
        if not self.residuals:
            return 0.0
        vals = np.fromiter(self.residuals.values(), dtype=float)
        return float(np.sqrt(np.mean(vals**2)))


_LM_START = 1e-6
_LM_MIN = 1e-10
_LM_MAX = 1e10


def _solve_finger(model, finger, targets, x0, anchor, beta, max_iter, tol, deadline):
    """Damped Gauss-Newton over one finger's 4 joints in the limit box.

    targets: list of (point j in 1..4, target position).  Returns
    (x, iterations, hit_budget).
    """
    chain = model.fingers[finger]
    lo = chain.lower
    hi = chain.upper
    x = np.clip(x0, lo, hi)
    if not targets and beta == 0.0:
        return x, 0, "converged"  # nothing pulls this finger anywhere
    palm_rot, palm_t = model.palm_rotation, model.palm_translation
    sqrt_beta = np.sqrt(beta)

    def residuals(x):
        fk = finger_fk(chain, x, palm_rot, palm_t)
        res = [fk.points[j - 1] - v for j, v in targets]
        if beta > 0.0:
            res.append(sqrt_beta * (x - anchor))
        return fk, np.concatenate(res)

    fk, r = residuals(x)
    cost = float(r @ r)
    lam = _LM_START
    iterations = 0
    status = "budget"  # overwritten by any convergence break

    while iterations < max_iter:
        if time.perf_counter() > deadline:
            break
        iterations += 1

        point_jacs = finger_point_jacobians(fk)
        rows = [point_jacs[j - 1] for j, _ in targets]
        if beta > 0.0:
            rows.append(sqrt_beta * np.eye(4))
        jac = np.concatenate(rows, axis=0)

        grad = 2.0 * (jac.T @ r)
        projected = x - np.clip(x - grad, lo, hi)
        if np.max(np.abs(projected)) < 1e-13:
            status = "converged"
            break

        hess = jac.T @ jac
        jtr = jac.T @ r
        accepted = False
        while lam <= _LM_MAX:
            step = np.linalg.solve(hess + lam * np.eye(4), -jtr)
            x_new = np.clip(x + step, lo, hi)
            fk_new, r_new = residuals(x_new)
            cost_new = float(r_new @ r_new)
            if cost_new < cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # constrained stationary point at float resolution
            status = "converged"
            break
        decrease = cost - cost_new
        x, fk, r, cost = x_new, fk_new, r_new, cost_new
        lam = max(lam / 3.0, _LM_MIN)
        if decrease <= tol * max(cost, 1.0):
            status = "converged"
            break

    return x, iterations, status


def solve_frame(v, state: RetargetState, config: RetargetConfig,
                model: HandModel):
    """Solve one frame against corrected keypoints v (21x3).

    Returns (q, motors, SolveDiagnostics) and advances the state.  The
    returned objective never exceeds the objective at the warm start, and
    the returned q lies exactly inside the joint-limit box.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (NUM_KEYPOINTS, 3):
        raise FrameRejected(f"expected {NUM_KEYPOINTS}x3 targets, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise FrameRejected("non-finite keypoint target")

    t0 = time.perf_counter()
    deadline = t0 + config.time_budget_ms / 1000.0

    by_finger: list[list[tuple[int, np.ndarray]]] = [[] for _ in range(5)]
    wrist_const = 0.0
    for i, j in config.keys:
        if j == 0:
            # The wrist keypoint is the frame origin: a constant residual.
            wrist_const += float(v[0] @ v[0])
        else:
            by_finger[i].append((j, v[keypoint_index(i, j)]))

    anchor = clamp_to_limits(state.q_prev, model)
    q = anchor.copy()
    total_iters = 0
    hit_budget = False
    for i in range(5):
        xf, iters, status = _solve_finger(
            model, i, by_finger[i], anchor[4 * i:4 * i + 4],
            anchor[4 * i:4 * i + 4], config.beta,
            config.max_iterations, config.tol, deadline,
        )
        q[4 * i:4 * i + 4] = xf
        total_iters += iters
        hit_budget = hit_budget or status == "budget"

    points = forward_keypoints(q, model)
    residuals = {
        (i, j): float(np.linalg.norm(v[keypoint_index(i, j)]
                                     - points[keypoint_index(i, j)]))
        for i, j in config.keys
    }
    objective = wrist_const + sum(
        r * r for (key, r) in residuals.items() if key[1] != 0
    ) + config.beta * float(np.sum((q - anchor) ** 2))

    solve_ms = (time.perf_counter() - t0) * 1000.0
    diag = SolveDiagnostics(
        objective=objective,
        iterations=total_iters,
        residuals=residuals,
        solve_ms=solve_ms,
        status="budget" if hit_budget else "converged",
    )
    motors = joints_to_motors(q, model)
    state.q_prev = q
    state.frame_count += 1
    return q, motors, diag


def objective_value(q, v, config: RetargetConfig, model: HandModel,
                    q_prev) -> float:
    """The frame objective at q (for tests and diagnostics)."""
    q = np.asarray(q, dtype=float)
    points = forward_keypoints(q, model)
    total = 0.0
    for i, j in config.keys:
        d = v[keypoint_index(i, j)] - points[keypoint_index(i, j)]
        total += float(d @ d)
    dq = q - np.asarray(q_prev, dtype=float)
    return total + config.beta * float(dq @ dq)


def objective_gradient(q, v, config: RetargetConfig, model: HandModel,
                       q_prev) -> np.ndarray:
    """Analytic gradient of the frame objective, assembled from the
    per-keypoint geometric Jacobians."""
    q = np.asarray(q, dtype=float)
    points = forward_keypoints(q, model)
    grad = 2.0 * config.beta * (q - np.asarray(q_prev, dtype=float))
    for i, j in config.keys:
        if j == 0:
            continue
        jac = keypoint_jacobian(q, model, (i, j))
        diff = points[keypoint_index(i, j)] - v[keypoint_index(i, j)]
        grad[4 * i:4 * i + 4] += 2.0 * (jac.linear.T @ diff)
    return grad


# ---------------------------------------------------------------------------
# Calibration file IO
# ---------------------------------------------------------------------------

def profile_to_dict(profile: CalibrationProfile) -> dict:
    return {
        "reference": {
            "t": float(profile.reference.t),
            "keypoints": [[float(x) for x in row]
                          for row in profile.reference.keypoints],
        },
        "ratios": [float(x) for x in profile.ratios.ravel()],
    }


def profile_from_dict(doc: dict, model: HandModel) -> CalibrationProfile:
    ref = doc["reference"]
    reference = HumanHandFrame(float(ref["t"]), np.asarray(ref["keypoints"], float))
    stored = np.asarray(doc["ratios"], dtype=float).reshape(5, 4)
    profile = calibrate(reference, model)
    if not np.allclose(profile.ratios, stored, rtol=0, atol=1e-9):
        raise CalibrationError(
            "stored ratios do not match the reference capture under this "
            "model; recalibrate against the loaded model file"
        )
    return profile


def save_profile(profile: CalibrationProfile, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(profile_to_dict(profile), fh, sort_keys=False)


def load_profile(path, model: HandModel) -> CalibrationProfile:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    return profile_from_dict(doc, model)

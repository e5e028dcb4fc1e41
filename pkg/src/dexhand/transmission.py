"""Exact linear motor<->joint coupling of the gear-train transmission.

Every finger is driven by four palm-mounted motors through gear sets; the
induced map from motor shaft angles to joint angles is linear, with
off-diagonal terms from shared shafts and from the planetary arrangement
of the distal gear pair (PIP motion drags the DIP gear even with its motor
held still).

Non-thumb fingers share one coupling matrix (rows MCP-1, MCP-2, PIP, DIP;
columns M1..M4).  The thumb's base joint pair is differentially driven:
its matrix is stated in differential coordinates

    theta1 = (M1 - M2) / 2,   theta2 = (M1 + M2) / 2,
    theta3 = M3,              theta4 = M4,

rows TM-1, TM-2, MCP, IP.  Same-speed opposite rotation of M1/M2 is the
pure TM-1 mode, same-direction rotation the pure TM-2/flexion mode.  (The
assignment of the differential mode to TM-1 is a hardware sign-convention
choice; the mirrored convention differs only by relabeling the motors.)

Coefficients are kept as exact rationals; inverses are computed in
rational arithmetic at import time and converted to float at the boundary,
so round trips cost only float rounding (~1e-16 per entry).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import NUM_JOINTS, THUMB, HandModel

F = Fraction

# Joint rows x motor columns, from gear transmission analysis of the
# universal phalangeal scheme (MCP-1, MCP-2, PIP, DIP vs M1..M4).
NONTHUMB_COUPLING = (
    (F(-1), F(0), F(0), F(0)),
    (F(-1), F(-10, 3), F(0), F(0)),
    (F(-10, 3), F(-50, 33), F(10, 9), F(0)),
    (F(-13, 12), F(-155, 132), F(85, 36), F(5, 4)),
)

# Joint rows x differential-coordinate columns (TM-1, TM-2, MCP, IP vs
# theta1..theta4).
THUMB_COUPLING = (
    (F(10, 11), F(0), F(0), F(0)),
    (F(0), F(-10, 11), F(0), F(0)),
    (F(0), F(10, 11), F(5, 4), F(0)),
    (F(0), F(10, 11), F(5, 2), F(-5, 4)),
)

# (M1, M2) -> (theta1, theta2) differential reparameterization.
_DIFF = (
    (F(1, 2), F(-1, 2), F(0), F(0)),
    (F(1, 2), F(1, 2), F(0), F(0)),
    (F(0), F(0), F(1), F(0)),
    (F(0), F(0), F(0), F(1)),
)


def _frac_inverse(m) -> tuple[tuple[Fraction, ...], ...]:
    """Exact 4x4 inverse by Gauss-Jordan elimination over the rationals."""
    n = len(m)
    aug = [list(row) + [F(1) if i == j else F(0) for j in range(n)]
           for i, row in enumerate(m)]
    for col in range(n):
        pivot_row = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        pivot = aug[col][col]
        aug[col] = [x / pivot for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def _as_float(m) -> np.ndarray:
    arr = np.array([[float(x) for x in row] for row in m])
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class CouplingMatrix:
    """Per-finger 4x4 motor->joint map with its exact inverse."""

    finger_kind: str  # "thumb" | "non-thumb"
    entries: tuple[tuple[Fraction, ...], ...]

    @property
    def as_float(self) -> np.ndarray:
        return _as_float(self.entries)

    @property
    def inverse_as_float(self) -> np.ndarray:
        return _as_float(_frac_inverse(self.entries))


def coupling_matrix(finger_kind: str) -> CouplingMatrix:
    if finger_kind == "thumb":
        return CouplingMatrix("thumb", THUMB_COUPLING)
    if finger_kind == "non-thumb":
        return CouplingMatrix("non-thumb", NONTHUMB_COUPLING)
    raise ValueError(f"unknown finger kind: {finger_kind!r}")


_C_NONTHUMB = _as_float(NONTHUMB_COUPLING)
_C_NONTHUMB_INV = _as_float(_frac_inverse(NONTHUMB_COUPLING))
_C_THUMB = _as_float(THUMB_COUPLING)
_C_THUMB_INV = _as_float(_frac_inverse(THUMB_COUPLING))
_DIFF_F = _as_float(_DIFF)
_DIFF_INV = _as_float(_frac_inverse(_DIFF))


def _check_vector(v, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (NUM_JOINTS,):
        raise ValueError(f"expected {NUM_JOINTS} {what} values, got shape {v.shape}")
    return v


def motors_to_joints(m, model: HandModel) -> np.ndarray:
    """Map 20 motor shaft angles to 20 joint angles (radians)."""
    m = _check_vector(m, "motor")
    q = np.empty(NUM_JOINTS)
    for f in range(len(model.fingers)):
        mf = m[4 * f:4 * f + 4]
        if f == THUMB:
            q[0:4] = _C_THUMB @ (_DIFF_F @ mf)
        else:
            q[4 * f:4 * f + 4] = _C_NONTHUMB @ mf
    return q


def joints_to_motors(q, model: HandModel) -> np.ndarray:
    """Exact inverse of motors_to_joints (the coupling is lower-triangular
    with nonzero diagonal, so it is always invertible)."""
    q = _check_vector(q, "joint")
    m = np.empty(NUM_JOINTS)
    for f in range(len(model.fingers)):
        qf = q[4 * f:4 * f + 4]
        if f == THUMB:
            m[0:4] = _DIFF_INV @ (_C_THUMB_INV @ qf)
        else:
            m[4 * f:4 * f + 4] = _C_NONTHUMB_INV @ qf
    return m


# Defaults reproduce the distal gear pair of the non-thumb table's M3
# column: DIP/PIP motion ratio (85/36) / (10/9) = 17/8.
DEFAULT_DIP_GEAR_RATIOS = (F(85, 36), F(10, 9))


def dip_coupling_delta(pip_rotation: float,
                       gear_ratios: tuple[Fraction, Fraction] = DEFAULT_DIP_GEAR_RATIOS,
                       ) -> float:
    """Parasitic DIP rotation induced by a PIP rotation with the DIP motor
    held still (planetary arrangement: the DIP drive gear is hinged on the
    intermediate phalanx, so PIP motion rolls it against its fixed mate)."""
    dip_per_motor, pip_per_motor = (Fraction(r) for r in gear_ratios)
    if pip_per_motor == 0:
        raise ValueError("PIP gear ratio must be nonzero")
    return float(dip_per_motor / pip_per_motor) * pip_rotation

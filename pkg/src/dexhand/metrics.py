"""Dexterity metrics: manipulability ellipsoid volumes and finger-to-thumb
opposability volumes.

The manipulability ellipsoid is the image of the unit joint-velocity ball
under the fingertip Jacobian; its volume is (4*pi/3) times the product of
the three singular values of the 3x4 block.  Working on the rectangular
block directly (rather than the 4x4 Gram matrix) avoids squaring the
condition number near singular poses; a singular-value cutoff makes rank
deficiency report an exact zero.

Opposability is estimated by Monte Carlo: sample the thumb-tip and
finger-tip reachable sets over their joint-limit boxes, voxelize both
point clouds, and count voxels occupied by both sets.  Sampling streams
are spawned per point set from the single seed, so the result is
deterministic and independent of how the sampling is chunked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import batch_fingertips, keypoint_jacobian
from .model import THUMB, HandModel

_RANK_TOL_FACTOR = 1e-9  # relative sigma cutoff before a direction counts


def ellipsoid_volume(block: np.ndarray) -> tuple[float, np.ndarray]:
    """(volume, singular values) of the ellipsoid spanned by a 3xN block.

    Volume is exactly 0.0 when the block has rank < 3 under the relative
    cutoff; otherwise (4*pi/3) * s1*s2*s3.
    """
    sv = np.linalg.svd(np.asarray(block, dtype=float), compute_uv=False)
    sv = np.pad(sv, (0, max(0, 3 - sv.size)))[:3]
    if sv[0] == 0.0 or sv[2] <= _RANK_TOL_FACTOR * sv[0]:
        return 0.0, sv
    return float(4.0 * np.pi / 3.0 * np.prod(sv)), sv


@dataclass(frozen=True)
class EllipsoidVolumeReport:
    finger: int
    pose_label: str
    linear_volume: float      # m^3 per unit joint-speed ball
    angular_volume: float     # dimensionless
    linear_singular_values: np.ndarray
    angular_singular_values: np.ndarray


def manipulability_volumes(q, model: HandModel, finger: int,
                           pose_label: str = "") -> EllipsoidVolumeReport:
    """Ellipsoid volumes of one finger's tip Jacobian at pose q."""
    jac = keypoint_jacobian(q, model, (finger, 4))
    lin_vol, lin_sv = ellipsoid_volume(jac.linear)
    ang_vol, ang_sv = ellipsoid_volume(jac.angular)
    return EllipsoidVolumeReport(finger, pose_label, lin_vol, ang_vol,
                                 lin_sv, ang_sv)


@dataclass(frozen=True)
class OpposabilityReport:
    finger: int
    volume: float             # m^3
    intersection_voxels: int
    thumb_samples: int
    finger_samples: int
    voxel: float              # edge length, m
    seed: int


def _voxel_keys(points: np.ndarray, voxel: float) -> np.ndarray:
    """Pack integer voxel coordinates into sortable int64 keys."""
    idx = np.floor(points / voxel).astype(np.int64)
    if np.max(np.abs(idx)) >= (1 << 20):
        raise ValueError("voxel edge too fine for the workspace extent")
    packed = ((idx[:, 0] + (1 << 20)) << 42 |
              (idx[:, 1] + (1 << 20)) << 21 |
              (idx[:, 2] + (1 << 20)))
    return np.unique(packed)


def _sample_tips(model: HandModel, finger: int, count: int,
                 rng: np.random.Generator) -> np.ndarray:
    chain = model.fingers[finger]
    qf = rng.uniform(chain.lower, chain.upper, size=(count, 4))
    return batch_fingertips(model, finger, qf)


def opposability_volume(model: HandModel, finger: int, samples: int = 400_000,
                        voxel: float = 0.005, seed: int = 0,
                        ) -> OpposabilityReport:
    """Volume reachable by both the thumb tip and the given fingertip."""
    if finger == THUMB:
        raise ValueError("opposability is measured against the thumb; "
                         "pass a non-thumb finger")
    if not 0 < finger < len(model.fingers):
        raise ValueError(f"finger index out of range: {finger}")
    if samples < 10_000:
        raise ValueError("need at least 10000 samples per reachable set")
    if voxel <= 0:
        raise ValueError("voxel edge length must be positive")

    thumb_ss, finger_ss = np.random.SeedSequence(seed).spawn(2)
    thumb_pts = _sample_tips(model, THUMB, samples,
                             np.random.default_rng(thumb_ss))
    finger_pts = _sample_tips(model, finger, samples,
                              np.random.default_rng(finger_ss))

    common = np.intersect1d(_voxel_keys(thumb_pts, voxel),
                            _voxel_keys(finger_pts, voxel),
                            assume_unique=True)
    return OpposabilityReport(
        finger=finger,
        volume=float(common.size) * voxel**3,
        intersection_voxels=int(common.size),
        thumb_samples=samples,
        finger_samples=samples,
        voxel=voxel,
        seed=seed,
    )


def reachable_tip_cloud(model: HandModel, finger: int, samples: int,
                        seed: int = 0) -> np.ndarray:
    """Raw sampled tip positions (for point-cloud dumps / visualization).

    Uses the same stream spawning as opposability_volume, so dumped clouds
    match the volumes computed at the same seed.
    """
    streams = np.random.SeedSequence(seed).spawn(2)
    ss = streams[0] if finger == THUMB else streams[1]
    return _sample_tips(model, finger, samples, np.random.default_rng(ss))

"""dexhand: 20-DoA dexterous hand toolkit.

Motor<->joint gear-train transmission, forward kinematics of the 21
tracked keypoints, calibrated human-to-robot motion retargeting,
dexterity metrics, trajectory replay, and a streaming teleoperation
service.
"""

from .kinematics import KeypointJacobian, forward_keypoints, keypoint_jacobian
from .metrics import (
    EllipsoidVolumeReport,
    OpposabilityReport,
    ellipsoid_volume,
    manipulability_volumes,
    opposability_volume,
)
from .model import (
    FINGER_NAMES,
    KEYPOINT_IDS,
    NUM_JOINTS,
    NUM_KEYPOINTS,
    PHALANGE_IDS,
    FingerChain,
    HandModel,
    JointDef,
    ModelError,
    clamp_to_limits,
    keypoint_index,
    load_model,
    model_from_dict,
    save_model,
    serialize_model,
)
from .retarget import (
    CalibrationError,
    CalibrationProfile,
    FrameRejected,
    HumanHandFrame,
    RetargetConfig,
    RetargetState,
    SolveDiagnostics,
    calibrate,
    correct_frame,
    keys_all,
    keys_fingertips,
    load_profile,
    save_profile,
    solve_frame,
)
from .trajectory import (
    FrameParseError,
    JointTrajectory,
    read_frames,
    replay,
    trajectory_to_csv,
    write_frames,
    write_trajectory_csv,
)
from .transmission import (
    CouplingMatrix,
    coupling_matrix,
    dip_coupling_delta,
    joints_to_motors,
    motors_to_joints,
)

__version__ = "0.1.0"


def nominal_model_path():
    """Path of the packaged nominal hand model file."""
    from importlib.resources import files

    return files("dexhand.data") / "nominal_hand.yaml"

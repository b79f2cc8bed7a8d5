"""XR teleoperation data gateway.

Ingests handle frames (JSON over a persistent socket) and hand-skeleton
frames (fixed-layout binary over UDP), normalizes both into one right-handed
Z-up world convention, gates motion with a four-layer jitter/jump filter
around a damped-least-squares IK stage, and emits joint commands, atomic
latest-frame snapshots, and replayable episode logs.
"""

from .config import GatewayConfig, load_config, validate_config
from .gateway import Gateway, control_request
from .kinematics import (
    ChainJoint,
    IkSettings,
    KinematicChain,
    forward_kinematics,
    jacobian,
    load_bundled_chain,
    solve_ik,
)
from .model import (
    CANONICAL_JOINT_NAMES,
    ButtonState,
    Hand,
    HandFrame,
    Handle,
    HandleFrame,
    Joint,
    Pose,
    ValidationReport,
    validate_hand_frame,
    validate_handle_frame,
)
from .motion_filter import FilterConfig, FilterDecision, FilterState, evaluate, step
from .pipeline import ButtonMapping, StreamPipeline, map_handle_buttons
from .simulator import NoiseSpec, TrajectorySpec, generate_frames
from .transforms import (
    BasisConvention,
    QuantizationPolicy,
    mirror_lh_to_rh,
    normalize_to_world,
    quantize_position,
    yup_to_zup,
)

__version__ = "0.1.0"

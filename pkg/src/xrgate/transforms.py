"""Pose conversion between XR source conventions and the world frame.

The world convention is right-handed Z-up. Handle poses arrive right-handed
Y-up; gesture poses arrive left-handed Y-up and need a handedness mirror
before the up-axis change. The fixed Y-up to Z-up basis maps device forward
(-Z) to world +X and device up (+Y) to world +Z.

Position quantization is also here: it is part of normalizing device input,
not of any transport.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import Pose
from .rotation import matrix_to_quat, quat_multiply, quat_normalize

# Proper rotation (det +1) taking Y-up right-handed coordinates to Z-up world
# coordinates: x -> -y, y -> +z, z -> -x.
YUP_TO_ZUP_MATRIX = np.array(
    [
        [0.0, 0.0, -1.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
    ]
)

YUP_TO_ZUP_QUAT = matrix_to_quat(YUP_TO_ZUP_MATRIX)  # (0.5, -0.5, -0.5, 0.5)


class BasisConvention(Enum):
    """Source coordinate conventions the gateway accepts."""

    WEBXR = ("right", "Y")
    PICO_UNITY = ("left", "Y")
    ISAAC = ("right", "Z")

    @property
    def handedness(self) -> str:
        return self.value[0]

    @property
    def up_axis(self) -> str:
        return self.value[1]


@dataclass(frozen=True)
class QuantizationPolicy:
    """Grid resolution for position quantization, meters."""

    resolution: float = 0.001

    def __post_init__(self):
        if not (self.resolution > 0.0):
            raise ValueError(f"resolution must be > 0, got {self.resolution}")


def mirror_lh_to_rh(pose: Pose) -> Pose:
    """Mirror a left-handed Y-up pose across z=0 into right-handed Y-up.

    Positions negate z; quaternions follow conjugation by diag(1, 1, -1),
    i.e. (qx, qy, qz, qw) -> (-qx, -qy, qz, qw).
    """
    x, y, z = pose.position
    qx, qy, qz, qw = pose.orientation
    return Pose((x, y, -z), quat_normalize((-qx, -qy, qz, qw)))


def yup_to_zup(pose: Pose) -> Pose:
    """Change of basis from right-handed Y-up to the Z-up world frame."""
    p = YUP_TO_ZUP_MATRIX @ np.asarray(pose.position, dtype=float)
    q = quat_multiply(
        quat_multiply(YUP_TO_ZUP_QUAT, pose.orientation),
        (-YUP_TO_ZUP_QUAT[0], -YUP_TO_ZUP_QUAT[1], -YUP_TO_ZUP_QUAT[2], YUP_TO_ZUP_QUAT[3]),
    )
    return Pose(tuple(p), quat_normalize(q))


def zup_to_yup(pose: Pose) -> Pose:
    """Inverse of :func:`yup_to_zup`."""
    p = YUP_TO_ZUP_MATRIX.T @ np.asarray(pose.position, dtype=float)
    rx, ry, rz, rw = YUP_TO_ZUP_QUAT
    inv = (-rx, -ry, -rz, rw)
    q = quat_multiply(quat_multiply(inv, pose.orientation), YUP_TO_ZUP_QUAT)
    return Pose(tuple(p), quat_normalize(q))


def normalize_to_world(pose: Pose, source: BasisConvention) -> Pose:
    """Bring a pose from its source convention into the world frame.

    ISAAC input is already world; WEBXR needs the up-axis change; PICO_UNITY
    needs the handedness mirror first, then the up-axis change.
    """
    if source is BasisConvention.ISAAC:
        return pose
    if source is BasisConvention.WEBXR:
        return yup_to_zup(pose)
    if source is BasisConvention.PICO_UNITY:
        return yup_to_zup(mirror_lh_to_rh(pose))
    raise ValueError(f"unknown source convention {source!r}")


def _quantize_component(value: float, scale: float) -> float:
    v = value * scale
    if not math.isfinite(v):
        return value
    return math.copysign(math.floor(abs(v) + 0.5), v) / scale


def quantize_position(pose: Pose, policy: QuantizationPolicy) -> Pose:
    """Snap each position component to the policy grid.

    Rounding is half-away-from-zero so the grid is symmetric about the
    origin; the orientation is untouched and the operation is idempotent.
    """
    scale = 1.0 / policy.resolution
    return Pose(
        tuple(_quantize_component(v, scale) for v in pose.position),
        pose.orientation,
    )

"""Shared spatial and frame schema types used across the gateway.

Positions are meters, orientations are quaternions stored [x, y, z, w],
timestamps are epoch milliseconds. All types are immutable value objects.

Validation is deliberately separate from construction: parsers accept what
the wire gives them, and ``validate_hand_frame`` / ``validate_handle_frame``
report schema violations as data instead of raising.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .rotation import quat_norm

HANDEDNESS_VALUES = ("left", "right")

JOINT_COUNT = 26

# Canonical skeleton order: palm, wrist, four thumb joints, then five joints
# for each of index/middle/ring/little.
CANONICAL_JOINT_NAMES: tuple[str, ...] = (
    "Palm",
    "Wrist",
    "ThumbMetacarpal",
    "ThumbProximal",
    "ThumbDistal",
    "ThumbTip",
) + tuple(
    f"{finger}{part}"
    for finger in ("Index", "Middle", "Ring", "Little")
    for part in ("Metacarpal", "Proximal", "Intermediate", "Distal", "Tip")
)

JOINT_INDEX: dict[str, int] = {name: i for i, name in enumerate(CANONICAL_JOINT_NAMES)}

QUAT_NORM_TOLERANCE = 1e-6


def _float_tuple(values, length: int, label: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if len(out) != length:
        raise ValueError(f"{label} must have {length} components, got {len(out)}")
    return out


@dataclass(frozen=True)
class Pose:
    """Rigid pose: position in meters plus quaternion [x, y, z, w]."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "position", _float_tuple(self.position, 3, "position"))
        object.__setattr__(self, "orientation", _float_tuple(self.orientation, 4, "orientation"))

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.position + self.orientation)

    def orientation_norm(self) -> float:
        return quat_norm(self.orientation)


@dataclass(frozen=True)
class Joint:
    name: str
    pose: Pose


@dataclass(frozen=True)
class Hand:
    """One tracked hand: wrist pose plus the full joint skeleton."""

    id: str
    handedness: str
    pose: Pose
    joints: tuple[Joint, ...]

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))

    def joint(self, name: str) -> Joint | None:
        for j in self.joints:
            if j.name == name:
                return j
        return None


@dataclass(frozen=True)
class HandFrame:
    timestamp: int
    hands: tuple[Hand, ...]

    def __post_init__(self):
        object.__setattr__(self, "timestamp", int(self.timestamp))
        object.__setattr__(self, "hands", tuple(self.hands))

    def hand(self, handedness: str) -> Hand | None:
        for h in self.hands:
            if h.handedness == handedness:
                return h
        return None


@dataclass(frozen=True)
class ButtonState:
    pressed: bool = False
    touched: bool = False
    value: float = 0.0


@dataclass(frozen=True)
class Handle:
    """One input handle: grip and target-ray poses plus button/axis state."""

    id: str
    handedness: str
    pose: Pose
    target_ray_pose: Pose
    profiles: tuple[str, ...] = ()
    buttons: tuple[ButtonState, ...] = ()
    axes: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        object.__setattr__(self, "buttons", tuple(self.buttons))
        object.__setattr__(self, "axes", tuple(float(a) for a in self.axes))


@dataclass(frozen=True)
class HandleFrame:
    timestamp: int
    handles: tuple[Handle, ...]

    def __post_init__(self):
        object.__setattr__(self, "timestamp", int(self.timestamp))
        object.__setattr__(self, "handles", tuple(self.handles))

    def handle(self, handedness: str) -> Handle | None:
        for h in self.handles:
            if h.handedness == handedness:
                return h
        return None


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of schema validation: violations are errors, warnings are advisory."""

    violations: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


class _ReportBuilder:
    def __init__(self):
        self.violations: list[str] = []
        self.warnings: list[str] = []

    def violation(self, message: str) -> None:
        self.violations.append(message)

    def warning(self, message: str) -> None:
        self.warnings.append(message)

    def build(self) -> ValidationReport:
        return ValidationReport(tuple(self.violations), tuple(self.warnings))


def _check_pose(report: _ReportBuilder, pose: Pose, label: str) -> None:
    if not all(math.isfinite(v) for v in pose.position):
        report.violation(f"{label}: non-finite position {pose.position}")
    norm = pose.orientation_norm()
    if not math.isfinite(norm) or abs(norm - 1.0) > QUAT_NORM_TOLERANCE:
        report.violation(f"{label}: non-unit quaternion (norm {norm:.6g})")


def _check_handedness(report: _ReportBuilder, seen: set, handedness: str, label: str) -> None:
    if handedness not in HANDEDNESS_VALUES:
        report.violation(f"{label}: unknown handedness {handedness!r}")
    elif handedness in seen:
        report.violation(f"{label}: duplicate handedness {handedness!r}")
    else:
        seen.add(handedness)


def validate_hand_frame(frame: HandFrame) -> ValidationReport:
    """Report every schema violation in a gesture frame.

    Checks joint count and canonical order, quaternion norms, finite
    positions, duplicate handedness, and that the hand pose matches the
    Wrist joint (divergence is a warning, not an error).
    """
    report = _ReportBuilder()
    seen: set[str] = set()
    for i, hand in enumerate(frame.hands):
        label = f"hand {i} ({hand.id!r})"
        _check_handedness(report, seen, hand.handedness, label)
        _check_pose(report, hand.pose, f"{label} pose")
        if len(hand.joints) != JOINT_COUNT:
            report.violation(f"{label}: joints length {len(hand.joints)} != {JOINT_COUNT}")
        names = [j.name for j in hand.joints]
        for name in names:
            if name not in JOINT_INDEX:
                report.violation(f"{label}: unknown joint name {name!r}")
        known = [n for n in names if n in JOINT_INDEX]
        if len(set(known)) != len(known):
            report.violation(f"{label}: duplicate joint names")
        elif known != sorted(known, key=JOINT_INDEX.__getitem__):
            report.violation(f"{label}: joints out of canonical order")
        for j in hand.joints:
            _check_pose(report, j.pose, f"{label} joint {j.name!r}")
        wrist = hand.joint("Wrist")
        if wrist is not None and (
            wrist.pose.position != hand.pose.position
            or wrist.pose.orientation != hand.pose.orientation
        ):
            report.warning(f"{label}: hand pose diverges from Wrist joint pose")
    return report.build()


def validate_handle_frame(frame: HandleFrame) -> ValidationReport:
    """Report every schema violation in a handle frame.

    Checks button value ranges, axis ranges, pose sanity, and handedness.
    A pressed button with value 0 and an empty profiles list are warnings.
    """
    report = _ReportBuilder()
    seen: set[str] = set()
    for i, handle in enumerate(frame.handles):
        label = f"handle {i} ({handle.id!r})"
        _check_handedness(report, seen, handle.handedness, label)
        _check_pose(report, handle.pose, f"{label} pose")
        _check_pose(report, handle.target_ray_pose, f"{label} targetRayPose")
        if not handle.profiles:
            report.warning(f"{label}: empty profiles list")
        for b, button in enumerate(handle.buttons):
            if not (0.0 <= button.value <= 1.0) or not math.isfinite(button.value):
                report.violation(f"{label} button {b}: value {button.value} out of [0, 1]")
            elif button.pressed and button.value == 0.0:
                report.warning(f"{label} button {b}: pressed with value 0.0")
        for a, value in enumerate(handle.axes):
            if not (-1.0 <= value <= 1.0) or not math.isfinite(value):
                report.violation(f"{label} axis {a}: value {value} out of [-1, 1]")
    return report.build()

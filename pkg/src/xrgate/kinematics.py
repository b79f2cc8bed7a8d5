"""Serial-chain forward kinematics and damped-least-squares IK.

Chains are revolute-only: each joint contributes a fixed parent-relative
transform followed by a rotation of q_i about its local axis; a tool offset
closes the chain. The solver iterates dq = J^T (J J^T + lambda^2 I)^-1 e
with joint-limit clamping each step, which stays bounded near singularities
and settles on a least-squares pose for unreachable targets.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .model import Pose
from .rotation import (
    axis_angle_matrix,
    matrix_to_quat,
    quat_to_matrix,
    rotvec_between_matrices,
)

AXIS_NORM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ChainJoint:
    """Revolute joint: fixed transform from parent, local axis, limits."""

    name: str
    origin: Pose
    axis: tuple[float, float, float]
    limits: tuple[float, float]

    def __post_init__(self):
        axis = tuple(float(a) for a in self.axis)
        norm = math.sqrt(sum(a * a for a in axis))
        if abs(norm - 1.0) > AXIS_NORM_TOLERANCE:
            raise ValueError(f"joint {self.name!r}: axis norm {norm} is not 1")
        object.__setattr__(self, "axis", axis)
        lo, hi = (float(self.limits[0]), float(self.limits[1]))
        if not lo < hi:
            raise ValueError(f"joint {self.name!r}: limits must satisfy min < max")
        object.__setattr__(self, "limits", (lo, hi))


@dataclass(frozen=True)
class KinematicChain:
    name: str
    joints: tuple[ChainJoint, ...]
    tool_offset: Pose = field(default_factory=Pose.identity)
    home: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        home = tuple(float(v) for v in self.home) or (0.0,) * len(self.joints)
        if len(home) != len(self.joints):
            raise ValueError("home configuration length must match joint count")
        object.__setattr__(self, "home", home)

    @property
    def dof(self) -> int:
        return len(self.joints)

    def lower_limits(self) -> np.ndarray:
        return np.array([j.limits[0] for j in self.joints])

    def upper_limits(self) -> np.ndarray:
        return np.array([j.limits[1] for j in self.joints])

    def clamp(self, q: Sequence[float]) -> np.ndarray:
        return np.clip(np.asarray(q, dtype=float), self.lower_limits(), self.upper_limits())

    @classmethod
    def from_dict(cls, data: dict) -> "KinematicChain":
        joints = tuple(
            ChainJoint(
                name=j["name"],
                origin=Pose(tuple(j.get("origin", {}).get("position", (0, 0, 0))),
                            tuple(j.get("origin", {}).get("orientation", (0, 0, 0, 1)))),
                axis=tuple(j["axis"]),
                limits=tuple(j["limits"]),
            )
            for j in data["joints"]
        )
        tool = data.get("tool_offset", {})
        return cls(
            name=data.get("name", "chain"),
            joints=joints,
            tool_offset=Pose(tuple(tool.get("position", (0, 0, 0))),
                             tuple(tool.get("orientation", (0, 0, 0, 1)))),
            home=tuple(data.get("home", ())),
        )

    @classmethod
    def load(cls, path: str | Path) -> "KinematicChain":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def load_bundled_chain(name: str) -> KinematicChain:
    """Load one of the chain fixtures shipped with the package."""
    text = resources.files("xrgate").joinpath(f"chains/{name}.json").read_text("utf-8")
    return KinematicChain.from_dict(json.loads(text))


def _pose_matrix(pose: Pose) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = quat_to_matrix(pose.orientation)
    m[:3, 3] = pose.position
    return m


def _check_dof(chain: KinematicChain, q: Sequence[float]) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.dof,):
        raise ValueError(f"expected {chain.dof} joint values, got shape {q.shape}")
    return q


def _frames(chain: KinematicChain, q: np.ndarray):
    """World transform after each joint, plus joint origins and axes."""
    t = np.eye(4)
    origins = np.empty((chain.dof, 3))
    axes = np.empty((chain.dof, 3))
    for i, joint in enumerate(chain.joints):
        t = t @ _pose_matrix(joint.origin)
        origins[i] = t[:3, 3]
        axes[i] = t[:3, :3] @ joint.axis
        rot = np.eye(4)
        rot[:3, :3] = axis_angle_matrix(joint.axis, q[i])
        t = t @ rot
    return t @ _pose_matrix(chain.tool_offset), origins, axes


def fk_matrix(chain: KinematicChain, q: Sequence[float]) -> np.ndarray:
    tip, _, _ = _frames(chain, _check_dof(chain, q))
    return tip


def forward_kinematics(chain: KinematicChain, q: Sequence[float]) -> Pose:
    """End-effector pose in the chain base frame for joint values q."""
    tip = fk_matrix(chain, q)
    return Pose(tuple(tip[:3, 3]), matrix_to_quat(tip[:3, :3]))


def jacobian(chain: KinematicChain, q: Sequence[float]) -> np.ndarray:
    """Geometric Jacobian (6 x dof): linear velocity rows then angular."""
    q = _check_dof(chain, q)
    tip, origins, axes = _frames(chain, q)
    jac = np.zeros((6, chain.dof))
    tip_pos = tip[:3, 3]
    for i in range(chain.dof):
        jac[:3, i] = np.cross(axes[i], tip_pos - origins[i])
        jac[3:, i] = axes[i]
    return jac


@dataclass(frozen=True)
class IkSettings:
    damping: float = 0.1
    max_iterations: int = 50
    pos_tolerance: float = 1e-4
    rot_tolerance: float = 1e-3
    orientation_weight: float = 0.5
    # Per-iteration error clamps keep early steps sane when seeding far away.
    max_pos_error: float = 0.2
    max_rot_error: float = 0.5

    def __post_init__(self):
        if self.damping <= 0.0:
            raise ValueError("damping must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.pos_tolerance <= 0.0 or self.rot_tolerance <= 0.0:
            raise ValueError("tolerances must be > 0")

    def to_dict(self) -> dict:
        return {
            "damping": self.damping,
            "max_iterations": self.max_iterations,
            "pos_tolerance": self.pos_tolerance,
            "rot_tolerance": self.rot_tolerance,
            "orientation_weight": self.orientation_weight,
            "max_pos_error": self.max_pos_error,
            "max_rot_error": self.max_rot_error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IkSettings":
        return cls(
            damping=float(data.get("damping", 0.1)),
            max_iterations=int(data.get("max_iterations", 50)),
            pos_tolerance=float(data.get("pos_tolerance", 1e-4)),
            rot_tolerance=float(data.get("rot_tolerance", 1e-3)),
            orientation_weight=float(data.get("orientation_weight", 0.5)),
            max_pos_error=float(data.get("max_pos_error", 0.2)),
            max_rot_error=float(data.get("max_rot_error", 0.5)),
        )


class IkResult(NamedTuple):
    angles: np.ndarray
    converged: bool
    pos_residual: float
    rot_residual: float
    iterations: int


# While the tip is farther than 10x the position tolerance from the target,
# orientation error is down-weighted by this factor. Position-first descent
# avoids the wrist-flip local minima that full-pose DLS falls into when
# seeded far away; orientation engages once the tip is essentially placed.
_POSITION_FIRST_SCALE = 0.02


def _clamped(vec: np.ndarray, cap: float) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm > cap > 0.0:
        return vec * (cap / norm)
    return vec


class _BestSolution:
    """Track the best iterate: position within tolerance first, then the
    smallest orientation error; otherwise the smallest position error."""

    def __init__(self, pos_tolerance: float):
        self.pos_tolerance = pos_tolerance
        self.q: Optional[np.ndarray] = None
        self.pos = math.inf
        self.rot = math.inf

    def offer(self, q: np.ndarray, pos: float, rot: float) -> None:
        if self.q is None:
            self.q, self.pos, self.rot = q.copy(), pos, rot
            return
        meets, best_meets = pos <= self.pos_tolerance, self.pos <= self.pos_tolerance
        better = (
            (meets and not best_meets)
            or (meets and best_meets and rot < self.rot)
            or (not meets and not best_meets and pos < self.pos)
        )
        if better:
            self.q, self.pos, self.rot = q.copy(), pos, rot


def solve_ik(
    chain: KinematicChain,
    target: Pose,
    seed: Sequence[float],
    settings: IkSettings = IkSettings(),
) -> IkResult:
    """Iterate damped least squares from seed toward the target pose.

    Deterministic for fixed inputs. Non-convergence is reported in the
    result, never raised: the motion filter downstream guards against wild
    solutions, and an unreachable target settles at the workspace boundary.
    Returned angles always respect the joint limits.
    """
    q = chain.clamp(_check_dof(chain, seed))
    target_pos = np.asarray(target.position, dtype=float)
    target_rot = quat_to_matrix(target.orientation)
    full_weight = settings.orientation_weight
    near_radius = 10.0 * settings.pos_tolerance
    damping_term = (settings.damping ** 2) * np.eye(6)
    best = _BestSolution(settings.pos_tolerance)

    iterations = 0
    for iterations in range(1, settings.max_iterations + 1):
        tip, origins, axes = _frames(chain, q)
        pos_err = target_pos - tip[:3, 3]
        rot_err = rotvec_between_matrices(tip[:3, :3], target_rot)
        pos_norm = float(np.linalg.norm(pos_err))
        rot_norm = float(np.linalg.norm(rot_err))
        best.offer(q, pos_norm, rot_norm)
        if pos_norm <= settings.pos_tolerance and rot_norm <= settings.rot_tolerance:
            return IkResult(q.copy(), True, pos_norm, rot_norm, iterations)

        weight = full_weight if pos_norm <= near_radius else full_weight * _POSITION_FIRST_SCALE
        err = np.concatenate(
            [
                _clamped(pos_err, settings.max_pos_error),
                weight * _clamped(rot_err, settings.max_rot_error),
            ]
        )
        jac = np.empty((6, chain.dof))
        tip_pos = tip[:3, 3]
        for i in range(chain.dof):
            jac[:3, i] = np.cross(axes[i], tip_pos - origins[i])
            jac[3:, i] = axes[i] * weight
        gram = jac @ jac.T + damping_term
        try:
            dq = jac.T @ np.linalg.solve(gram, err)
        except np.linalg.LinAlgError:
            dq = jac.T @ (np.linalg.lstsq(gram, err, rcond=None)[0])
        q = chain.clamp(q + dq)

    tip, _, _ = _frames(chain, q)
    pos_norm = float(np.linalg.norm(target_pos - tip[:3, 3]))
    rot_norm = float(np.linalg.norm(rotvec_between_matrices(tip[:3, :3], target_rot)))
    best.offer(q, pos_norm, rot_norm)
    converged = best.pos <= settings.pos_tolerance and best.rot <= settings.rot_tolerance
    return IkResult(best.q, converged, best.pos, best.rot, iterations)


class JumpScenario(NamedTuple):
    targets: list[Pose]
    raw_angles: list[np.ndarray]
    ik_angles: list[np.ndarray]

    def max_ik_steps(self) -> list[float]:
        return [
            float(np.max(np.abs(b - a)))
            for a, b in zip(self.ik_angles, self.ik_angles[1:])
        ]


def run_target_path(
    chain: KinematicChain,
    targets: Sequence[Pose],
    settings: IkSettings = IkSettings(),
) -> JumpScenario:
    """Solve IK along a target path the way the pipeline does.

    The control route seeds each solve from the previous solution; the raw
    route re-solves from home every frame. Used by tests and fixtures to
    demonstrate joint-space jumps near singularities.
    """
    raw_route: list[np.ndarray] = []
    ik_route: list[np.ndarray] = []
    seed = np.asarray(chain.home, dtype=float)
    for target in targets:
        raw = solve_ik(chain, target, chain.home, settings)
        ctrl = solve_ik(chain, target, seed, settings)
        raw_route.append(raw.angles)
        ik_route.append(ctrl.angles)
        seed = ctrl.angles
    return JumpScenario(list(targets), raw_route, ik_route)


def near_singularity_path(points: int = 40) -> list[Pose]:
    """Straight-line sweep passing 4 cm from the base axis of the arm fixture.

    The target azimuth flips by ~pi within a few frames at closest approach,
    forcing the base joint of any tracking solution to jump.
    """
    start = np.array([0.35, -0.04, 0.55])
    end = np.array([-0.35, -0.04, 0.55])
    return [
        Pose(tuple(start + (end - start) * (i / (points - 1))), (0.0, 0.0, 0.0, 1.0))
        for i in range(points)
    ]


def smooth_control_path(points: int = 40) -> list[Pose]:
    """Gentle arc far from any singularity of the arm fixture; 5 mm steps."""
    radius = 0.45
    poses = []
    for i in range(points):
        angle = -0.4 + 0.8 * i / (points - 1)
        poses.append(
            Pose(
                (radius * math.cos(angle), radius * math.sin(angle), 0.55),
                (0.0, 0.0, 0.0, 1.0),
            )
        )
    return poses

"""Four-layer jitter/jump gate deciding which frames become robot commands.

Layers 1 and 2 are deadbands on end-effector travel since the last accepted
frame (two thresholds applied to the same distance, kept separate because
they are configured at different pipeline stages). Layer 3 bounds the
per-joint step of the raw joint estimate; layer 4 bounds the per-joint step
of the IK control solution. A frame is executable only if all four hold.

References compare against the last *accepted* frame, not the previous raw
frame: per-raw-frame references would make slow motion permanently
sub-threshold, while last-accepted gives classic deadband behavior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence


@dataclass(frozen=True)
class FilterConfig:
    """Gate thresholds. Distances in meters, joint steps in radians.

    Defaults: 2 mm deadband (safely above 1 mm position quantization) and
    0.15 rad/frame joint step (about 9 rad/s at 60 Hz, beyond human wrist
    speed but well below an IK branch flip).
    """

    min_move: float = 0.002
    ik_min_move: float = 0.002
    max_raw_jump: float = 0.15
    max_ik_jump: float = 0.15

    def __post_init__(self):
        for name in ("min_move", "ik_min_move", "max_raw_jump", "max_ik_jump"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")

    def to_dict(self) -> dict:
        return {
            "min_move": self.min_move,
            "ik_min_move": self.ik_min_move,
            "max_raw_jump": self.max_raw_jump,
            "max_ik_jump": self.max_ik_jump,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FilterConfig":
        return cls(**{k: float(data[k]) for k in
                      ("min_move", "ik_min_move", "max_raw_jump", "max_ik_jump")})


@dataclass(frozen=True)
class FilterState:
    """Last-accepted references: end position, raw angles, IK angles."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    raw_angles: tuple[float, ...] = ()
    ik_angles: tuple[float, ...] = ()
    initialized: bool = False

    @staticmethod
    def empty() -> "FilterState":
        return FilterState()


@dataclass(frozen=True)
class FilterDecision:
    """Per-frame verdict with the measured quantities behind it.

    ``executable`` is exactly the conjunction of ``layers``. ``reason`` is
    None for a normal evaluation, "bootstrap" for the first frame, and
    "non-finite" when any input component is NaN or infinite.
    """

    executable: bool
    distance: Optional[float]
    raw_step: Optional[float]
    ik_step: Optional[float]
    layers: tuple[bool, bool, bool, bool]
    reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "executable": self.executable,
            "distance": self.distance,
            "raw_step": self.raw_step,
            "ik_step": self.ik_step,
            "layers": list(self.layers),
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FilterDecision":
        return cls(
            executable=bool(data["executable"]),
            distance=data["distance"],
            raw_step=data["raw_step"],
            ik_step=data["ik_step"],
            layers=tuple(bool(b) for b in data["layers"]),
            reason=data.get("reason"),
        )


class StepResult(NamedTuple):
    decision: FilterDecision
    state: FilterState
    command: Optional[tuple[float, ...]]


def _as_floats(values: Sequence[float]) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


def _all_finite(*groups) -> bool:
    return all(math.isfinite(v) for group in groups for v in group)


def evaluate(
    position: Sequence[float],
    raw_angles: Sequence[float],
    ik_angles: Sequence[float],
    state: FilterState,
    config: FilterConfig,
) -> FilterDecision:
    """Run the four-layer gate against the last-accepted references.

    Pure: neither state nor inputs are mutated. Raises ValueError on an
    uninitialized state or a joint-count mismatch; non-finite inputs yield
    a non-executable decision rather than an error.
    """
    if not state.initialized:
        raise ValueError("filter state is not initialized; use step() for the first frame")
    position = _as_floats(position)
    raw_angles = _as_floats(raw_angles)
    ik_angles = _as_floats(ik_angles)
    if len(position) != 3:
        raise ValueError(f"position must have 3 components, got {len(position)}")
    m = len(state.raw_angles)
    if len(raw_angles) != m or len(ik_angles) != m:
        raise ValueError(
            f"expected {m} joint angles, got raw={len(raw_angles)} ik={len(ik_angles)}"
        )

    if not _all_finite(position, raw_angles, ik_angles):
        return FilterDecision(
            executable=False,
            distance=None,
            raw_step=None,
            ik_step=None,
            layers=(False, False, False, False),
            reason="non-finite",
        )

    distance = math.dist(position, state.position)
    raw_step = max((abs(a - b) for a, b in zip(raw_angles, state.raw_angles)), default=0.0)
    ik_step = max((abs(a - b) for a, b in zip(ik_angles, state.ik_angles)), default=0.0)

    layers = (
        distance >= config.min_move,
        distance >= config.ik_min_move,
        raw_step <= config.max_raw_jump,
        ik_step <= config.max_ik_jump,
    )
    return FilterDecision(
        executable=all(layers),
        distance=distance,
        raw_step=raw_step,
        ik_step=ik_step,
        layers=layers,
    )


def step(
    position: Sequence[float],
    raw_angles: Sequence[float],
    ik_angles: Sequence[float],
    state: FilterState,
    config: FilterConfig,
) -> StepResult:
    """Advance the filter by one frame.

    The first frame only seeds the references and emits nothing. Afterwards
    an executable frame emits its IK angles and becomes the new reference;
    a rejected frame emits nothing and leaves the references untouched.
    """
    position = _as_floats(position)
    raw_angles = _as_floats(raw_angles)
    ik_angles = _as_floats(ik_angles)

    if not state.initialized:
        if not _all_finite(position, raw_angles, ik_angles):
            decision = FilterDecision(
                executable=False,
                distance=None,
                raw_step=None,
                ik_step=None,
                layers=(False, False, False, False),
                reason="non-finite",
            )
            return StepResult(decision, state, None)
        decision = FilterDecision(
            executable=False,
            distance=None,
            raw_step=None,
            ik_step=None,
            layers=(False, False, False, False),
            reason="bootstrap",
        )
        new_state = FilterState(
            position=tuple(position),  # type: ignore[arg-type]
            raw_angles=raw_angles,
            ik_angles=ik_angles,
            initialized=True,
        )
        return StepResult(decision, new_state, None)

    decision = evaluate(position, raw_angles, ik_angles, state, config)
    if not decision.executable:
        return StepResult(decision, state, None)
    new_state = FilterState(
        position=tuple(position),  # type: ignore[arg-type]
        raw_angles=raw_angles,
        ik_angles=ik_angles,
        initialized=True,
    )
    return StepResult(decision, new_state, ik_angles)

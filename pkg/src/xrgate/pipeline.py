"""Per-stream processing core: normalize, quantize, solve IK, gate.

One pipeline owns one stream's filter state and IK seed. The same code path
serves live ingestion and offline recomputation from recorded raw frames,
which is what makes episodes replayable bit-for-bit.

Two IK routes run per frame. The raw route re-solves from the chain's home
configuration, so it depends only on the current frame and tracks jumps in
the raw data. The control route seeds from the last accepted solution, so
it tracks the commanded trajectory and exposes solver branch flips. The
four-layer gate sees both.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .kinematics import IkSettings, KinematicChain, solve_ik
from .model import Handle, HandFrame, HandleFrame, Pose
from .motion_filter import FilterConfig, FilterDecision, FilterState, step
from .rotation import quat_multiply, quat_normalize
from .transforms import BasisConvention, QuantizationPolicy, normalize_to_world, quantize_position
from .wire.binary import DecodedHand
from .wire.json_codec import hand_frame_to_dict, hand_from_dict, handle_frame_to_dict, handle_from_dict

WRIST_FUNCTIONS = ("roll_pos", "roll_neg", "yaw_pos", "yaw_neg", "pitch_pos", "pitch_neg")


@dataclass(frozen=True)
class ButtonMapping:
    """Binds handle button indices to wrist fine-tuning and the gripper.

    Defaults follow the common XR layout: 0 trigger, 1 squeeze, 2 touchpad,
    3 thumbstick, 4/5 face buttons, 6 menu.
    """

    gripper: int = 0
    roll_pos: int = 4
    roll_neg: int = 5
    yaw_pos: int = 2
    yaw_neg: int = 3
    pitch_pos: int = 6
    pitch_neg: int = 1
    step: float = 0.01

    def to_dict(self) -> dict:
        return {
            "gripper": self.gripper,
            "roll_pos": self.roll_pos,
            "roll_neg": self.roll_neg,
            "yaw_pos": self.yaw_pos,
            "yaw_neg": self.yaw_neg,
            "pitch_pos": self.pitch_pos,
            "pitch_neg": self.pitch_neg,
            "step": self.step,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ButtonMapping":
        defaults = cls()
        return cls(
            gripper=int(data.get("gripper", defaults.gripper)),
            roll_pos=int(data.get("roll_pos", defaults.roll_pos)),
            roll_neg=int(data.get("roll_neg", defaults.roll_neg)),
            yaw_pos=int(data.get("yaw_pos", defaults.yaw_pos)),
            yaw_neg=int(data.get("yaw_neg", defaults.yaw_neg)),
            pitch_pos=int(data.get("pitch_pos", defaults.pitch_pos)),
            pitch_neg=int(data.get("pitch_neg", defaults.pitch_neg)),
            step=float(data.get("step", defaults.step)),
        )


class WristAdjust(NamedTuple):
    roll: float
    yaw: float
    pitch: float
    gripper: float


def map_handle_buttons(
    handle: Handle, mapping: ButtonMapping
) -> tuple[WristAdjust, tuple[str, ...]]:
    """Pure mapping from button state to per-frame wrist deltas and gripper.

    Deltas are +-step radians per frame while the bound button is pressed.
    The gripper passes through the trigger's analog value. Functions bound
    to an absent button index come back in ``missing`` so the caller can
    warn once and treat them as inert.
    """
    missing: list[str] = []

    def pressed(index: int, name: str) -> bool:
        if index < 0 or index >= len(handle.buttons):
            missing.append(name)
            return False
        return handle.buttons[index].pressed

    deltas = {}
    for axis in ("roll", "yaw", "pitch"):
        pos = pressed(getattr(mapping, f"{axis}_pos"), f"{axis}_pos")
        neg = pressed(getattr(mapping, f"{axis}_neg"), f"{axis}_neg")
        deltas[axis] = mapping.step * (float(pos) - float(neg))

    if mapping.gripper < 0 or mapping.gripper >= len(handle.buttons):
        missing.append("gripper")
        gripper = 0.0
    else:
        gripper = min(max(handle.buttons[mapping.gripper].value, 0.0), 1.0)
    return WristAdjust(deltas["roll"], deltas["yaw"], deltas["pitch"], gripper), tuple(missing)


def _yaw_pitch_roll_quat(yaw: float, pitch: float, roll: float):
    half = 0.5
    qz = (0.0, 0.0, math.sin(yaw * half), math.cos(yaw * half))
    qy = (0.0, math.sin(pitch * half), 0.0, math.cos(pitch * half))
    qx = (math.sin(roll * half), 0.0, 0.0, math.cos(roll * half))
    return quat_multiply(quat_multiply(qz, qy), qx)


class PipelineResult(NamedTuple):
    source: str
    timestamp_ms: int
    arrival_ms: int
    raw: dict
    world_pose: Pose
    raw_angles: tuple[float, ...]
    ik_angles: tuple[float, ...]
    decision: FilterDecision
    emitted: Optional[tuple[float, ...]]
    command: Optional[dict]


@dataclass
class PipelineConfig:
    source: str
    convention: BasisConvention
    filter_config: FilterConfig
    ik_settings: IkSettings
    quantization: Optional[QuantizationPolicy]
    handedness: str = "right"
    button_mapping: ButtonMapping = ButtonMapping()


class StreamPipeline:
    """Owner of one stream's filter state, IK seed, and wrist offsets."""

    def __init__(self, config: PipelineConfig, chain: KinematicChain):
        self.config = config
        self.chain = chain
        self.filter_state = FilterState.empty()
        self.frames_processed = 0
        self.missing_buttons_warned: set[str] = set()
        self._wrist_offset = [0.0, 0.0, 0.0]  # roll, yaw, pitch accumulators

    def reset(self) -> None:
        self.filter_state = FilterState.empty()
        self.frames_processed = 0
        self._wrist_offset = [0.0, 0.0, 0.0]

    # -- live entry points ----------------------------------------------------

    def process_gesture(self, decoded: DecodedHand, arrival_ms: int) -> Optional[PipelineResult]:
        hand = decoded.hand
        if hand.handedness != self.config.handedness:
            return None
        timestamp_ms = decoded.timestamp_us // 1000
        frame = HandFrame(timestamp=timestamp_ms, hands=(hand,))
        raw = {
            "kind": "gesture",
            "seq": decoded.seq,
            "timestamp_us": decoded.timestamp_us,
            "frame": hand_frame_to_dict(frame),
        }
        return self._run(hand.pose, None, raw, timestamp_ms, arrival_ms)

    def process_handle(self, frame: HandleFrame, arrival_ms: int) -> Optional[PipelineResult]:
        handle = frame.handle(self.config.handedness)
        if handle is None:
            return None
        raw = {"kind": "handle", "frame": handle_frame_to_dict(frame)}
        return self._run(handle.pose, handle, raw, frame.timestamp, arrival_ms)

    def process_raw(self, raw: dict, arrival_ms: int) -> Optional[PipelineResult]:
        """Offline entry: re-run the pipeline from a recorded raw dict."""
        problems: list[str] = []
        if raw.get("kind") == "gesture":
            data = raw["frame"]["data"]
            hand = hand_from_dict(data[0], "hand 0", problems) if data else None
            if hand is None or problems or hand.handedness != self.config.handedness:
                return None
            return self._run(hand.pose, None, raw, int(raw["frame"]["timestamp"]), arrival_ms)
        if raw.get("kind") == "handle":
            entries = raw["frame"]["data"]
            handle = None
            for entry in entries:
                candidate = handle_from_dict(entry, "handle", problems)
                if candidate is not None and candidate.handedness == self.config.handedness:
                    handle = candidate
                    break
            if handle is None or problems:
                return None
            return self._run(
                handle.pose, handle, raw, int(raw["frame"]["timestamp"]), arrival_ms
            )
        return None

    # -- core -------------------------------------------------------------------

    def _run(
        self,
        device_pose: Pose,
        handle: Optional[Handle],
        raw: dict,
        timestamp_ms: int,
        arrival_ms: int,
    ) -> PipelineResult:
        world = normalize_to_world(device_pose, self.config.convention)
        if self.config.quantization is not None:
            world = quantize_position(world, self.config.quantization)

        gripper: Optional[float] = None
        target = world
        if handle is not None:
            adjust, missing = map_handle_buttons(handle, self.config.button_mapping)
            for name in missing:
                self.missing_buttons_warned.add(name)
            self._wrist_offset[0] += adjust.roll
            self._wrist_offset[1] += adjust.yaw
            self._wrist_offset[2] += adjust.pitch
            gripper = adjust.gripper
            offset_quat = _yaw_pitch_roll_quat(
                self._wrist_offset[1], self._wrist_offset[2], self._wrist_offset[0]
            )
            target = Pose(
                world.position,
                quat_normalize(quat_multiply(offset_quat, world.orientation)),
            )

        raw_solution = solve_ik(self.chain, target, self.chain.home, self.config.ik_settings)
        seed = (
            self.filter_state.ik_angles
            if self.filter_state.initialized
            else self.chain.home
        )
        control_solution = solve_ik(self.chain, target, seed, self.config.ik_settings)

        decision, self.filter_state, command_angles = step(
            target.position,
            tuple(raw_solution.angles),
            tuple(control_solution.angles),
            self.filter_state,
            self.config.filter_config,
        )
        self.frames_processed += 1

        command = None
        if command_angles is not None:
            command = {
                "source": self.config.source,
                "timestamp_ms": timestamp_ms,
                "angles": list(command_angles),
            }
            if gripper is not None:
                command["gripper"] = gripper

        return PipelineResult(
            source=self.config.source,
            timestamp_ms=timestamp_ms,
            arrival_ms=arrival_ms,
            raw=raw,
            world_pose=target,
            raw_angles=tuple(float(v) for v in raw_solution.angles),
            ik_angles=tuple(float(v) for v in control_solution.angles),
            decision=decision,
            emitted=command_angles,
            command=command,
        )


def recompute_records(records, pipeline: StreamPipeline) -> list[PipelineResult]:
    """Re-run recorded raw frames of the pipeline's stream through it."""
    results = []
    for record in records:
        if record.source != pipeline.config.source:
            continue
        result = pipeline.process_raw(record.raw, record.arrival_ms)
        if result is not None:
            results.append(result)
    return results

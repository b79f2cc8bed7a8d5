"""JSON codecs for the gesture and handle frame schemas.

Serialization is deterministic: keys are emitted in a fixed order with
compact separators, so identical frames produce identical bytes. Parsing is
shape-strict (required fields, array lengths) but value-lenient: semantic
problems like a non-unit quaternion or an out-of-range axis are left to the
model validators.
"""
from __future__ import annotations

import json
from typing import Any

from ..model import (
    ButtonState,
    Hand,
    HandFrame,
    Handle,
    HandleFrame,
    Joint,
    Pose,
)


class FrameParseError(ValueError):
    """Document rejected; ``problems`` lists every independent reason."""

    def __init__(self, problems):
        self.problems = tuple(problems)
        super().__init__("; ".join(self.problems))


def _dump(document: dict) -> str:
    return json.dumps(document, separators=(",", ":"))


def _require(obj: dict, key: str, label: str, problems: list[str]):
    if not isinstance(obj, dict) or key not in obj:
        problems.append(f"{label}: missing {key}")
        return None
    return obj[key]


def _parse_vector(value: Any, length: int, label: str, problems: list[str]):
    if not isinstance(value, (list, tuple)) or len(value) != length:
        problems.append(f"{label}: expected {length} numbers")
        return None
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            problems.append(f"{label}: non-numeric component {v!r}")
            return None
        out.append(float(v))
    return tuple(out)


def _parse_pose(value: Any, label: str, problems: list[str]) -> Pose | None:
    if not isinstance(value, dict):
        problems.append(f"{label}: expected object")
        return None
    position = _parse_vector(value.get("position"), 3, f"{label}.position", problems)
    orientation = _parse_vector(value.get("orientation"), 4, f"{label}.orientation", problems)
    if position is None or orientation is None:
        return None
    return Pose(position, orientation)


def _parse_timestamp(document: dict, problems: list[str]) -> int:
    ts = _require(document, "timestamp", "frame", problems)
    if ts is None:
        return 0
    if isinstance(ts, bool) or not isinstance(ts, (int, float)) or ts != int(ts):
        problems.append(f"frame: timestamp must be an integer, got {ts!r}")
        return 0
    return int(ts)


def _parse_root(text: str, problems: list[str]) -> tuple[int, list]:
    try:
        document = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FrameParseError([f"malformed JSON: {exc}"]) from exc
    if not isinstance(document, dict):
        raise FrameParseError(["frame: root must be an object"])
    timestamp = _parse_timestamp(document, problems)
    data = _require(document, "data", "frame", problems)
    if data is None:
        return timestamp, []
    if not isinstance(data, list):
        problems.append("frame: data must be an array")
        return timestamp, []
    return timestamp, data


def pose_to_dict(pose: Pose) -> dict:
    return {"position": list(pose.position), "orientation": list(pose.orientation)}


# -- gesture frames ---------------------------------------------------------

def hand_to_dict(hand: Hand) -> dict:
    return {
        "id": hand.id,
        "handedness": hand.handedness,
        "pose": pose_to_dict(hand.pose),
        "joints": [
            {
                "name": j.name,
                "position": list(j.pose.position),
                "orientation": list(j.pose.orientation),
            }
            for j in hand.joints
        ],
    }


def hand_frame_to_dict(frame: HandFrame) -> dict:
    return {"timestamp": frame.timestamp, "data": [hand_to_dict(h) for h in frame.hands]}


def serialize_hand_frame_json(frame: HandFrame) -> str:
    return _dump(hand_frame_to_dict(frame))


def hand_from_dict(entry: Any, label: str, problems: list[str]) -> Hand | None:
    if not isinstance(entry, dict):
        problems.append(f"{label}: expected object")
        return None
    handedness = _require(entry, "handedness", label, problems)
    pose = _parse_pose(_require(entry, "pose", label, problems), f"{label}.pose", problems)
    joints_raw = entry.get("joints", [])
    joints: list[Joint] = []
    if not isinstance(joints_raw, list):
        problems.append(f"{label}: joints must be an array")
        joints_raw = []
    for j_index, j_entry in enumerate(joints_raw):
        j_label = f"{label}.joints[{j_index}]"
        if not isinstance(j_entry, dict):
            problems.append(f"{j_label}: expected object")
            continue
        name = j_entry.get("name")
        if not isinstance(name, str):
            problems.append(f"{j_label}: missing name")
            continue
        position = _parse_vector(j_entry.get("position"), 3, f"{j_label}.position", problems)
        orientation = _parse_vector(
            j_entry.get("orientation"), 4, f"{j_label}.orientation", problems
        )
        if position is None or orientation is None:
            continue
        joints.append(Joint(name, Pose(position, orientation)))
    if pose is None or not isinstance(handedness, str):
        return None
    identifier = entry.get("id")
    if not isinstance(identifier, str):
        identifier = handedness
    return Hand(id=identifier, handedness=handedness, pose=pose, joints=tuple(joints))


def parse_hand_frame_json(text: str) -> HandFrame:
    problems: list[str] = []
    timestamp, data = _parse_root(text, problems)
    hands = []
    for index, entry in enumerate(data):
        hand = hand_from_dict(entry, f"hand {index}", problems)
        if hand is not None:
            hands.append(hand)
    if problems:
        raise FrameParseError(problems)
    return HandFrame(timestamp=timestamp, hands=tuple(hands))


# -- handle frames -----------------------------------------------------------

def handle_to_dict(handle: Handle) -> dict:
    return {
        "id": handle.id,
        "handedness": handle.handedness,
        "profiles": list(handle.profiles),
        "buttons": [
            {"pressed": b.pressed, "touched": b.touched, "value": b.value}
            for b in handle.buttons
        ],
        "axes": list(handle.axes),
        "pose": pose_to_dict(handle.pose),
        "targetRayPose": pose_to_dict(handle.target_ray_pose),
    }


def handle_frame_to_dict(frame: HandleFrame) -> dict:
    return {"timestamp": frame.timestamp, "data": [handle_to_dict(h) for h in frame.handles]}


def serialize_handle_frame_json(frame: HandleFrame) -> str:
    return _dump(handle_frame_to_dict(frame))


def handle_from_dict(entry: Any, label: str, problems: list[str]) -> Handle | None:
    if not isinstance(entry, dict):
        problems.append(f"{label}: expected object")
        return None
    handedness = _require(entry, "handedness", label, problems)
    pose = _parse_pose(_require(entry, "pose", label, problems), f"{label}.pose", problems)

    ray = entry.get("targetRayPose")
    ray_pose = _parse_pose(ray, f"{label}.targetRayPose", problems) if ray is not None else pose

    profiles_raw = entry.get("profiles", [])
    profiles: list[str] = []
    if not isinstance(profiles_raw, list):
        problems.append(f"{label}: profiles must be an array")
    else:
        for p in profiles_raw:
            if isinstance(p, str):
                profiles.append(p)
            else:
                problems.append(f"{label}: non-string profile {p!r}")

    buttons_raw = entry.get("buttons", [])
    buttons: list[ButtonState] = []
    if not isinstance(buttons_raw, list):
        problems.append(f"{label}: buttons must be an array")
    else:
        for b_index, b_entry in enumerate(buttons_raw):
            if not isinstance(b_entry, dict):
                problems.append(f"{label}.buttons[{b_index}]: expected object")
                continue
            value = b_entry.get("value", 0.0)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                problems.append(f"{label}.buttons[{b_index}]: non-numeric value {value!r}")
                value = 0.0
            buttons.append(
                ButtonState(
                    pressed=bool(b_entry.get("pressed", False)),
                    touched=bool(b_entry.get("touched", False)),
                    value=float(value),
                )
            )

    axes_raw = entry.get("axes", [])
    axes: list[float] = []
    if not isinstance(axes_raw, list):
        problems.append(f"{label}: axes must be an array")
    else:
        for a_index, a in enumerate(axes_raw):
            if isinstance(a, bool) or not isinstance(a, (int, float)):
                problems.append(f"{label}.axes[{a_index}]: non-numeric value {a!r}")
            else:
                axes.append(float(a))

    if pose is None or ray_pose is None or not isinstance(handedness, str):
        return None
    identifier = entry.get("id")
    if not isinstance(identifier, str):
        identifier = handedness
    return Handle(
        id=identifier,
        handedness=handedness,
        pose=pose,
        target_ray_pose=ray_pose,
        profiles=tuple(profiles),
        buttons=tuple(buttons),
        axes=tuple(axes),
    )


def parse_handle_frame_json(text: str) -> HandleFrame:
    """Parse one handle frame document, rejecting with every missing field."""
    problems: list[str] = []
    timestamp, data = _parse_root(text, problems)
    handles = []
    for index, entry in enumerate(data):
        handle = handle_from_dict(entry, f"handle {index}", problems)
        if handle is not None:
            handles.append(handle)
    if problems:
        raise FrameParseError(problems)
    return HandleFrame(timestamp=timestamp, handles=tuple(handles))

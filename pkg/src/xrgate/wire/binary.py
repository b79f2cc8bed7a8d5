"""Fixed-layout binary codec for the UDP gesture channel.

One datagram carries one hand. Layout, all little-endian:

    offset  size  field
    0       4     magic "MLHP"
    4       1     version (1)
    5       1     handedness (0 left, 1 right)
    6       1     flags (bit 0: tracking valid)
    7       1     reserved (0)
    8       4     uint32 sequence number, monotonic per sender
    12      8     uint64 timestamp, epoch microseconds
    20      28    wrist pose: 7 x float32 (px py pz qx qy qz qw)
    48      728   26 joints x 7 x float32, canonical joint order

Total 776 bytes. The magic/version/length triple makes loss, reordering
and foreign traffic detectable without any negotiation.
"""
from __future__ import annotations

import struct
from typing import NamedTuple

from ..model import CANONICAL_JOINT_NAMES, JOINT_COUNT, Hand, Joint, Pose

MAGIC = b"MLHP"
VERSION = 1
PAYLOAD_SIZE = 776
FLAG_TRACKING_VALID = 0x01

_HEADER = struct.Struct("<4sBBBBIQ")
_FLOATS = struct.Struct("<189f")

_HANDEDNESS_CODE = {"left": 0, "right": 1}
_HANDEDNESS_NAME = {0: "left", 1: "right"}


class PayloadError(ValueError):
    """Datagram rejected; ``reason`` is a stable counter key."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


class DecodedHand(NamedTuple):
    hand: Hand
    seq: int
    timestamp_us: int
    tracking_valid: bool


def encode_hand_payload(
    hand: Hand,
    seq: int,
    timestamp_us: int,
    tracking_valid: bool = True,
) -> bytes:
    """Serialize one schema-valid hand into a 776-byte datagram."""
    if hand.handedness not in _HANDEDNESS_CODE:
        raise PayloadError("bad handedness", repr(hand.handedness))
    if len(hand.joints) != JOINT_COUNT:
        raise PayloadError("bad joint count", f"{len(hand.joints)} != {JOINT_COUNT}")
    by_name = {j.name: j for j in hand.joints}
    if len(by_name) != JOINT_COUNT or set(by_name) != set(CANONICAL_JOINT_NAMES):
        raise PayloadError("bad joint set", "joints must be the 26 canonical names")

    values: list[float] = list(hand.pose.position) + list(hand.pose.orientation)
    for name in CANONICAL_JOINT_NAMES:
        pose = by_name[name].pose
        values.extend(pose.position)
        values.extend(pose.orientation)

    flags = FLAG_TRACKING_VALID if tracking_valid else 0
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        _HANDEDNESS_CODE[hand.handedness],
        flags,
        0,
        seq & 0xFFFFFFFF,
        timestamp_us & 0xFFFFFFFFFFFFFFFF,
    )
    return header + _FLOATS.pack(*values)


def decode_hand_payload(datagram: bytes) -> DecodedHand:
    """Parse a datagram back into a hand, or raise PayloadError.

    Any 776-byte buffer with a valid header decodes without crashing;
    garbage float content surfaces later through schema validation.
    """
    if len(datagram) != PAYLOAD_SIZE:
        raise PayloadError("bad length", f"{len(datagram)} != {PAYLOAD_SIZE}")
    magic, version, handedness_code, flags, _reserved, seq, timestamp_us = _HEADER.unpack_from(
        datagram, 0
    )
    if magic != MAGIC:
        raise PayloadError("bad magic", repr(magic))
    if version != VERSION:
        raise PayloadError("unsupported version", str(version))
    if handedness_code not in _HANDEDNESS_NAME:
        raise PayloadError("bad handedness", str(handedness_code))

    values = _FLOATS.unpack_from(datagram, _HEADER.size)
    handedness = _HANDEDNESS_NAME[handedness_code]
    wrist_pose = Pose(values[0:3], values[3:7])
    joints = []
    for i, name in enumerate(CANONICAL_JOINT_NAMES):
        base = 7 + i * 7
        joints.append(Joint(name, Pose(values[base : base + 3], values[base + 3 : base + 7])))
    hand = Hand(id=handedness, handedness=handedness, pose=wrist_pose, joints=tuple(joints))
    return DecodedHand(hand, seq, timestamp_us, bool(flags & FLAG_TRACKING_VALID))

"""Wire codecs, ingestion servers, and the atomic snapshot writer."""

from .binary import (
    FLAG_TRACKING_VALID,
    MAGIC,
    PAYLOAD_SIZE,
    VERSION,
    DecodedHand,
    PayloadError,
    decode_hand_payload,
    encode_hand_payload,
)
from .json_codec import (
    FrameParseError,
    hand_frame_to_dict,
    hand_to_dict,
    handle_frame_to_dict,
    handle_to_dict,
    parse_hand_frame_json,
    parse_handle_frame_json,
    pose_to_dict,
    serialize_hand_frame_json,
    serialize_handle_frame_json,
)
from .servers import (
    DropOldestQueue,
    GestureEvent,
    HandleEvent,
    HandleSocketServer,
    UdpGestureServer,
    build_tls_context,
)
from .snapshot import SnapshotWriter, snapshot_write

__all__ = [
    "FLAG_TRACKING_VALID",
    "MAGIC",
    "PAYLOAD_SIZE",
    "VERSION",
    "DecodedHand",
    "PayloadError",
    "decode_hand_payload",
    "encode_hand_payload",
    "FrameParseError",
    "hand_frame_to_dict",
    "hand_to_dict",
    "handle_frame_to_dict",
    "handle_to_dict",
    "parse_hand_frame_json",
    "parse_handle_frame_json",
    "pose_to_dict",
    "serialize_hand_frame_json",
    "serialize_handle_frame_json",
    "DropOldestQueue",
    "GestureEvent",
    "HandleEvent",
    "HandleSocketServer",
    "UdpGestureServer",
    "build_tls_context",
    "SnapshotWriter",
    "snapshot_write",
]

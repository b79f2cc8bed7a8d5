import numpy as np
import pytest

from xrgate.model import CANONICAL_JOINT_NAMES, validate_hand_frame, HandFrame
from xrgate.simulator import synthetic_hand
from xrgate.wire.binary import (
    MAGIC,
    PAYLOAD_SIZE,
    PayloadError,
    decode_hand_payload,
    encode_hand_payload,
)

from helpers import random_pose


def all_floats(hand):
    values = list(hand.pose.position) + list(hand.pose.orientation)
    for joint in hand.joints:
        values.extend(joint.pose.position)
        values.extend(joint.pose.orientation)
    return values


def test_payload_is_776_bytes_and_starts_with_magic(make_hand):
    payload = encode_hand_payload(make_hand(), seq=1, timestamp_us=123)
    assert len(payload) == PAYLOAD_SIZE == 776
    assert payload[:4] == b"MLHP" == MAGIC


def test_identity_hand_round_trips_exactly(make_hand):
    hand = make_hand()
    decoded = decode_hand_payload(encode_hand_payload(hand, seq=0, timestamp_us=0))
    assert decoded.seq == 0
    assert decoded.timestamp_us == 0
    assert decoded.tracking_valid is True
    assert decoded.hand.handedness == hand.handedness
    assert [j.name for j in decoded.hand.joints] == list(CANONICAL_JOINT_NAMES)
    np.testing.assert_array_equal(
        np.float32(all_floats(hand)), np.array(all_floats(decoded.hand), dtype=np.float32)
    )


def test_random_hands_round_trip_at_float32_precision(rng):
    for i in range(1000):
        hand = synthetic_hand(random_pose(rng), "left" if i % 2 else "right")
        decoded = decode_hand_payload(
            encode_hand_payload(hand, seq=i, timestamp_us=i * 16_667)
        )
        assert decoded.seq == i
        assert decoded.timestamp_us == i * 16_667
        expected = np.float32(all_floats(hand))
        actual = np.array(all_floats(decoded.hand), dtype=np.float32)
        assert expected.shape == actual.shape == (189,)
        np.testing.assert_array_equal(expected, actual)


def test_decoded_frames_pass_schema_validation(make_hand, rng):
    hand = make_hand(random_pose(rng))
    decoded = decode_hand_payload(encode_hand_payload(hand, seq=1, timestamp_us=1))
    report = validate_hand_frame(HandFrame(timestamp=0, hands=(decoded.hand,)))
    assert report.ok, report.violations


def test_short_datagram_rejected_as_bad_length():
    with pytest.raises(PayloadError) as excinfo:
        decode_hand_payload(b"\x00" * 775)
    assert excinfo.value.reason == "bad length"


def test_wrong_magic_rejected(make_hand):
    payload = bytearray(encode_hand_payload(make_hand(), seq=1, timestamp_us=1))
    payload[:4] = b"XXXX"
    with pytest.raises(PayloadError) as excinfo:
        decode_hand_payload(bytes(payload))
    assert excinfo.value.reason == "bad magic"


def test_wrong_version_rejected(make_hand):
    payload = bytearray(encode_hand_payload(make_hand(), seq=1, timestamp_us=1))
    payload[4] = 2
    with pytest.raises(PayloadError) as excinfo:
        decode_hand_payload(bytes(payload))
    assert excinfo.value.reason == "unsupported version"


def test_bad_handedness_byte_rejected(make_hand):
    payload = bytearray(encode_hand_payload(make_hand(), seq=1, timestamp_us=1))
    payload[5] = 7
    with pytest.raises(PayloadError) as excinfo:
        decode_hand_payload(bytes(payload))
    assert excinfo.value.reason == "bad handedness"


def test_encode_rejects_wrong_joint_count(make_hand):
    import dataclasses

    hand = make_hand()
    short = dataclasses.replace(hand, joints=hand.joints[:20])
    with pytest.raises(PayloadError) as excinfo:
        encode_hand_payload(short, seq=0, timestamp_us=0)
    assert excinfo.value.reason == "bad joint count"


def test_fuzzing_decode_never_crashes(rng):
    outcomes = {"rejected": 0, "decoded": 0}
    for _ in range(10_000):
        buffer = rng.integers(0, 256, PAYLOAD_SIZE, dtype=np.uint8).tobytes()
        try:
            decode_hand_payload(buffer)
            outcomes["decoded"] += 1
        except PayloadError:
            outcomes["rejected"] += 1
    assert sum(outcomes.values()) == 10_000


def test_fuzzing_with_valid_header_never_crashes(make_hand, rng):
    # Keep the 20-byte header valid so the float body is fully exercised.
    header = encode_hand_payload(make_hand(), seq=9, timestamp_us=9)[:20]
    for _ in range(2000):
        body = rng.integers(0, 256, PAYLOAD_SIZE - 20, dtype=np.uint8).tobytes()
        decoded = decode_hand_payload(header + body)
        assert decoded.seq == 9

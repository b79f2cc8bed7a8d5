import dataclasses
import math

import pytest

from xrgate.kinematics import IkSettings, load_bundled_chain
from xrgate.model import ButtonState, HandleFrame, Pose
from xrgate.motion_filter import FilterConfig
from xrgate.pipeline import (
    ButtonMapping,
    PipelineConfig,
    StreamPipeline,
    map_handle_buttons,
    recompute_records,
)
from xrgate.simulator import synthetic_handle, synthetic_hand
from xrgate.transforms import BasisConvention, QuantizationPolicy
from xrgate.wire.binary import DecodedHand, decode_hand_payload, encode_hand_payload


@pytest.fixture(scope="module")
def chain():
    return load_bundled_chain("arm6")


def gesture_pipeline(chain, quantize=False, handedness="right"):
    return StreamPipeline(
        PipelineConfig(
            source="gesture",
            convention=BasisConvention.PICO_UNITY,
            filter_config=FilterConfig(),
            ik_settings=IkSettings(max_iterations=40),
            quantization=QuantizationPolicy(0.001) if quantize else None,
            handedness=handedness,
        ),
        chain,
    )


def handle_pipeline(chain, mapping=ButtonMapping()):
    return StreamPipeline(
        PipelineConfig(
            source="handle",
            convention=BasisConvention.WEBXR,
            filter_config=FilterConfig(),
            ik_settings=IkSettings(max_iterations=40),
            quantization=QuantizationPolicy(0.001),
            handedness="right",
            button_mapping=mapping,
        ),
        chain,
    )


def decoded_hand(pose: Pose, seq: int, handedness="right") -> DecodedHand:
    hand = synthetic_hand(pose, handedness)
    return decode_hand_payload(encode_hand_payload(hand, seq=seq, timestamp_us=seq * 16667))


def buttons(count=7, **overrides) -> tuple:
    states = [ButtonState() for _ in range(count)]
    for index, value in overrides.items():
        states[int(index.lstrip("b"))] = value
    return tuple(states)


class TestButtonMapping:
    def test_trigger_value_passes_through_as_gripper(self, make_handle):
        handle = dataclasses.replace(
            make_handle(), buttons=buttons(b0=ButtonState(pressed=True, value=0.7))
        )
        adjust, missing = map_handle_buttons(handle, ButtonMapping())
        assert adjust.gripper == pytest.approx(0.7)
        assert missing == ()

    def test_no_buttons_pressed_gives_zero_deltas(self, make_handle):
        adjust, _ = map_handle_buttons(make_handle(), ButtonMapping())
        assert (adjust.roll, adjust.yaw, adjust.pitch) == (0.0, 0.0, 0.0)

    def test_held_roll_button_accumulates_over_frames(self, make_handle):
        handle = dataclasses.replace(
            make_handle(), buttons=buttons(b4=ButtonState(pressed=True, value=1.0))
        )
        total = 0.0
        for _ in range(10):
            adjust, _ = map_handle_buttons(handle, ButtonMapping())
            total += adjust.roll
        assert total == pytest.approx(0.1)

    def test_absent_button_index_is_inert_and_reported(self, make_handle):
        handle = dataclasses.replace(make_handle(), buttons=buttons(count=2))
        adjust, missing = map_handle_buttons(handle, ButtonMapping())
        assert adjust.roll == 0.0
        assert "roll_pos" in missing and "pitch_pos" in missing

    def test_opposed_buttons_cancel(self, make_handle):
        handle = dataclasses.replace(
            make_handle(),
            buttons=buttons(
                b4=ButtonState(pressed=True, value=1.0), b5=ButtonState(pressed=True, value=1.0)
            ),
        )
        adjust, _ = map_handle_buttons(handle, ButtonMapping())
        assert adjust.roll == 0.0


class TestGesturePipeline:
    def test_wrong_handedness_is_ignored(self, chain):
        pipeline = gesture_pipeline(chain)
        result = pipeline.process_gesture(decoded_hand(Pose((0.3, 0, 0.9), (0, 0, 0, 1)), 1, "left"), 0)
        assert result is None

    def test_first_frame_bootstraps(self, chain):
        pipeline = gesture_pipeline(chain)
        result = pipeline.process_gesture(decoded_hand(Pose((0.3, 0.9, 0.0), (0, 0, 0, 1)), 1), 5)
        assert result is not None
        assert result.decision.reason == "bootstrap"
        assert result.emitted is None
        assert result.raw["kind"] == "gesture"
        assert result.source == "gesture"

    def test_pose_is_normalized_from_unity_convention(self, chain):
        pipeline = gesture_pipeline(chain)
        result = pipeline.process_gesture(decoded_hand(Pose((0.3, 0.9, 0.2), (0, 0, 0, 1)), 1), 0)
        # Left-handed Y-up (0.3, 0.9, 0.2) mirrors to (0.3, 0.9, -0.2) and
        # then maps into Z-up world coordinates as (0.2, -0.3, 0.9).
        expected = (0.2, -0.3, 0.9)
        assert result.world_pose.position == pytest.approx(expected, abs=1e-6)

    def test_smooth_motion_emits_commands(self, chain):
        pipeline = gesture_pipeline(chain)
        emitted = 0
        for k in range(8):
            pose = Pose((0.3, 0.75 - 0.005 * k, 0.1), (0, 0, 0, 1))
            result = pipeline.process_gesture(decoded_hand(pose, k + 1), k)
            if result.command is not None:
                emitted += 1
                assert result.command["angles"] == list(result.emitted)
                assert "gripper" not in result.command
        assert emitted >= 6

    def test_recompute_from_raw_matches_live(self, chain):
        live = gesture_pipeline(chain)
        results = []
        for k in range(12):
            pose = Pose((0.3 + 0.004 * k, 0.7, 0.1 + 0.002 * k), (0, 0, 0, 1))
            results.append(live.process_gesture(decoded_hand(pose, k + 1), k * 16))
        offline = gesture_pipeline(chain)
        for original in results:
            again = offline.process_raw(original.raw, original.arrival_ms)
            assert again.decision == original.decision
            assert again.raw_angles == original.raw_angles
            assert again.ik_angles == original.ik_angles
            assert again.emitted == original.emitted
            assert again.world_pose == original.world_pose
            assert again.raw == original.raw

    def test_reset_restores_bootstrap(self, chain):
        pipeline = gesture_pipeline(chain)
        pipeline.process_gesture(decoded_hand(Pose((0.3, 0.8, 0.0), (0, 0, 0, 1)), 1), 0)
        assert pipeline.filter_state.initialized
        pipeline.reset()
        assert not pipeline.filter_state.initialized
        assert pipeline.frames_processed == 0


class TestHandlePipeline:
    def frame(self, pose, buttons_tuple=None, timestamp=0):
        handle = synthetic_handle(pose, "right")
        if buttons_tuple is not None:
            handle = dataclasses.replace(handle, buttons=buttons_tuple)
        return HandleFrame(timestamp=timestamp, handles=(handle,))

    def test_grip_position_is_quantized(self, chain):
        pipeline = handle_pipeline(chain)
        result = pipeline.process_handle(
            self.frame(Pose((0.10002, 0.5, 0.20049), (0, 0, 0, 1))), 0
        )
        # WebXR y-up (x, y, z) -> world (-z, -x, y), then 1 mm quantization.
        assert result.world_pose.position == pytest.approx((-0.2, -0.1, 0.5), abs=1e-9)

    def test_command_carries_gripper_value(self, chain):
        pipeline = handle_pipeline(chain)
        pipeline.process_handle(self.frame(Pose((0.1, 0.5, 0.2), (0, 0, 0, 1))), 0)
        result = pipeline.process_handle(
            self.frame(
                Pose((0.1, 0.51, 0.2), (0, 0, 0, 1)),
                buttons(b0=ButtonState(pressed=True, value=0.4)),
            ),
            16,
        )
        assert result.command is not None
        assert result.command["gripper"] == pytest.approx(0.4)

    def test_held_button_rotates_the_target(self, chain):
        pipeline = handle_pipeline(chain)
        held = buttons(b4=ButtonState(pressed=True, value=1.0))
        last = None
        for k in range(10):
            last = pipeline.process_handle(
                self.frame(Pose((0.1, 0.5, 0.2), (0, 0, 0, 1)), held, timestamp=k), k
            )
        # Ten held frames accumulate 0.1 rad of roll on the world target.
        qx, qy, qz, qw = last.world_pose.orientation
        roll = 2.0 * math.atan2(qx, qw)
        assert roll == pytest.approx(0.1, abs=1e-6)

    def test_missing_mapping_recorded_once_per_function(self, chain):
        pipeline = handle_pipeline(chain, ButtonMapping(pitch_pos=42))
        pipeline.process_handle(self.frame(Pose((0.1, 0.5, 0.2), (0, 0, 0, 1))), 0)
        assert "pitch_pos" in pipeline.missing_buttons_warned


def test_recompute_records_filters_by_source(chain):
    pipeline = gesture_pipeline(chain)

    class FakeRecord:
        def __init__(self, source, raw):
            self.source = source
            self.raw = raw
            self.arrival_ms = 0

    hand_raw = gesture_pipeline(chain).process_gesture(
        decoded_hand(Pose((0.3, 0.8, 0.0), (0, 0, 0, 1)), 1), 0
    ).raw
    records = [FakeRecord("handle", {"kind": "handle"}), FakeRecord("gesture", hand_raw)]
    results = recompute_records(records, pipeline)
    assert len(results) == 1
    assert results[0].source == "gesture"

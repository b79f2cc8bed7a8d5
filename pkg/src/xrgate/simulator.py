"""Synthetic device streams for tests and demos.

Generates smooth trajectories with optional injected tremor (band-limited
Gaussian noise in the physiological 8-12 Hz band), one-frame teleport jumps,
and intentional datagram drops, then emits them over the real wire
protocols at a fixed rate. Everything is deterministic for a fixed seed,
including the encoded bytes: frame timestamps are nominal, not wall clock.

The same emitters double as the replay engine: ``sim_frames_from_episode``
rebuilds emittable frames from a recorded episode.
"""
from __future__ import annotations

import math
import socket
import time
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import signal

from .model import ButtonState, Hand, Handle, HandleFrame, Joint, Pose
from .rotation import quat_to_matrix
from .wire.binary import encode_hand_payload
from .wire.json_codec import (
    hand_from_dict,
    handle_from_dict,
    serialize_handle_frame_json,
)

TRAJECTORY_KINDS = ("lissajous", "waypoint-linear", "stationary")


@dataclass(frozen=True)
class TrajectorySpec:
    kind: str = "lissajous"
    amplitude: float = 0.08
    period: float = 6.0
    center: tuple[float, float, float] = (0.35, 0.0, 0.45)
    orientation_sweep: float = 0.0
    waypoints: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be >= 0")
        if self.period <= 0.0:
            raise ValueError("period must be > 0")

    @classmethod
    def from_dict(cls, data: dict) -> "TrajectorySpec":
        return cls(
            kind=data.get("kind", "lissajous"),
            amplitude=float(data.get("amplitude", 0.08)),
            period=float(data.get("period", 6.0)),
            center=tuple(data.get("center", (0.35, 0.0, 0.45))),
            orientation_sweep=float(data.get("orientation_sweep", 0.0)),
            waypoints=tuple(tuple(w) for w in data.get("waypoints", ())),
        )


@dataclass(frozen=True)
class NoiseSpec:
    tremor_amplitude: float = 0.0
    tremor_band: tuple[float, float] = (8.0, 12.0)
    jump_probability: float = 0.0
    jump_magnitude: float = 0.0
    drop_probability: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("jump_probability", "drop_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be within [0, 1]")
        if self.tremor_amplitude < 0.0 or self.jump_magnitude < 0.0:
            raise ValueError("noise amplitudes must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseSpec":
        return cls(
            tremor_amplitude=float(data.get("tremor_amplitude", 0.0)),
            tremor_band=tuple(data.get("tremor_band", (8.0, 12.0))),
            jump_probability=float(data.get("jump_probability", 0.0)),
            jump_magnitude=float(data.get("jump_magnitude", 0.0)),
            drop_probability=float(data.get("drop_probability", 0.0)),
            seed=int(data.get("seed", 0)),
        )


class SimFrame(NamedTuple):
    index: int
    timestamp_ms: int
    pose: Pose
    drop: bool
    jumped: bool
    hand: Optional[Hand] = None
    handle: Optional[Handle] = None


def _trajectory_position(spec: TrajectorySpec, t: float) -> np.ndarray:
    center = np.asarray(spec.center, dtype=float)
    if spec.kind == "stationary":
        return center
    if spec.kind == "lissajous":
        w = 2.0 * math.pi / spec.period
        return center + spec.amplitude * np.array(
            [math.sin(w * t), 0.5 * math.sin(2.0 * w * t), 0.5 * math.sin(w * t + math.pi / 2)]
        )
    points = [np.asarray(p, dtype=float) for p in spec.waypoints] or [center]
    if len(points) == 1:
        return points[0]
    legs = len(points)
    phase = (t / spec.period) % 1.0
    scaled = phase * legs
    leg = min(int(scaled), legs - 1)
    frac = scaled - leg
    start = points[leg]
    end = points[(leg + 1) % legs]
    return start + (end - start) * frac


def _trajectory_orientation(spec: TrajectorySpec, t: float) -> tuple[float, float, float, float]:
    if spec.orientation_sweep == 0.0:
        return (0.0, 0.0, 0.0, 1.0)
    w = 2.0 * math.pi / spec.period
    yaw = spec.orientation_sweep * math.sin(w * t)
    return (0.0, 0.0, math.sin(yaw / 2.0), math.cos(yaw / 2.0))


def _tremor_series(noise: NoiseSpec, rate: float, count: int, rng: np.random.Generator) -> np.ndarray:
    if noise.tremor_amplitude <= 0.0 or count == 0:
        return np.zeros((count, 3))
    high = min(noise.tremor_band[1], 0.45 * rate)
    low = min(noise.tremor_band[0], high * 0.5)
    if low <= 0.0 or high <= low:
        return np.zeros((count, 3))
    b, a = signal.butter(2, (low, high), btype="bandpass", fs=rate)
    white = rng.standard_normal((count, 3))
    shaped = signal.lfilter(b, a, white, axis=0)
    std = float(np.std(shaped))
    if std <= 0.0:
        return np.zeros((count, 3))
    return shaped * (noise.tremor_amplitude / std)


def generate_frames(
    trajectory: TrajectorySpec,
    noise: NoiseSpec,
    rate: float,
    duration: float,
    start_time_ms: int = 0,
) -> list[SimFrame]:
    """Produce floor(rate * duration) frames at exact nominal intervals."""
    if rate <= 0.0 or duration <= 0.0:
        raise ValueError("rate and duration must be > 0")
    count = int(rate * duration)
    rng = np.random.default_rng(noise.seed)
    tremor = _tremor_series(noise, rate, count, rng)
    jump_draws = rng.random(count)
    jump_dirs = rng.standard_normal((count, 3))
    drop_draws = rng.random(count)

    frames: list[SimFrame] = []
    for k in range(count):
        t = k / rate
        position = _trajectory_position(trajectory, t) + tremor[k]
        jumped = jump_draws[k] < noise.jump_probability and noise.jump_magnitude > 0.0
        if jumped:
            direction = jump_dirs[k]
            norm = float(np.linalg.norm(direction))
            if norm > 0.0:
                position = position + direction * (noise.jump_magnitude / norm)
        frames.append(
            SimFrame(
                index=k,
                timestamp_ms=start_time_ms + round(k * 1000.0 / rate),
                pose=Pose(tuple(position), _trajectory_orientation(trajectory, t)),
                drop=bool(drop_draws[k] < noise.drop_probability),
                jumped=bool(jumped),
            )
        )
    return frames


# -- synthetic skeleton/handle construction -----------------------------------

_FINGER_X = {"Thumb": 0.035, "Index": 0.02, "Middle": 0.0, "Ring": -0.02, "Little": -0.04}
_SEGMENT_Z = {
    "Metacarpal": 0.03,
    "Proximal": 0.06,
    "Intermediate": 0.08,
    "Distal": 0.095,
    "Tip": 0.105,
}
_THUMB_Z = {"Metacarpal": 0.02, "Proximal": 0.04, "Distal": 0.06, "Tip": 0.075}


def _joint_offsets(handedness: str) -> list[tuple[str, np.ndarray]]:
    mirror = -1.0 if handedness == "left" else 1.0
    offsets: list[tuple[str, np.ndarray]] = [
        ("Palm", np.array([0.0, 0.0, 0.05])),
        ("Wrist", np.zeros(3)),
    ]
    for part, z in _THUMB_Z.items():
        offsets.append((f"Thumb{part}", np.array([mirror * _FINGER_X["Thumb"], 0.01, z])))
    for finger in ("Index", "Middle", "Ring", "Little"):
        for part, z in _SEGMENT_Z.items():
            offsets.append((f"{finger}{part}", np.array([mirror * _FINGER_X[finger], 0.0, z])))
    return offsets


def synthetic_hand(pose: Pose, handedness: str = "right") -> Hand:
    """Rigid 26-joint skeleton posed from a wrist pose."""
    rot = quat_to_matrix(pose.orientation)
    base = np.asarray(pose.position, dtype=float)
    joints = tuple(
        Joint(name, Pose(tuple(base + rot @ offset), pose.orientation))
        for name, offset in _joint_offsets(handedness)
    )
    return Hand(id=handedness, handedness=handedness, pose=pose, joints=joints)


def synthetic_handle(pose: Pose, handedness: str = "right") -> Handle:
    return Handle(
        id=handedness,
        handedness=handedness,
        pose=pose,
        target_ray_pose=pose,
        profiles=("generic-trigger-squeeze-thumbstick",),
        buttons=tuple(ButtonState() for _ in range(7)),
        axes=(0.0, 0.0),
    )


# -- emission ------------------------------------------------------------------

@dataclass
class EmissionReport:
    sent: int = 0
    dropped: int = 0
    reconnects: int = 0
    duration_s: float = 0.0
    mean_rate_hz: float = 0.0
    interval_std_s: float = 0.0
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "sent": self.sent,
            "dropped": self.dropped,
            "reconnects": self.reconnects,
            "duration_s": round(self.duration_s, 6),
            "mean_rate_hz": round(self.mean_rate_hz, 3),
            "interval_std_s": round(self.interval_std_s, 6),
            "error": self.error,
        }


class SimulatorError(RuntimeError):
    def __init__(self, message: str, report: EmissionReport):
        super().__init__(message)
        self.report = report


def _finish_report(report: EmissionReport, stamps: list[float], started: float) -> EmissionReport:
    report.duration_s = time.perf_counter() - started
    if len(stamps) >= 2:
        intervals = np.diff(np.asarray(stamps))
        report.mean_rate_hz = (len(stamps) - 1) / (stamps[-1] - stamps[0])
        report.interval_std_s = float(np.std(intervals))
    return report


def emit_gesture_stream(
    frames: Sequence[SimFrame],
    target: tuple[str, int],
    rate: float,
    handedness: str = "right",
) -> EmissionReport:
    """Send one datagram per frame, paced to absolute deadlines.

    Intentional drops consume a sequence number so the receiver observes a
    gap, exactly like a lost datagram.
    """
    if rate <= 0.0:
        raise ValueError("rate must be > 0")
    report = EmissionReport()
    stamps: list[float] = []
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    started = time.perf_counter()
    try:
        interval = 1.0 / rate
        for k, frame in enumerate(frames):
            deadline = started + k * interval
            delay = deadline - time.perf_counter()
            if delay > 0:
                time.sleep(delay)
            if frame.drop:
                report.dropped += 1
                continue
            hand = frame.hand or synthetic_hand(frame.pose, handedness)
            payload = encode_hand_payload(
                hand, seq=frame.index + 1, timestamp_us=frame.timestamp_ms * 1000
            )
            try:
                sock.sendto(payload, target)
            except OSError as exc:
                report.error = str(exc)
                raise SimulatorError(f"gesture send failed: {exc}", _finish_report(report, stamps, started))
            report.sent += 1
            stamps.append(time.perf_counter())
    finally:
        sock.close()
    return _finish_report(report, stamps, started)


def _connect_with_backoff(
    address: tuple[str, int], attempts: int, report: EmissionReport
) -> socket.socket:
    delay = 0.05
    last_error: Optional[OSError] = None
    for _ in range(attempts):
        try:
            sock = socket.create_connection(address, timeout=2.0)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            return sock
        except OSError as exc:
            last_error = exc
            time.sleep(delay)
            delay = min(delay * 2.0, 1.0)
    report.error = f"connect to {address} failed: {last_error}"
    raise SimulatorError(report.error, report)


def emit_handle_stream(
    frames: Sequence[SimFrame],
    address: tuple[str, int],
    rate: float = 90.0,
    handedness: str = "right",
    connect_attempts: int = 6,
) -> EmissionReport:
    """Send one JSON line per frame over a persistent socket.

    Reconnects with bounded backoff on connection loss and resends the
    in-flight frame after reconnecting.
    """
    if rate <= 0.0:
        raise ValueError("rate must be > 0")
    report = EmissionReport()
    stamps: list[float] = []
    started = time.perf_counter()
    sock = _connect_with_backoff(address, connect_attempts, report)
    try:
        interval = 1.0 / rate
        for k, frame in enumerate(frames):
            deadline = started + k * interval
            delay = deadline - time.perf_counter()
            if delay > 0:
                time.sleep(delay)
            if frame.drop:
                report.dropped += 1
                continue
            handle = frame.handle or synthetic_handle(frame.pose, handedness)
            line = (
                serialize_handle_frame_json(
                    HandleFrame(timestamp=frame.timestamp_ms, handles=(handle,))
                )
                + "\n"
            ).encode("utf-8")
            for attempt in (0, 1):
                try:
                    sock.sendall(line)
                    break
                except OSError:
                    if attempt == 1:
                        report.error = "send failed after reconnect"
                        raise SimulatorError(report.error, _finish_report(report, stamps, started))
                    try:
                        sock.close()
                    except OSError:
                        pass
                    sock = _connect_with_backoff(address, connect_attempts, report)
                    report.reconnects += 1
            report.sent += 1
            stamps.append(time.perf_counter())
    finally:
        try:
            sock.close()
        except OSError:
            pass
    return _finish_report(report, stamps, started)


def sim_frames_from_episode(records, source: str) -> list[SimFrame]:
    """Rebuild emittable frames from recorded raw data of one stream."""
    frames: list[SimFrame] = []
    for record in records:
        raw = record.raw
        if raw.get("kind") != source:
            continue
        problems: list[str] = []
        if source == "gesture":
            entries = raw["frame"]["data"]
            hand = hand_from_dict(entries[0], "hand 0", problems) if entries else None
            if hand is None or problems:
                continue
            frames.append(
                SimFrame(
                    index=len(frames),
                    timestamp_ms=int(raw["frame"]["timestamp"]),
                    pose=hand.pose,
                    drop=False,
                    jumped=False,
                    hand=hand,
                )
            )
        else:
            entries = raw["frame"]["data"]
            handle = handle_from_dict(entries[0], "handle 0", problems) if entries else None
            if handle is None or problems:
                continue
            frames.append(
                SimFrame(
                    index=len(frames),
                    timestamp_ms=int(raw["frame"]["timestamp"]),
                    pose=handle.pose,
                    drop=False,
                    jumped=False,
                    handle=handle,
                )
            )
    return frames

import socket
import time

import pytest

from xrgate.model import HandleFrame
from xrgate.simulator import synthetic_handle
from xrgate.wire.binary import encode_hand_payload
from xrgate.wire.json_codec import serialize_handle_frame_json
from xrgate.wire.servers import DropOldestQueue, HandleSocketServer, UdpGestureServer

from helpers import random_pose


@pytest.fixture
def handle_server():
    server = HandleSocketServer("127.0.0.1", 0)
    server.start()
    yield server
    server.stop()


@pytest.fixture
def udp_server():
    server = UdpGestureServer("127.0.0.1", 0)
    server.start()
    yield server
    server.stop()


def drain(queue, expected, timeout=5.0):
    items = []
    deadline = time.monotonic() + timeout
    while len(items) < expected and time.monotonic() < deadline:
        item = queue.get(timeout=0.1)
        if item is not None:
            items.append(item)
    return items


_frame_rng = __import__("numpy").random.default_rng(7)


def frame_line(timestamp: int) -> bytes:
    frame = HandleFrame(timestamp=timestamp, handles=(synthetic_handle(random_pose(_frame_rng)),))
    return (serialize_handle_frame_json(frame) + "\n").encode()


class TestDropOldestQueue:
    def test_fifo(self):
        q = DropOldestQueue(4)
        for n in range(3):
            q.put(n)
        assert [q.get(0.1) for _ in range(3)] == [0, 1, 2]

    def test_overflow_drops_oldest_and_counts(self):
        q = DropOldestQueue(2)
        for n in range(5):
            q.put(n)
        assert q.dropped == 3
        assert q.get(0.1) == 3
        assert q.get(0.1) == 4

    def test_get_timeout_returns_none(self):
        q = DropOldestQueue(2)
        started = time.monotonic()
        assert q.get(timeout=0.05) is None
        assert time.monotonic() - started < 1.0

    def test_close_wakes_getters(self):
        q = DropOldestQueue(2)
        q.close()
        assert q.get(timeout=5.0) is None
        q.put("late")
        assert q.get(timeout=0.05) is None


class TestHandleSocketServer:
    def test_hundred_frames_arrive_in_order(self, handle_server):
        with socket.create_connection(handle_server.address) as sock:
            for n in range(100):
                sock.sendall(frame_line(n))
            events = drain(handle_server.frames, 100)
        assert [e.frame.timestamp for e in events] == list(range(100))
        assert handle_server.status()["frames_received"] == 100

    def test_garbage_is_counted_and_isolated(self, handle_server):
        with socket.create_connection(handle_server.address) as sock:
            sock.sendall(b"this is not json\n")
            sock.sendall(frame_line(1))
            events = drain(handle_server.frames, 1)
        assert len(events) == 1
        assert handle_server.status()["malformed_dropped"] == 1

    def test_reconnect_is_served(self, handle_server):
        with socket.create_connection(handle_server.address) as sock:
            sock.sendall(frame_line(1))
        time.sleep(0.05)
        with socket.create_connection(handle_server.address) as sock:
            sock.sendall(frame_line(2))
        events = drain(handle_server.frames, 2)
        assert [e.frame.timestamp for e in events] == [1, 2]
        assert handle_server.status()["connections_total"] == 2

    def test_partial_lines_are_reassembled(self, handle_server):
        line = frame_line(9)
        with socket.create_connection(handle_server.address) as sock:
            sock.sendall(line[:10])
            time.sleep(0.05)
            sock.sendall(line[10:])
            events = drain(handle_server.frames, 1)
        assert events[0].frame.timestamp == 9


def send_datagrams(address, seqs, handedness="right"):
    from xrgate.model import Pose
    from xrgate.simulator import synthetic_hand

    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sock.bind(("127.0.0.1", 0))
    try:
        for item in seqs:
            seq, hand_side = item if isinstance(item, tuple) else (item, handedness)
            hand = synthetic_hand(Pose((seq * 0.01, 0, 0), (0, 0, 0, 1)), hand_side)
            sock.sendto(encode_hand_payload(hand, seq=seq, timestamp_us=seq * 100), address)
            time.sleep(0.002)
    finally:
        sock.close()


class TestUdpGestureServer:
    def test_in_order_delivery(self, udp_server):
        send_datagrams(udp_server.address, [1, 2, 3])
        events = drain(udp_server.frames, 3)
        assert [e.decoded.seq for e in events] == [1, 2, 3]
        status = udp_server.status()
        assert status["delivered"] == 3
        assert status["gaps"] == 0
        assert status["stale_dropped"] == 0

    def test_reordered_datagram_dropped_as_stale(self, udp_server):
        send_datagrams(udp_server.address, [1, 3, 2])
        events = drain(udp_server.frames, 2)
        time.sleep(0.1)
        assert [e.decoded.seq for e in events] == [1, 3]
        status = udp_server.status()
        assert status["stale_dropped"] == 1
        assert status["delivered"] == 2

    def test_gaps_are_counted_not_retransmitted(self, udp_server):
        send_datagrams(udp_server.address, [1, 2, 5])
        events = drain(udp_server.frames, 3)
        assert [e.decoded.seq for e in events] == [1, 2, 5]
        assert udp_server.status()["gaps"] == 2

    def test_decode_rejections_counted_by_reason(self, udp_server):
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.sendto(b"junk", udp_server.address)
        sock.sendto(b"\x00" * 776, udp_server.address)
        sock.close()
        time.sleep(0.2)
        rejects = udp_server.status()["rejects"]
        assert rejects.get("bad length") == 1
        assert rejects.get("bad magic") == 1

    def test_per_handedness_sequence_tracking(self, udp_server):
        # One sender socket interleaving hands: left seqs must not look
        # stale against right seqs.
        send_datagrams(
            udp_server.address, [(1, "right"), (1, "left"), (2, "right"), (2, "left")]
        )
        events = drain(udp_server.frames, 4)
        assert len(events) == 4
        assert udp_server.status()["stale_dropped"] == 0

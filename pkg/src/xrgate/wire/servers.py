"""Ingestion servers for both wire channels.

The handle channel is newline-delimited JSON over a persistent TCP socket
(optionally TLS): one Table-2 document per line. The gesture channel is one
776-byte binary datagram per hand over UDP, with stale datagrams dropped by
sequence number so delivery never moves backwards per (sender, handedness).

Both servers push into a bounded drop-oldest queue: under overload the
freshest data wins and every drop is counted.
"""
from __future__ import annotations

import logging
import socket
import ssl
import threading
import time
from collections import deque
from typing import NamedTuple, Optional

from ..model import HandleFrame
from .binary import DecodedHand, PayloadError, decode_hand_payload
from .json_codec import FrameParseError, parse_handle_frame_json

log = logging.getLogger("xrgate.wire")

MAX_LINE_BYTES = 1 << 20
RECV_CHUNK = 65536


class DropOldestQueue:
    """Bounded FIFO that never blocks producers; overflow evicts the oldest."""

    def __init__(self, capacity: int = 256):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: deque = deque()
        self._cond = threading.Condition()
        self._closed = False
        self.dropped = 0

    def put(self, item) -> None:
        with self._cond:
            if self._closed:
                return
            if len(self._items) >= self.capacity:
                self._items.popleft()
                self.dropped += 1
            self._items.append(item)
            self._cond.notify()

    def get(self, timeout: Optional[float] = None):
        """Next item, or None on timeout or when closed and drained."""
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            while not self._items:
                if self._closed:
                    return None
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    return None
                self._cond.wait(remaining)
            return self._items.popleft()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def __len__(self) -> int:
        with self._cond:
            return len(self._items)


class _RateWindow:
    """Sliding-window receive rate over the last few seconds."""

    def __init__(self, horizon: float = 2.0):
        self.horizon = horizon
        self._stamps: deque[float] = deque(maxlen=4096)
        self._lock = threading.Lock()

    def mark(self) -> None:
        with self._lock:
            self._stamps.append(time.monotonic())

    def rate(self) -> float:
        now = time.monotonic()
        with self._lock:
            count = sum(1 for s in self._stamps if now - s <= self.horizon)
        return count / self.horizon


class HandleEvent(NamedTuple):
    frame: HandleFrame
    arrival_ms: int
    arrival_mono: float
    peer: str


class GestureEvent(NamedTuple):
    decoded: DecodedHand
    arrival_ms: int
    arrival_mono: float
    sender: tuple


def build_tls_context(cert_path: str, key_path: str) -> ssl.SSLContext:
    context = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
    context.load_cert_chain(cert_path, key_path)
    return context


class HandleSocketServer:
    """Persistent-socket JSON server for the handle channel.

    Each client connection is served on its own thread; malformed messages
    are counted and dropped without touching the connection, and client
    errors never propagate across clients or stop the server.
    """

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        queue_capacity: int = 256,
        tls_context: Optional[ssl.SSLContext] = None,
        max_line_bytes: int = MAX_LINE_BYTES,
    ):
        self._host = host
        self._port = port
        self._tls_context = tls_context
        self._max_line_bytes = max_line_bytes
        self.frames = DropOldestQueue(queue_capacity)
        self.rate = _RateWindow()
        self._sock: Optional[socket.socket] = None
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()
        self._lock = threading.Lock()
        self.frames_received = 0
        self.malformed_dropped = 0
        self.connections_total = 0
        self.disconnects = 0

    @property
    def address(self) -> tuple[str, int]:
        if self._sock is None:
            raise RuntimeError("server not started")
        return self._sock.getsockname()[:2]

    def start(self) -> None:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((self._host, self._port))
        sock.listen(8)
        sock.settimeout(0.2)
        self._sock = sock
        acceptor = threading.Thread(target=self._accept_loop, name="handle-accept", daemon=True)
        acceptor.start()
        self._threads.append(acceptor)

    def stop(self) -> None:
        self._stop.set()
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        for t in self._threads:
            t.join(timeout=2.0)
        self.frames.close()

    def _accept_loop(self) -> None:
        assert self._sock is not None
        while not self._stop.is_set():
            try:
                conn, addr = self._sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            if self._tls_context is not None:
                try:
                    conn = self._tls_context.wrap_socket(conn, server_side=True)
                except (ssl.SSLError, OSError):
                    conn.close()
                    continue
            with self._lock:
                self.connections_total += 1
            worker = threading.Thread(
                target=self._client_loop,
                args=(conn, f"{addr[0]}:{addr[1]}"),
                name=f"handle-client-{addr[1]}",
                daemon=True,
            )
            worker.start()
            self._threads.append(worker)

    def _client_loop(self, conn: socket.socket, peer: str) -> None:
        conn.settimeout(0.5)
        buffer = bytearray()
        overflowed = False
        try:
            while not self._stop.is_set():
                try:
                    chunk = conn.recv(RECV_CHUNK)
                except socket.timeout:
                    continue
                except OSError:
                    break
                if not chunk:
                    break
                buffer.extend(chunk)
                while True:
                    newline = buffer.find(b"\n")
                    if newline < 0:
                        if len(buffer) > self._max_line_bytes:
                            buffer.clear()
                            overflowed = True
                        break
                    line = bytes(buffer[:newline])
                    del buffer[: newline + 1]
                    if overflowed:
                        overflowed = False
                        with self._lock:
                            self.malformed_dropped += 1
                        continue
                    self._handle_line(line, peer)
        finally:
            try:
                conn.close()
            except OSError:
                pass
            with self._lock:
                self.disconnects += 1
            log.debug("handle client disconnected", extra={"event": {"type": "disconnect", "peer": peer}})

    def _handle_line(self, line: bytes, peer: str) -> None:
        text = line.decode("utf-8", errors="replace").strip()
        if not text:
            return
        try:
            frame = parse_handle_frame_json(text)
        except FrameParseError as exc:
            with self._lock:
                self.malformed_dropped += 1
            log.debug(
                "malformed handle message dropped",
                extra={"event": {"type": "drop", "peer": peer, "problems": list(exc.problems)[:4]}},
            )
            return
        with self._lock:
            self.frames_received += 1
        self.rate.mark()
        self.frames.put(
            HandleEvent(frame, int(time.time() * 1000), time.monotonic(), peer)
        )

    def status(self) -> dict:
        with self._lock:
            return {
                "frames_received": self.frames_received,
                "malformed_dropped": self.malformed_dropped,
                "connections_total": self.connections_total,
                "disconnects": self.disconnects,
                "queue_dropped": self.frames.dropped,
                "receive_hz": round(self.rate.rate(), 3),
            }


class UdpGestureServer:
    """UDP server for the binary gesture channel.

    Decode rejections are counted per reason; datagrams whose sequence is
    not ahead of the last delivered one for that (sender, handedness) are
    dropped as stale, and sequence gaps are counted, never retransmitted.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0, queue_capacity: int = 256):
        self._host = host
        self._port = port
        self.frames = DropOldestQueue(queue_capacity)
        self.rate = _RateWindow()
        self._sock: Optional[socket.socket] = None
        self._thread: Optional[threading.Thread] = None
        self._stop = threading.Event()
        self._lock = threading.Lock()
        self._last_seq: dict[tuple, int] = {}
        self.datagrams_received = 0
        self.delivered = 0
        self.stale_dropped = 0
        self.gaps = 0
        self.rejects: dict[str, int] = {}

    @property
    def address(self) -> tuple[str, int]:
        if self._sock is None:
            raise RuntimeError("server not started")
        return self._sock.getsockname()[:2]

    def start(self) -> None:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 1 << 20)
        sock.bind((self._host, self._port))
        sock.settimeout(0.2)
        self._sock = sock
        self._thread = threading.Thread(target=self._recv_loop, name="gesture-udp", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        if self._thread is not None:
            self._thread.join(timeout=2.0)
        self.frames.close()

    def _recv_loop(self) -> None:
        assert self._sock is not None
        while not self._stop.is_set():
            try:
                datagram, sender = self._sock.recvfrom(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            with self._lock:
                self.datagrams_received += 1
            try:
                decoded = decode_hand_payload(datagram)
            except PayloadError as exc:
                with self._lock:
                    self.rejects[exc.reason] = self.rejects.get(exc.reason, 0) + 1
                log.debug(
                    "datagram rejected",
                    extra={"event": {"type": "reject", "reason": exc.reason, "sender": str(sender)}},
                )
                continue
            key = (sender, decoded.hand.handedness)
            with self._lock:
                last = self._last_seq.get(key)
                if last is not None and decoded.seq <= last:
                    self.stale_dropped += 1
                    continue
                if last is not None and decoded.seq > last + 1:
                    self.gaps += decoded.seq - last - 1
                self._last_seq[key] = decoded.seq
                self.delivered += 1
            self.rate.mark()
            self.frames.put(
                GestureEvent(decoded, int(time.time() * 1000), time.monotonic(), sender)
            )

    def status(self) -> dict:
        with self._lock:
            return {
                "datagrams_received": self.datagrams_received,
                "delivered": self.delivered,
                "stale_dropped": self.stale_dropped,
                "gaps": self.gaps,
                "rejects": dict(self.rejects),
                "queue_dropped": self.frames.dropped,
                "receive_hz": round(self.rate.rate(), 3),
            }

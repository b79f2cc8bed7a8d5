"""Gateway service: ingestion, pipelines, snapshots, recording, control.

Thread layout: two ingestion servers (handle TCP, gesture UDP), one pipeline
task per stream that solely owns that stream's filter state and IK seed, a
snapshot writer task, a recorder task, and the control server. All
communication is through bounded drop-oldest queues; there is no shared
mutable pipeline state. Shutdown broadcasts a stop event and drains queues
with a deadline, finalizing any open episode.

The control endpoint speaks one JSON document per line: a request is a
single text line (``status``, ``record start <label>``, ``record stop``,
``config get``) and the response is one JSON line. A minimal HTTP shim on
the same socket serves the operator page on GET and accepts the same
commands via POST /api, so a browser panel needs no second port.
"""
from __future__ import annotations

import json
import logging
import socket
import threading
import time
from collections import deque
from pathlib import Path
from typing import Optional

from .config import GatewayConfig, resolve_chain
from .episodes import EpisodeRecord, EpisodeWriter, new_episode_id
from .kinematics import IkSettings
from .motion_filter import FilterConfig
from .pipeline import ButtonMapping, PipelineConfig, PipelineResult, StreamPipeline
from .transforms import BasisConvention, QuantizationPolicy
from .wire.servers import (
    DropOldestQueue,
    HandleSocketServer,
    UdpGestureServer,
    build_tls_context,
)
from .wire.snapshot import SnapshotWriter

log = logging.getLogger("xrgate.gateway")

ACCEPTANCE_WINDOW = 600
SHUTDOWN_DEADLINE = 2.0


class GatewayError(RuntimeError):
    pass


class _StreamStats:
    def __init__(self):
        self.lock = threading.Lock()
        self.processed = 0
        self.errors = 0
        self.decisions: deque[bool] = deque(maxlen=ACCEPTANCE_WINDOW)

    def mark(self, executable: bool) -> None:
        with self.lock:
            self.processed += 1
            self.decisions.append(executable)

    def mark_error(self) -> None:
        with self.lock:
            self.errors += 1

    def snapshot(self) -> dict:
        with self.lock:
            total = len(self.decisions)
            accepted = sum(self.decisions)
            ratio = accepted / total if total else 0.0
            return {
                "processed": self.processed,
                "errors": self.errors,
                "acceptance_ratio": round(ratio, 6),
            }


class Gateway:
    """Composable service around two stream pipelines.

    Use ``start``/``stop`` directly for embedding and tests; the CLI wraps
    them with signal handling. Emitted commands are observable on
    ``commands`` (a bounded drop-oldest queue) and as latest-command
    snapshot files.
    """

    def __init__(self, config: GatewayConfig):
        self.config = config
        self.chain = resolve_chain(config.chain)
        tls_context = None
        if config.tls.enabled:
            tls_context = build_tls_context(config.tls.cert_path, config.tls.key_path)
        self.handle_server = HandleSocketServer(
            config.handle_bind.host,
            config.handle_bind.port,
            queue_capacity=config.queue_capacity,
            tls_context=tls_context,
        )
        self.gesture_server = UdpGestureServer(
            config.hand_bind.host, config.hand_bind.port, queue_capacity=config.queue_capacity
        )
        self.commands = DropOldestQueue(config.queue_capacity)
        self._snapshot_queue = DropOldestQueue(config.queue_capacity)
        self._record_queue = DropOldestQueue(max(config.queue_capacity, 1024))
        self._snapshot_writers: dict[str, SnapshotWriter] = {}
        self._pipelines: dict[str, StreamPipeline] = {}
        self._stats = {"gesture": _StreamStats(), "handle": _StreamStats()}
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()
        self._control_sock: Optional[socket.socket] = None
        self._episode: Optional[EpisodeWriter] = None
        self._episode_epoch = 0
        self._episode_lock = threading.Lock()
        self._started_mono = 0.0
        self.started = False

    # -- lifecycle -------------------------------------------------------------

    def start(self) -> None:
        snapshot_dir = Path(self.config.snapshot_dir)
        snapshot_dir.mkdir(parents=True, exist_ok=True)
        Path(self.config.episodes_dir).mkdir(parents=True, exist_ok=True)

        quant = self.config.quantization
        policy = QuantizationPolicy(quant.resolution)
        self._pipelines["gesture"] = StreamPipeline(
            PipelineConfig(
                source="gesture",
                convention=BasisConvention.PICO_UNITY,
                filter_config=self.config.filter,
                ik_settings=self.config.ik,
                quantization=policy if quant.apply_to_gesture else None,
                handedness=self.config.gesture_handedness,
                button_mapping=self.config.button_mapping,
            ),
            self.chain,
        )
        self._pipelines["handle"] = StreamPipeline(
            PipelineConfig(
                source="handle",
                convention=BasisConvention.WEBXR,
                filter_config=self.config.filter,
                ik_settings=self.config.ik,
                quantization=policy if quant.apply_to_handle else None,
                handedness=self.config.handle_handedness,
                button_mapping=self.config.button_mapping,
            ),
            self.chain,
        )

        self.handle_server.start()
        self.gesture_server.start()
        self._start_control()
        self._started_mono = time.monotonic()
        self.started = True

        for name, target in (
            ("pipeline-gesture", self._gesture_loop),
            ("pipeline-handle", self._handle_loop),
            ("snapshots", self._snapshot_loop),
            ("recorder", self._recorder_loop),
        ):
            thread = threading.Thread(target=target, name=name, daemon=True)
            thread.start()
            self._threads.append(thread)
        log.info(
            "gateway started",
            extra={"event": {
                "type": "started",
                "handle": self.handle_server.address,
                "gesture": self.gesture_server.address,
                "control": self.control_address,
            }},
        )

    def stop(self) -> None:
        if not self.started:
            return
        self.handle_server.stop()
        self.gesture_server.stop()
        self._stop.set()
        if self._control_sock is not None:
            try:
                self._control_sock.close()
            except OSError:
                pass
        deadline = time.monotonic() + SHUTDOWN_DEADLINE
        for thread in self._threads:
            thread.join(timeout=max(0.0, deadline - time.monotonic()))
        self._drain_recorder()
        with self._episode_lock:
            if self._episode is not None and not self._episode.closed:
                self._episode.finalize()
            self._episode = None
        for writer in self._snapshot_writers.values():
            try:
                writer.flush()
            except OSError:
                pass
        self.commands.close()
        self.started = False
        log.info("gateway stopped", extra={"event": {"type": "stopped"}})

    # -- pipelines ---------------------------------------------------------------

    def _current_episode(self, pipeline: StreamPipeline, seen_epoch: list[int]):
        with self._episode_lock:
            if seen_epoch[0] != self._episode_epoch:
                pipeline.reset()
                seen_epoch[0] = self._episode_epoch
            return self._episode

    def _gesture_loop(self) -> None:
        pipeline = self._pipelines["gesture"]
        stats = self._stats["gesture"]
        seen_epoch = [0]
        while not self._stop.is_set():
            event = self.gesture_server.frames.get(timeout=0.2)
            if event is None:
                continue
            episode = self._current_episode(pipeline, seen_epoch)
            try:
                result = pipeline.process_gesture(event.decoded, event.arrival_ms)
            except Exception:
                stats.mark_error()
                log.exception("gesture frame failed")
                continue
            if result is not None:
                self._dispatch(result, stats, episode)

    def _handle_loop(self) -> None:
        pipeline = self._pipelines["handle"]
        stats = self._stats["handle"]
        seen_epoch = [0]
        while not self._stop.is_set():
            event = self.handle_server.frames.get(timeout=0.2)
            if event is None:
                continue
            episode = self._current_episode(pipeline, seen_epoch)
            try:
                result = pipeline.process_handle(event.frame, event.arrival_ms)
            except Exception:
                stats.mark_error()
                log.exception("handle frame failed")
                continue
            if result is not None:
                self._dispatch(result, stats, episode)

    def _dispatch(
        self, result: PipelineResult, stats: _StreamStats, episode: Optional[EpisodeWriter]
    ) -> None:
        stats.mark(result.decision.executable)
        frame_doc = json.dumps(result.raw["frame"], separators=(",", ":"))
        self._snapshot_queue.put((f"{result.source}.json", frame_doc))
        if result.command is not None:
            self.commands.put(result.command)
            self._snapshot_queue.put(
                (f"command_{result.source}.json", json.dumps(result.command, separators=(",", ":")))
            )
        if episode is not None and not episode.closed:
            self._record_queue.put((episode, result))
        log.debug(
            "frame",
            extra={"event": {
                "type": "frame",
                "source": result.source,
                "executable": result.decision.executable,
                "layers": list(result.decision.layers),
                "reason": result.decision.reason,
            }},
        )

    # -- snapshot and recorder tasks ----------------------------------------------

    def _snapshot_writer(self, name: str) -> SnapshotWriter:
        writer = self._snapshot_writers.get(name)
        if writer is None:
            path = Path(self.config.snapshot_dir) / name
            writer = SnapshotWriter(path, min_interval=self.config.snapshot_interval)
            self._snapshot_writers[name] = writer
        return writer

    def _snapshot_loop(self) -> None:
        while not self._stop.is_set():
            item = self._snapshot_queue.get(timeout=0.2)
            if item is None:
                continue
            name, text = item
            try:
                self._snapshot_writer(name).offer(text)
            except OSError:
                log.exception("snapshot write failed")

    def _recorder_loop(self) -> None:
        while not self._stop.is_set():
            item = self._record_queue.get(timeout=0.2)
            if item is None:
                continue
            self._write_record(*item)

    def _drain_recorder(self) -> None:
        deadline = time.monotonic() + SHUTDOWN_DEADLINE
        while time.monotonic() < deadline:
            item = self._record_queue.get(timeout=0.05)
            if item is None:
                break
            self._write_record(*item)

    def _write_record(self, episode: EpisodeWriter, result: PipelineResult) -> None:
        if episode.closed:
            return
        record = EpisodeRecord(
            t=episode.next_t(),
            arrival_ms=result.arrival_ms,
            source=result.source,
            raw=result.raw,
            world_pose=result.world_pose,
            raw_angles=result.raw_angles,
            ik_angles=result.ik_angles,
            decision=result.decision,
            emitted=result.emitted,
        )
        episode.append(record)

    # -- recording control -----------------------------------------------------------

    def record_start(self, label: str) -> str:
        with self._episode_lock:
            if self._episode is not None and not self._episode.closed:
                raise GatewayError("already recording")
            episode_id = new_episode_id(label)
            quant = self.config.quantization
            self._episode = EpisodeWriter(
                self.config.episodes_dir,
                episode_id,
                label=label,
                filter_config=self.config.filter,
                chain_id=self.config.chain,
                sources=("gesture", "handle"),
                extra={
                    "pipeline": {
                        "ik": self.config.ik.to_dict(),
                        "quantization": {
                            "resolution": quant.resolution,
                            "apply_to_handle": quant.apply_to_handle,
                            "apply_to_gesture": quant.apply_to_gesture,
                        },
                        "gesture_handedness": self.config.gesture_handedness,
                        "handle_handedness": self.config.handle_handedness,
                        "button_mapping": self.config.button_mapping.to_dict(),
                    }
                },
            )
            self._episode_epoch += 1
            log.info(
                "recording started",
                extra={"event": {"type": "record-start", "episode_id": episode_id}},
            )
            return episode_id

    def record_stop(self) -> dict:
        with self._episode_lock:
            if self._episode is None or self._episode.closed:
                raise GatewayError("not recording")
            episode = self._episode
        # Give queued records a moment to land before sealing the manifest.
        deadline = time.monotonic() + SHUTDOWN_DEADLINE
        while len(self._record_queue) > 0 and time.monotonic() < deadline:
            time.sleep(0.02)
        with self._episode_lock:
            manifest = episode.finalize()
            self._episode = None
            self._episode_epoch += 1
        log.info(
            "recording stopped",
            extra={"event": {"type": "record-stop", "episode_id": manifest["episode_id"]}},
        )
        return manifest

    # -- status ---------------------------------------------------------------------

    def status(self) -> dict:
        with self._episode_lock:
            if self._episode is not None and not self._episode.closed:
                recording = {"state": "recording", "episode_id": self._episode.episode_id}
            else:
                recording = {"state": "idle"}
        return {
            "uptime_s": round(time.monotonic() - self._started_mono, 3) if self.started else 0.0,
            "recording": recording,
            "streams": {
                "gesture": {**self.gesture_server.status(), **self._stats["gesture"].snapshot()},
                "handle": {**self.handle_server.status(), **self._stats["handle"].snapshot()},
            },
            "commands_dropped": self.commands.dropped,
        }

    # -- control endpoint --------------------------------------------------------------

    @property
    def control_address(self) -> tuple[str, int]:
        if self._control_sock is None:
            raise RuntimeError("control endpoint not started")
        return self._control_sock.getsockname()[:2]

    def _start_control(self) -> None:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind(self.config.control_bind.as_tuple())
        sock.listen(8)
        sock.settimeout(0.2)
        self._control_sock = sock
        thread = threading.Thread(target=self._control_accept, name="control", daemon=True)
        thread.start()
        self._threads.append(thread)

    def _control_accept(self) -> None:
        assert self._control_sock is not None
        while not self._stop.is_set():
            try:
                conn, _addr = self._control_sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            worker = threading.Thread(
                target=self._control_client, args=(conn,), name="control-client", daemon=True
            )
            worker.start()
            self._threads.append(worker)

    def handle_control_command(self, command: str) -> dict:
        """Execute one control command and return the response document."""
        parts = command.strip().split()
        try:
            if parts == ["status"]:
                return {"ok": True, "result": self.status()}
            if parts == ["config", "get"]:
                return {"ok": True, "result": self.config.to_dict()}
            if len(parts) >= 2 and parts[:2] == ["record", "start"]:
                label = " ".join(parts[2:])
                return {"ok": True, "result": {"episode_id": self.record_start(label)}}
            if parts == ["record", "stop"]:
                return {"ok": True, "result": self.record_stop()}
        except GatewayError as exc:
            return {"ok": False, "error": str(exc)}
        return {"ok": False, "error": f"unknown command: {command.strip()!r}"}

    def _control_client(self, conn: socket.socket) -> None:
        conn.settimeout(5.0)
        reader = conn.makefile("rb")
        try:
            first = reader.readline(65536)
            if not first:
                return
            line = first.decode("utf-8", errors="replace").rstrip("\r\n")
            if line.startswith(("GET ", "POST ", "HEAD ")):
                self._serve_http(conn, reader, line)
                return
            # Plain line protocol; the connection may carry many requests.
            while not self._stop.is_set():
                response = self.handle_control_command(line)
                conn.sendall((json.dumps(response, separators=(",", ":")) + "\n").encode("utf-8"))
                nxt = reader.readline(65536)
                if not nxt:
                    break
                line = nxt.decode("utf-8", errors="replace").rstrip("\r\n")
        except (OSError, ValueError):
            pass
        finally:
            try:
                reader.close()
                conn.close()
            except OSError:
                pass

    def _serve_http(self, conn: socket.socket, reader, request_line: str) -> None:
        method, _, rest = request_line.partition(" ")
        path = rest.split(" ")[0]
        headers: dict[str, str] = {}
        while True:
            raw = reader.readline(65536)
            if not raw or raw in (b"\r\n", b"\n"):
                break
            key, _, value = raw.decode("utf-8", errors="replace").partition(":")
            headers[key.strip().lower()] = value.strip()

        def respond(status: str, body: bytes, content_type: str) -> None:
            head = (
                f"HTTP/1.1 {status}\r\n"
                f"Content-Type: {content_type}\r\n"
                f"Content-Length: {len(body)}\r\n"
                "Access-Control-Allow-Origin: *\r\n"
                "Connection: close\r\n\r\n"
            )
            conn.sendall(head.encode("utf-8") + body)

        if method == "GET" and path in ("/", "/index.html"):
            page = Path(self.config.ui_page) if self.config.ui_page else None
            if page is not None and page.exists():
                respond("200 OK", page.read_bytes(), "text/html; charset=utf-8")
            else:
                respond("404 Not Found", b"no operator page configured\n", "text/plain")
            return
        if method == "POST" and path == "/api":
            length = int(headers.get("content-length", "0"))
            body = reader.read(length) if length else b""
            command = body.decode("utf-8", errors="replace")
            response = self.handle_control_command(command)
            respond("200 OK", json.dumps(response).encode("utf-8"), "application/json")
            return
        respond("404 Not Found", b"unknown endpoint\n", "text/plain")


def pipeline_from_manifest(manifest: dict, source: str) -> StreamPipeline:
    """Rebuild one stream's pipeline exactly as recorded, for offline replay."""
    info = manifest.get("pipeline", {})
    chain = resolve_chain(manifest.get("chain_id") or "arm6")
    quant = info.get("quantization", {})
    policy = QuantizationPolicy(float(quant.get("resolution", 0.001)))
    if source == "gesture":
        apply_quant = bool(quant.get("apply_to_gesture", False))
        convention = BasisConvention.PICO_UNITY
    else:
        apply_quant = bool(quant.get("apply_to_handle", True))
        convention = BasisConvention.WEBXR
    config = PipelineConfig(
        source=source,
        convention=convention,
        filter_config=FilterConfig.from_dict(manifest["filter_config"]),
        ik_settings=IkSettings.from_dict(info.get("ik", {})),
        quantization=policy if apply_quant else None,
        handedness=info.get(f"{source}_handedness", "right"),
        button_mapping=ButtonMapping.from_dict(info.get("button_mapping", {})),
    )
    return StreamPipeline(config, chain)


def control_request(address: tuple[str, int], command: str, timeout: float = 5.0) -> dict:
    """Send one line-protocol control command and return the response."""
    with socket.create_connection(address, timeout=timeout) as sock:
        sock.sendall((command.strip() + "\n").encode("utf-8"))
        reader = sock.makefile("rb")
        line = reader.readline(1 << 20)
    if not line:
        raise GatewayError("empty control response")
    return json.loads(line)


def run_gateway(config: GatewayConfig, stop_event: Optional[threading.Event] = None) -> Gateway:
    """Start a gateway and block until the stop event (or KeyboardInterrupt)."""
    gateway = Gateway(config)
    gateway.start()
    try:
        while stop_event is None or not stop_event.is_set():
            time.sleep(0.2)
    except KeyboardInterrupt:
        pass
    finally:
        gateway.stop()
    return gateway

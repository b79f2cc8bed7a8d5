"""Durable episode logs for demonstration dataset construction.

An episode is a directory holding ``records.jsonl`` (one self-contained
JSON document per line, one pipeline step each) and ``manifest.json``
(written atomically on finalize). Appends are flushed on a configurable
interval, so a crash loses at most the tail after the last flush plus one
partial line, which replay skips.
"""
from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .model import Pose
from .motion_filter import FilterConfig, FilterDecision
from .wire.snapshot import snapshot_write

RECORDS_FILE = "records.jsonl"
MANIFEST_FILE = "manifest.json"


class EpisodeFormatError(ValueError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class EpisodeRecord:
    """One pipeline step: raw input through filter verdict to emitted command."""

    t: int
    arrival_ms: int
    source: str
    raw: dict
    world_pose: Pose
    raw_angles: tuple[float, ...]
    ik_angles: tuple[float, ...]
    decision: FilterDecision
    emitted: Optional[tuple[float, ...]]

    def __post_init__(self):
        if (self.emitted is not None) != self.decision.executable:
            raise ValueError("emitted must be present exactly when the decision is executable")

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "arrival_ms": self.arrival_ms,
            "source": self.source,
            "raw": self.raw,
            "world_pose": {
                "position": list(self.world_pose.position),
                "orientation": list(self.world_pose.orientation),
            },
            "raw_angles": list(self.raw_angles),
            "ik_angles": list(self.ik_angles),
            "decision": self.decision.to_dict(),
            "emitted": list(self.emitted) if self.emitted is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EpisodeRecord":
        emitted = data.get("emitted")
        return cls(
            t=int(data["t"]),
            arrival_ms=int(data["arrival_ms"]),
            source=data["source"],
            raw=data["raw"],
            world_pose=Pose(
                tuple(data["world_pose"]["position"]),
                tuple(data["world_pose"]["orientation"]),
            ),
            raw_angles=tuple(float(v) for v in data["raw_angles"]),
            ik_angles=tuple(float(v) for v in data["ik_angles"]),
            decision=FilterDecision.from_dict(data["decision"]),
            emitted=tuple(float(v) for v in emitted) if emitted is not None else None,
        )


def new_episode_id(label: str = "") -> str:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    suffix = uuid.uuid4().hex[:6]
    slug = "".join(c if c.isalnum() or c in "-_" else "-" for c in label)[:32].strip("-")
    return f"{stamp}-{slug}-{suffix}" if slug else f"{stamp}-{suffix}"


class EpisodeWriter:
    """Single-writer appender for one episode directory."""

    def __init__(
        self,
        root: str | Path,
        episode_id: str,
        label: str = "",
        filter_config: Optional[FilterConfig] = None,
        chain_id: str = "",
        sources: tuple[str, ...] = (),
        flush_interval: float = 0.1,
        extra: Optional[dict] = None,
    ):
        self.directory = Path(root) / episode_id
        self.directory.mkdir(parents=True, exist_ok=True)
        self.episode_id = episode_id
        self.label = label
        self.filter_config = filter_config or FilterConfig()
        self.chain_id = chain_id
        self.sources = tuple(sources)
        self.flush_interval = flush_interval
        self.extra = dict(extra or {})
        self.started_ms = int(time.time() * 1000)
        self.frame_count = 0
        self.accepted_count = 0
        self.truncated: Optional[str] = None
        self._next_t = 0
        self._last_flush = time.monotonic()
        self._lock = threading.Lock()
        self._closed = False
        self._fh = open(self.directory / RECORDS_FILE, "a", encoding="utf-8")

    @property
    def closed(self) -> bool:
        return self._closed

    def next_t(self) -> int:
        with self._lock:
            t = self._next_t
            self._next_t += 1
            return t

    def append(self, record: EpisodeRecord) -> bool:
        """Append one record; False once the episode is closed or failed."""
        with self._lock:
            if self._closed:
                return False
            try:
                self._fh.write(json.dumps(record.to_dict(), separators=(",", ":")) + "\n")
                now = time.monotonic()
                if now - self._last_flush >= self.flush_interval:
                    self._fh.flush()
                    self._last_flush = now
            except (OSError, ValueError) as exc:
                self.truncated = f"write failed: {exc}"
                self._finalize_locked()
                return False
            self.frame_count += 1
            if record.decision.executable:
                self.accepted_count += 1
            return True

    def finalize(self) -> dict:
        """Flush, close, and atomically write the manifest."""
        with self._lock:
            return self._finalize_locked()

    def _finalize_locked(self) -> dict:
        if not self._closed:
            self._closed = True
            try:
                self._fh.flush()
                os.fsync(self._fh.fileno())
            except (OSError, ValueError):
                pass
            try:
                self._fh.close()
            except (OSError, ValueError):
                pass
        manifest = self.manifest()
        snapshot_write(self.directory / MANIFEST_FILE, json.dumps(manifest, indent=2))
        return manifest

    def manifest(self) -> dict:
        manifest = {
            "episode_id": self.episode_id,
            "label": self.label,
            "started_ms": self.started_ms,
            "ended_ms": int(time.time() * 1000),
            "filter_config": self.filter_config.to_dict(),
            "chain_id": self.chain_id,
            "frame_count": self.frame_count,
            "accepted_count": self.accepted_count,
            "sources": list(self.sources),
            "truncated": self.truncated,
        }
        manifest.update(self.extra)
        return manifest


def read_manifest(directory: str | Path) -> dict:
    with open(Path(directory) / MANIFEST_FILE, "r", encoding="utf-8") as fh:
        return json.load(fh)


@dataclass
class ReplayReport:
    streamed: int = 0
    skipped: int = 0
    duration_s: float = 0.0


def read_records(
    directory: str | Path, strict: bool = False
) -> tuple[list[EpisodeRecord], int]:
    """Load every complete record; returns (records, skipped_lines).

    A trailing line without a newline is treated as a crash artifact and
    skipped silently. Malformed interior lines are skipped and counted, or
    abort with their line number in strict mode.
    """
    path = Path(directory) / RECORDS_FILE
    records: list[EpisodeRecord] = []
    skipped = 0
    with open(path, "r", encoding="utf-8", newline="") as fh:
        content = fh.read()
    lines = content.split("\n")
    incomplete_tail = lines and lines[-1] != ""
    body = lines[:-1]
    if incomplete_tail:
        skipped += 1
    for number, line in enumerate(body, start=1):
        if not line.strip():
            continue
        try:
            records.append(EpisodeRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            if strict:
                raise EpisodeFormatError(str(exc), number) from exc
            skipped += 1
    return records, skipped


def replay(
    directory: str | Path,
    sink: Callable[[EpisodeRecord], None],
    timing: str = "max-speed",
    strict: bool = False,
) -> ReplayReport:
    """Stream records to sink in t order.

    ``as-recorded`` timing reproduces the original inter-record intervals
    from arrival timestamps; ``max-speed`` ignores timing entirely.
    """
    if timing not in ("as-recorded", "max-speed"):
        raise ValueError(f"unknown timing mode {timing!r}")
    records, skipped = read_records(directory, strict=strict)
    records.sort(key=lambda r: r.t)
    report = ReplayReport(skipped=skipped)
    started = time.perf_counter()
    first_arrival = records[0].arrival_ms if records else 0
    for record in records:
        if timing == "as-recorded":
            deadline = started + (record.arrival_ms - first_arrival) / 1000.0
            delay = deadline - time.perf_counter()
            if delay > 0:
                time.sleep(delay)
        sink(record)
        report.streamed += 1
    report.duration_s = time.perf_counter() - started
    return report

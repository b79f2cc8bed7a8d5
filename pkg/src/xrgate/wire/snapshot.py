"""Atomic latest-frame snapshot files.

A snapshot is a whole-document replace: write to a uniquely named temp file
in the same directory, flush, then rename over the target. Readers polling
the target path therefore see either the previous complete document or the
new one, never a partial write. Only the latest document is retained.
"""
from __future__ import annotations

import os
import threading
import time
import uuid
from pathlib import Path

_path_locks: dict[str, threading.Lock] = {}
_path_locks_guard = threading.Lock()


def _lock_for(path: str) -> threading.Lock:
    with _path_locks_guard:
        lock = _path_locks.get(path)
        if lock is None:
            lock = _path_locks[path] = threading.Lock()
        return lock


def snapshot_write(path: str | Path, text: str, durable: bool = False) -> None:
    """Atomically replace ``path`` with ``text``.

    ``durable=True`` adds an fsync before the rename for crash-durability;
    the default skips it since snapshot consumers only need partial-read
    safety, which the rename alone provides. Failures leave any previous
    snapshot intact and propagate with the path attached.
    """
    path = str(path)
    tmp = f"{path}.tmp.{uuid.uuid4().hex[:12]}"
    with _lock_for(path):
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(text)
                fh.flush()
                if durable:
                    os.fsync(fh.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise OSError(f"snapshot write to {path} failed: {exc}") from exc


class SnapshotWriter:
    """Rate-limited snapshot writer for one path.

    ``offer`` keeps only the newest document and writes at most once per
    ``min_interval`` seconds; ``flush`` forces out any pending document so
    the final frame always lands on shutdown.
    """

    def __init__(self, path: str | Path, min_interval: float = 0.016, durable: bool = False):
        self.path = str(path)
        self.min_interval = min_interval
        self.durable = durable
        self._pending: str | None = None
        self._last_write = -float("inf")
        self._lock = threading.Lock()
        self.writes = 0

    def offer(self, text: str, now: float | None = None) -> bool:
        with self._lock:
            now = time.monotonic() if now is None else now
            if now - self._last_write < self.min_interval:
                self._pending = text
                return False
            self._write(text, now)
            return True

    def flush(self) -> bool:
        with self._lock:
            if self._pending is None:
                return False
            self._write(self._pending, time.monotonic())
            return True

    def _write(self, text: str, now: float) -> None:
        snapshot_write(self.path, text, durable=self.durable)
        self._pending = None
        self._last_write = now
        self.writes += 1

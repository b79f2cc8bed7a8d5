"""Gateway configuration: one declarative JSON document, flat CLI overrides.

Every override is ``key=value`` with dotted keys mapping 1:1 onto config
fields, e.g. ``filter.min_move=0.004`` or ``hand_bind.port=9100``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .kinematics import IkSettings, KinematicChain, load_bundled_chain
from .motion_filter import FilterConfig
from .pipeline import ButtonMapping


def resolve_chain(ref: str) -> KinematicChain:
    """Load a chain by bundled fixture name or filesystem path."""
    if "/" in ref or "\\" in ref or ref.endswith(".json"):
        return KinematicChain.load(ref)
    return load_bundled_chain(ref)


@dataclass(frozen=True)
class BindAddress:
    host: str = "127.0.0.1"
    port: int = 0

    def as_tuple(self) -> tuple[str, int]:
        return (self.host, self.port)


@dataclass(frozen=True)
class TlsConfig:
    enabled: bool = False
    cert_path: str = ""
    key_path: str = ""


@dataclass(frozen=True)
class QuantizationConfig:
    resolution: float = 0.001
    apply_to_handle: bool = True
    apply_to_gesture: bool = False


@dataclass(frozen=True)
class GatewayConfig:
    handle_bind: BindAddress = BindAddress(port=8765)
    hand_bind: BindAddress = BindAddress(port=8766)
    control_bind: BindAddress = BindAddress(port=8767)
    tls: TlsConfig = TlsConfig()
    filter: FilterConfig = FilterConfig()
    ik: IkSettings = IkSettings()
    quantization: QuantizationConfig = QuantizationConfig()
    chain: str = "arm6"
    snapshot_dir: str = "snapshots"
    snapshot_interval: float = 0.016
    episodes_dir: str = "episodes"
    queue_capacity: int = 256
    log_level: str = "info"
    gesture_handedness: str = "right"
    handle_handedness: str = "right"
    button_mapping: ButtonMapping = ButtonMapping()
    ui_page: str = ""

    def to_dict(self) -> dict:
        return {
            "handle_bind": {"host": self.handle_bind.host, "port": self.handle_bind.port},
            "hand_bind": {"host": self.hand_bind.host, "port": self.hand_bind.port},
            "control_bind": {"host": self.control_bind.host, "port": self.control_bind.port},
            "tls": {
                "enabled": self.tls.enabled,
                "cert_path": self.tls.cert_path,
                "key_path": self.tls.key_path,
            },
            "filter": self.filter.to_dict(),
            "ik": self.ik.to_dict(),
            "quantization": {
                "resolution": self.quantization.resolution,
                "apply_to_handle": self.quantization.apply_to_handle,
                "apply_to_gesture": self.quantization.apply_to_gesture,
            },
            "chain": self.chain,
            "snapshot_dir": self.snapshot_dir,
            "snapshot_interval": self.snapshot_interval,
            "episodes_dir": self.episodes_dir,
            "queue_capacity": self.queue_capacity,
            "log_level": self.log_level,
            "gesture_handedness": self.gesture_handedness,
            "handle_handedness": self.handle_handedness,
            "button_mapping": self.button_mapping.to_dict(),
            "ui_page": self.ui_page,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GatewayConfig":
        defaults = cls()

        def bind(key: str, fallback: BindAddress) -> BindAddress:
            entry = data.get(key, {})
            return BindAddress(
                host=entry.get("host", fallback.host), port=int(entry.get("port", fallback.port))
            )

        tls = data.get("tls", {})
        quant = data.get("quantization", {})
        return cls(
            handle_bind=bind("handle_bind", defaults.handle_bind),
            hand_bind=bind("hand_bind", defaults.hand_bind),
            control_bind=bind("control_bind", defaults.control_bind),
            tls=TlsConfig(
                enabled=bool(tls.get("enabled", False)),
                cert_path=tls.get("cert_path", ""),
                key_path=tls.get("key_path", ""),
            ),
            filter=FilterConfig.from_dict(data["filter"]) if "filter" in data else FilterConfig(),
            ik=IkSettings.from_dict(data.get("ik", {})),
            quantization=QuantizationConfig(
                resolution=float(quant.get("resolution", 0.001)),
                apply_to_handle=bool(quant.get("apply_to_handle", True)),
                apply_to_gesture=bool(quant.get("apply_to_gesture", False)),
            ),
            chain=data.get("chain", defaults.chain),
            snapshot_dir=data.get("snapshot_dir", defaults.snapshot_dir),
            snapshot_interval=float(data.get("snapshot_interval", defaults.snapshot_interval)),
            episodes_dir=data.get("episodes_dir", defaults.episodes_dir),
            queue_capacity=int(data.get("queue_capacity", defaults.queue_capacity)),
            log_level=data.get("log_level", defaults.log_level),
            gesture_handedness=data.get("gesture_handedness", defaults.gesture_handedness),
            handle_handedness=data.get("handle_handedness", defaults.handle_handedness),
            button_mapping=ButtonMapping.from_dict(data.get("button_mapping", {})),
            ui_page=data.get("ui_page", ""),
        )


def load_config(path: str | Path) -> GatewayConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return GatewayConfig.from_dict(json.load(fh))


def _coerce(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    return value


def apply_overrides(config: GatewayConfig, overrides: list[str]) -> GatewayConfig:
    """Apply ``key=value`` overrides onto the config's dict form."""
    data = config.to_dict()
    for override in overrides:
        if "=" not in override:
            raise ValueError(f"override {override!r} is not key=value")
        key, _, raw_value = override.partition("=")
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ValueError(f"unknown config key {key!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ValueError(f"unknown config key {key!r}")
        node[parts[-1]] = _coerce(raw_value.strip())
    return GatewayConfig.from_dict(data)


def validate_config(config: GatewayConfig) -> list[str]:
    """List every startup-blocking problem; empty means runnable."""
    problems: list[str] = []
    ports = [config.handle_bind.port, config.hand_bind.port, config.control_bind.port]
    named = [p for p in ports if p != 0]
    if len(set(named)) != len(named):
        problems.append(f"ports must be distinct, got {ports}")
    if config.tls.enabled:
        for label, path in (("cert", config.tls.cert_path), ("key", config.tls.key_path)):
            if not path:
                problems.append(f"tls enabled but {label}_path is empty")
            elif not Path(path).exists():
                problems.append(f"tls {label}_path does not exist: {path}")
    try:
        resolve_chain(config.chain)
    except (OSError, ValueError, KeyError) as exc:
        problems.append(f"chain {config.chain!r} failed to load: {exc}")
    for label, directory in (
        ("snapshot_dir", config.snapshot_dir),
        ("episodes_dir", config.episodes_dir),
    ):
        parent = Path(directory).resolve().parent
        if not parent.exists():
            problems.append(f"{label} parent directory does not exist: {parent}")
    if config.queue_capacity < 1:
        problems.append("queue_capacity must be >= 1")
    if config.snapshot_interval < 0:
        problems.append("snapshot_interval must be >= 0")
    if config.gesture_handedness not in ("left", "right"):
        problems.append("gesture_handedness must be left or right")
    if config.handle_handedness not in ("left", "right"):
        problems.append("handle_handedness must be left or right")
    if config.ui_page and not Path(config.ui_page).exists():
        problems.append(f"ui_page does not exist: {config.ui_page}")
    return problems

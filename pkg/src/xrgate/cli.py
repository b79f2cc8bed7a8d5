"""Command line entry points.

    xrgate gateway run --config gateway.json [--override filter.min_move=0.004 ...]
    xrgate gateway validate-config gateway.json
    xrgate simulate --mode gesture --rate 60 --duration 10 --seed 7 --target 127.0.0.1:8766
    xrgate control --target 127.0.0.1:8767 status
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import threading
import time

from .config import apply_overrides, load_config, validate_config
from .gateway import control_request, run_gateway
from .simulator import (
    NoiseSpec,
    TrajectorySpec,
    emit_gesture_stream,
    emit_handle_stream,
    generate_frames,
)


class JsonLogFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        doc = {
            "ts": round(record.created, 3),
            "level": record.levelname.lower(),
            "logger": record.name,
            "message": record.getMessage(),
        }
        event = getattr(record, "event", None)
        if event is not None:
            doc["event"] = event
        return json.dumps(doc, separators=(",", ":"))


def configure_logging(level: str) -> None:
    handler = logging.StreamHandler()
    handler.setFormatter(JsonLogFormatter())
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(getattr(logging, level.upper(), logging.INFO))


def _parse_address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"address must be host:port, got {text!r}")
    return (host, int(port))


def _cmd_gateway_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.override:
        config = apply_overrides(config, args.override)
    problems = validate_config(config)
    if problems:
        for problem in problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    configure_logging(config.log_level)
    run_gateway(config)
    return 0


def _cmd_gateway_validate(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    problems = validate_config(config)
    for problem in problems:
        print(f"config error: {problem}", file=sys.stderr)
    if not problems:
        print("config ok")
    return 2 if problems else 0


def _load_specs(path: str | None, seed: int) -> tuple[TrajectorySpec, NoiseSpec]:
    if path is None:
        return TrajectorySpec(), NoiseSpec(seed=seed)
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    noise_data = dict(data.get("noise", {}))
    noise_data.setdefault("seed", seed)
    return (
        TrajectorySpec.from_dict(data.get("trajectory", {})),
        NoiseSpec.from_dict(noise_data),
    )


def _cmd_simulate(args: argparse.Namespace) -> int:
    trajectory, noise = _load_specs(args.trajectory, args.seed)
    frames = generate_frames(
        trajectory,
        noise,
        rate=args.rate,
        duration=args.duration,
        start_time_ms=args.start_ms if args.start_ms is not None else int(time.time() * 1000),
    )
    reports = {}

    def run_gesture():
        reports["gesture"] = emit_gesture_stream(
            frames, args.target, args.rate, handedness=args.handedness
        )

    def run_handle():
        target = args.handle_target or args.target
        reports["handle"] = emit_handle_stream(
            frames, target, args.rate, handedness=args.handedness
        )

    workers = []
    if args.mode in ("gesture", "both"):
        workers.append(threading.Thread(target=run_gesture))
    if args.mode in ("handle", "both"):
        workers.append(threading.Thread(target=run_handle))
    for w in workers:
        w.start()
    for w in workers:
        w.join()
    print(json.dumps({k: v.to_dict() for k, v in reports.items()}, indent=2))
    return 0


def _cmd_control(args: argparse.Namespace) -> int:
    response = control_request(args.target, " ".join(args.command))
    print(json.dumps(response, indent=2))
    return 0 if response.get("ok") else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xrgate")
    sub = parser.add_subparsers(dest="command", required=True)

    gateway = sub.add_parser("gateway", help="run or validate the gateway service")
    gateway_sub = gateway.add_subparsers(dest="gateway_command", required=True)
    run = gateway_sub.add_parser("run", help="start the gateway")
    run.add_argument("--config", required=True)
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    run.set_defaults(func=_cmd_gateway_run)
    validate = gateway_sub.add_parser("validate-config", help="check a config file")
    validate.add_argument("config")
    validate.set_defaults(func=_cmd_gateway_validate)

    simulate = sub.add_parser("simulate", help="emit synthetic device streams")
    simulate.add_argument("--mode", choices=("gesture", "handle", "both"), default="gesture")
    simulate.add_argument("--trajectory", help="trajectory/noise spec JSON file")
    simulate.add_argument("--rate", type=float, default=60.0)
    simulate.add_argument("--duration", type=float, default=10.0)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--target", type=_parse_address, required=True)
    simulate.add_argument(
        "--handle-target",
        type=_parse_address,
        help="handle stream address when --mode both (default: --target)",
    )
    simulate.add_argument("--handedness", choices=("left", "right"), default="right")
    simulate.add_argument("--start-ms", type=int, help="nominal first-frame timestamp")
    simulate.set_defaults(func=_cmd_simulate)

    control = sub.add_parser("control", help="send one control command")
    control.add_argument("--target", type=_parse_address, required=True)
    control.add_argument("command", nargs="+")
    control.set_defaults(func=_cmd_control)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

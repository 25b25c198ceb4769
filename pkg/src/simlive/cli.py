"""simhost: serve a simulation instance, or talk to one headlessly.

    simhost serve --config csma.json [--port N --seed N --pace F
                                      --protocol csma|tdma --label S]
    simhost call ws://localhost:9002 sim.info ['[0.25]' | '{"name":"grid"}']
    simhost tail ws://localhost:9002 stats.power --count 3 | --seconds 10

Exit codes: 0 ok, 1 remote/usage error, 2 bad configuration, 3 bind failure.
SIMHOST_LOG sets the log level (debug/info/warning/error).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
import threading
import time

from .config import ConfigError, InstanceConfig, load_config
from .endpoint import (
    BindFailure, CallTimeout, Client, ConnectFailed, PortInUse, RemoteError,
)
from .host import SimHost

log = logging.getLogger("simhost")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_BIND = 3


def _setup_logging() -> None:
    level = os.environ.get("SIMHOST_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simhost",
        description="live-steerable network simulation host and client tools")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run one simulation instance")
    serve.add_argument("--config", help="JSON configuration file")
    serve.add_argument("--port", type=int)
    serve.add_argument("--seed", type=int)
    serve.add_argument("--pace", type=float)
    serve.add_argument("--protocol", choices=["csma", "tdma"])
    serve.add_argument("--label")
    serve.add_argument("--preset", help="built-in preset name or topology file")

    call = sub.add_parser("call", help="invoke a remote procedure once")
    call.add_argument("url")
    call.add_argument("procedure")
    call.add_argument("json_args", nargs="?",
                      help="JSON array for positional or object for keyword args")
    call.add_argument("--timeout", type=float, default=5.0)

    tail = sub.add_parser("tail", help="stream a topic as JSON lines")
    tail.add_argument("url")
    tail.add_argument("topic")
    group = tail.add_mutually_exclusive_group()
    group.add_argument("--count", type=int, help="stop after N events")
    group.add_argument("--seconds", type=float, help="stop after S wall seconds")
    return parser


def _serve(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config) if args.config else InstanceConfig()
        for name in ("port", "seed", "pace", "protocol", "label", "preset"):
            value = getattr(args, name)
            if value is not None:
                setattr(config, name, value)
        config.validate()
        host = SimHost(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        host.start()
    except (PortInUse, BindFailure) as exc:
        print(f"bind failure: {exc}", file=sys.stderr)
        return EXIT_BIND
    print(f"listening on {host.url} "
          f"({config.protocol}, preset {config.preset}, seed {config.seed})",
          flush=True)
    stop_requested = threading.Event()
    signal.signal(signal.SIGTERM, lambda *_: stop_requested.set())
    try:
        while not stop_requested.is_set():
            time.sleep(0.2)
    except KeyboardInterrupt:
        pass
    finally:
        host.stop()
    return EXIT_OK


def _parse_call_args(raw: str | None) -> tuple[list, dict]:
    if raw is None:
        return [], {}
    try:
        value = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"arguments are not valid JSON: {exc}") from exc
    if isinstance(value, list):
        return value, {}
    if isinstance(value, dict):
        return [], value
    return [value], {}


def _format_payload(args: list, kwargs: dict) -> str:
    if len(args) == 1 and not kwargs:
        return json.dumps(args[0], ensure_ascii=False)
    return json.dumps({"args": args, "kwargs": kwargs}, ensure_ascii=False)


def _call(args: argparse.Namespace) -> int:
    try:
        call_args, call_kwargs = _parse_call_args(args.json_args)
    except ValueError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    try:
        with Client(args.url, call_timeout=args.timeout) as client:
            result_args, result_kwargs = client.call(args.procedure,
                                                     call_args, call_kwargs)
    except RemoteError as exc:
        print(exc.uri, file=sys.stderr)
        return EXIT_ERROR
    except (ConnectFailed, CallTimeout) as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    print(_format_payload(result_args, result_kwargs))
    return EXIT_OK


def _tail(args: argparse.Namespace) -> int:
    stop = threading.Event()
    seen = 0

    def sink(event_args: list, event_kwargs: dict) -> None:
        nonlocal seen
        print(_format_payload(event_args, event_kwargs), flush=True)
        seen += 1
        if args.count is not None and seen >= args.count:
            stop.set()

    try:
        client = Client(args.url)
    except ConnectFailed as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    try:
        subscription = client.subscribe(args.topic, sink)
        deadline = (time.monotonic() + args.seconds
                    if args.seconds is not None else None)
        while not stop.is_set():
            if deadline is not None and time.monotonic() >= deadline:
                break
            time.sleep(0.05)
        client.unsubscribe(subscription)
    except KeyboardInterrupt:
        try:
            client.unsubscribe(subscription)
        except Exception:
            pass
    except (ConnectFailed, CallTimeout, RemoteError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    finally:
        client.close()
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return _serve(args)
    if args.command == "call":
        return _call(args)
    return _tail(args)


if __name__ == "__main__":
    sys.exit(main())

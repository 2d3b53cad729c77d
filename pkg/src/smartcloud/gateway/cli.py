"""smartcloud-gateway entry point."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

import uvicorn

from smartcloud.apps.classifier import load_classifier_config
from smartcloud.gateway.server import create_server
from smartcloud.gateway.state import DEFAULT_QUEUE_CAP, GatewayState
from smartcloud.registry import load_registry_file


def parse_listen(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected host:port, got {value!r}")
    return host, int(port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smartcloud-gateway", description=__doc__)
    parser.add_argument("--listen", type=parse_listen, default=("127.0.0.1", 9090),
                        metavar="HOST:PORT", help="bind address (default 127.0.0.1:9090)")
    parser.add_argument("--registry", type=Path, default=None,
                        help="registry file (default: built-in registry)")
    parser.add_argument("--fixtures", type=Path, default=None,
                        help="classifier fixture manifest (default: built-in manifest if present)")
    parser.add_argument("--strict-advertise", action="store_true",
                        help="reject publishes on unadvertised topics")
    parser.add_argument("--queue-cap", type=int, default=DEFAULT_QUEUE_CAP,
                        help="per-instance input queue bound")
    parser.add_argument("--ui", type=Path, default=None,
                        help="static console directory to serve under /ui")
    parser.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"])
    return parser


def default_fixture_manifest() -> Path | None:
    from importlib import resources

    candidate = resources.files("smartcloud.data") / "fixtures" / "manifest.json"
    try:
        if candidate.is_file():
            return Path(str(candidate))
    except (OSError, TypeError):
        pass
    return None


def main(argv: "list[str] | None" = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    registry = load_registry_file(args.registry) if args.registry else None
    fixtures = args.fixtures or default_fixture_manifest()
    classifier_config = load_classifier_config(fixtures) if fixtures else None
    state = GatewayState(
        registry=registry,
        classifier_config=classifier_config,
        queue_cap=args.queue_cap,
        strict_advertise=args.strict_advertise,
    )
    ui_dir = args.ui if args.ui else None
    app = create_server(state, ui_dir=ui_dir)
    host, port = args.listen
    uvicorn.run(app, host=host, port=port, log_level=args.log_level)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

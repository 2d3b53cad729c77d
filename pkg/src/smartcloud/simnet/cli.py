"""smartcloud-sim: run a scripted heterogeneous mission.

Self-hosts a gateway unless one is given, optionally puts a fixed-delay proxy
between the robots and the gateway, and writes the mission event log as
newline-delimited JSON.
"""

from __future__ import annotations

import argparse
import asyncio
import contextlib
import dataclasses
import logging
import sys
from pathlib import Path

from smartcloud.simnet.proxy import DelayProxy, ProxyConfig
from smartcloud.simnet.scenario import (
    ScenarioError,
    default_scenario,
    load_scenario_file,
    run_scenario,
)
from smartcloud.simnet.world import default_world, load_world_file

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smartcloud-sim",
        description="drive simulated robots through a scripted mission",
    )
    parser.add_argument("--world", type=Path, default=None,
                        help="world file (default: built-in office floor)")
    parser.add_argument("--scenario", type=Path, default=None,
                        help="scenario file (default: built-in circuit with target frame)")
    parser.add_argument("--no-target", action="store_true",
                        help="with the built-in scenario, drop the target frame")
    parser.add_argument("--gateway", default=None, metavar="HOST:PORT",
                        help="use a running gateway instead of self-hosting one")
    parser.add_argument("--proxy-rtt", type=float, default=None, metavar="MS",
                        help="route robots through a delay proxy with this round trip")
    parser.add_argument("--fixtures", type=Path, default=None,
                        help="directory with camera frames (default: built-in fixtures)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")
    parser.add_argument("--log", type=Path, default=None,
                        help="write the event log here instead of stdout")
    parser.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"])
    return parser


def main(argv: "list[str] | None" = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    world = load_world_file(args.world) if args.world else default_world()
    if args.scenario:
        script = load_scenario_file(args.scenario)
        if args.no_target:
            logger.warning("--no-target only affects the built-in scenario; ignored")
    else:
        script = default_scenario(with_target=not args.no_target)
    if args.seed is not None:
        script = dataclasses.replace(script, seed=args.seed)

    with contextlib.ExitStack() as stack:
        if args.gateway:
            gateway = args.gateway
        else:
            from smartcloud.apps.classifier import load_classifier_config
            from smartcloud.gateway.cli import default_fixture_manifest
            from smartcloud.gateway.runner import ServerHandle
            from smartcloud.gateway.state import GatewayState

            manifest = default_fixture_manifest()
            state = GatewayState(
                classifier_config=load_classifier_config(manifest) if manifest else None
            )
            handle = stack.enter_context(ServerHandle(state))
            gateway = handle.address
            logger.info("self-hosted gateway on %s", gateway)
        if args.proxy_rtt is not None:
            host, _, port = gateway.partition(":")
            proxy = DelayProxy(
                (host, int(port)),
                ProxyConfig(one_way_ms=args.proxy_rtt / 2.0),
                seed=script.seed,
            ).start(probe=True)
            stack.callback(proxy.stop)
            gateway = f"{proxy.listen_host}:{proxy.port}"
            logger.info("delay proxy on %s (rtt %.1f ms)", gateway, args.proxy_rtt)

        try:
            result = asyncio.run(
                run_scenario(script, world=world, gateway=gateway,
                             fixtures_dir=args.fixtures)
            )
        except ScenarioError as exc:
            logger.error("%s", exc)
            return 1

    text = result.event_log_text()
    if args.log:
        args.log.write_text(text, encoding="utf-8")
        logger.info("wrote %d events to %s", len(result.events), args.log)
    else:
        sys.stdout.write(text)
    logger.info(
        "mission done: %d scans, %d frames, final entropy %s bits",
        result.scans_streamed,
        result.frames_posted,
        f"{result.entropy_series[-1][1]:.1f}" if result.entropy_series else "n/a",
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

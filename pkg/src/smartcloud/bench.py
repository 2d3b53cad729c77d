"""smartcloud-bench: latency and CPU measurements against a gateway.

Two measurements mirror the system's headline claims. ``latency`` drives the
gateway echo service through a delay proxy and separates client-measured
round trip from server-measured processing; ``cpu`` compares a robot process
that maps onboard with one that streams the same scans to the gateway.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from contextlib import ExitStack
from pathlib import Path

from smartcloud.metrics import CpuWatcher, LatencyRecorder, MetricsError
from smartcloud.simnet.cpu_experiment import CpuExperimentConfig, run_cpu_experiment
from smartcloud.simnet.proxy import DelayProxy, ProxyConfig

logger = logging.getLogger(__name__)

ECHO_SERVICE = "/smartcloud/echo"


class BenchError(Exception):
    pass


def parse_duration_ms(value: str) -> float:
    """"250ms", "1.5s", or a bare number of milliseconds."""
    text = value.strip().lower()
    try:
        if text.endswith("ms"):
            return float(text[:-2])
        if text.endswith("s"):
            return float(text[:-1]) * 1000.0
        return float(text)
    except ValueError:
        raise BenchError(f"cannot parse duration {value!r}") from None


async def _echo_trips(
    gateway: str,
    count: int,
    payload_bytes: int,
    recorder: LatencyRecorder,
    injected_ns: int = 0,
) -> None:
    from smartcloud.simnet.robot import RosRobotClient

    bot = await RosRobotClient(f"ws://{gateway}", "bench").connect()
    try:
        pad = "x" * payload_bytes
        for i in range(count):
            args = {"seq": i, "pad": pad} if pad else {"seq": i}
            sent = time.perf_counter_ns()
            response = await bot.call_service(ECHO_SERVICE, args=args)
            received = time.perf_counter_ns()
            if not response.result or not isinstance(response.values, dict):
                raise BenchError(f"echo call {i} failed: {response!r}")
            recorder.record_rtt(
                sent, received, int(response.values["processing_ns"]), injected_ns
            )
    finally:
        await bot.close()


def run_latency_bench(
    gateway: "str | None" = None,
    proxy_rtt_ms: "float | None" = 32.0,
    count: int = 1000,
    payload_bytes: int = 0,
    seed: int = 0,
) -> LatencyRecorder:
    """Echo benchmark; self-hosts the gateway when no address is given.

    proxy_rtt_ms=None connects directly (overhead baseline); otherwise the
    calls cross a delay proxy adding half that value each way.
    """
    import asyncio

    recorder = LatencyRecorder()
    with ExitStack() as stack:
        if gateway is None:
            from smartcloud.gateway.runner import ServerHandle

            handle = stack.enter_context(ServerHandle())
            gateway = handle.address
        injected_ns = 0
        if proxy_rtt_ms is not None:
            host, _, port = gateway.partition(":")
            proxy = DelayProxy(
                (host, int(port)),
                ProxyConfig(one_way_ms=proxy_rtt_ms / 2.0),
                seed=seed,
            ).start(probe=True)
            stack.callback(proxy.stop)
            gateway = f"{proxy.listen_host}:{proxy.port}"
            injected_ns = int(proxy_rtt_ms * 1e6)
        asyncio.run(_echo_trips(gateway, count, payload_bytes, recorder, injected_ns))
    return recorder


def _write_latency_csv(path: Path, recorder: LatencyRecorder) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seq", "sent_ns", "received_ns", "processing_ns",
                         "rtt_ms", "processing_ms"])
        for i, s in enumerate(recorder.samples()):
            writer.writerow([i, s.sent_at_ns, s.received_at_ns, s.processing_ns,
                             f"{s.rtt_ns / 1e6:.6f}", f"{s.processing_ns / 1e6:.6f}"])


def _cmd_latency(args: argparse.Namespace) -> int:
    proxy_rtt = None if args.direct else args.proxy_rtt
    recorder = run_latency_bench(
        gateway=args.gateway,
        proxy_rtt_ms=proxy_rtt,
        count=args.count,
        payload_bytes=args.payload_bytes,
        seed=args.seed,
    )
    if args.csv:
        _write_latency_csv(args.csv, recorder)
        logger.info("wrote %d samples to %s", len(recorder), args.csv)
    doc = {
        "count": len(recorder),
        "proxy_rtt_ms": proxy_rtt,
        "rtt_ms": recorder.rtt_summary_ms().to_wire(),
        "processing_ms": recorder.processing_summary_ms().to_wire(),
        "overhead_ms": recorder.overhead_summary_ms().to_wire(),
    }
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_cpu(args: argparse.Namespace) -> int:
    if args.watch is not None:
        duration_ms = parse_duration_ms(args.duration)
        watcher = CpuWatcher(args.watch, interval_s=args.interval).start()
        time.sleep(duration_ms / 1000.0)
        samples = watcher.stop()
        if not samples:
            raise BenchError(f"no samples for pid {args.watch} (gone already?)")
        doc = {"pid": args.watch, "samples": len(samples),
               "cpu_percent": watcher.summary().to_wire()}
        json.dump(doc, sys.stdout, indent=2)
        sys.stdout.write("\n")
        return 0
    config = CpuExperimentConfig(
        duration_s=parse_duration_ms(args.duration) / 1000.0,
        rate_hz=args.rate,
        beams=args.beams,
        interval_s=args.interval,
    )
    result = run_cpu_experiment(config, gateway=args.gateway)
    json.dump(result.to_wire(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"])
    parser = argparse.ArgumentParser(
        prog="smartcloud-bench", description="gateway latency and CPU benchmarks"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    lat = sub.add_parser("latency", parents=[common],
                         help="echo round trips through a delay proxy")
    lat.add_argument("--gateway", default=None, metavar="HOST:PORT",
                     help="use a running gateway instead of self-hosting one")
    lat.add_argument("--proxy-rtt", type=float, default=32.0, metavar="MS",
                     help="simulated network round trip (default 32 ms)")
    lat.add_argument("--direct", action="store_true",
                     help="skip the proxy and measure the bare stack")
    lat.add_argument("--count", type=int, default=1000)
    lat.add_argument("--payload-bytes", type=int, default=0)
    lat.add_argument("--seed", type=int, default=0)
    lat.add_argument("--csv", type=Path, default=None,
                     help="write per-call samples to this file")
    lat.set_defaults(func=_cmd_latency)

    cpu = sub.add_parser("cpu", parents=[common],
                         help="onboard vs offloaded robot CPU")
    cpu.add_argument("--gateway", default=None, metavar="HOST:PORT",
                     help="use a running gateway instead of self-hosting one")
    cpu.add_argument("--duration", default="60s",
                     help="sampled window per mode (e.g. 60s, 500ms)")
    cpu.add_argument("--rate", type=float, default=20.0, help="scan rate, Hz")
    cpu.add_argument("--beams", type=int, default=360)
    cpu.add_argument("--interval", type=float, default=1.0, help="sample spacing, s")
    cpu.add_argument("--watch", type=int, default=None, metavar="PID",
                     help="just sample this pid instead of running the experiment")
    cpu.set_defaults(func=_cmd_cpu)
    return parser


def main(argv: "list[str] | None" = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (BenchError, MetricsError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

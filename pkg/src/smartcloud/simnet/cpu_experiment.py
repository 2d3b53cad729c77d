"""Onboard-versus-offloaded CPU comparison.

A child process drives a lidar around the default circuit at a fixed scan
rate. In ``onboard`` mode it also runs the occupancy mapper itself; in
``offloaded`` mode it only streams the scans to a gateway, which does the
mapping in its own process. The parent samples the child's CPU from
``/proc/<pid>/stat`` once per second, so the numbers measure exactly what the
robot's computer would spend in each configuration.
"""

from __future__ import annotations

import asyncio
import contextlib
import logging
import multiprocessing as mp
import time
from dataclasses import dataclass

import httpx

from smartcloud.apps.runtime import MapSpec, MapperApp
from smartcloud.metrics import CpuWatcher, Summary, summarize
from smartcloud.simnet.robot import SCAN_TOPIC, TF_TOPIC, RosRobotClient, sample_path
from smartcloud.simnet.world import LidarConfig, default_world, simulate_scan

logger = logging.getLogger(__name__)

MODES = ("onboard", "offloaded")


class CpuExperimentError(Exception):
    pass


@dataclass(frozen=True)
class CpuExperimentConfig:
    duration_s: float = 60.0  # sampled window per mode
    rate_hz: float = 20.0
    beams: int = 360
    warmup_s: float = 2.0
    interval_s: float = 1.0

    def __post_init__(self) -> None:
        if self.duration_s <= 0 or self.rate_hz <= 0 or self.beams < 1:
            raise CpuExperimentError("duration, rate, and beams must be positive")


@dataclass
class CpuExperimentResult:
    onboard: Summary
    offloaded: Summary

    @property
    def factor(self) -> float:
        if self.offloaded.mean == 0:
            return float("inf")
        return self.onboard.mean / self.offloaded.mean

    def to_wire(self) -> dict:
        return {
            "onboard": self.onboard.to_wire(),
            "offloaded": self.offloaded.to_wire(),
            "factor": self.factor,
        }


def _precompute_lap(rate_hz: float, beams: int) -> list:
    """One circuit of (pose wire, scan wire) pairs, computed before sampling
    starts. A real lidar hands scans over for free, so simulation cost must
    not show up in either mode's measured CPU."""
    world = default_world()
    lidar = LidarConfig(beams=beams)
    poses = sample_path([(2.0, 2.0), (8.0, 2.0), (8.0, 8.0), (2.0, 8.0), (2.0, 2.0)],
                        step=0.5 / rate_hz)
    return [(p.to_wire(), simulate_scan(world, p, lidar).to_wire()) for p in poses]


def _child_onboard(ready, total_s: float, rate_hz: float, beams: int) -> None:
    lap = _precompute_lap(rate_hz, beams)
    app = MapperApp("local", MapSpec())
    ready.send("ready")
    start = time.monotonic()
    for i in range(int(total_s * rate_hz) + 1):
        pose_wire, scan_wire = lap[i % len(lap)]
        app.on_message("tf", pose_wire)
        app.on_message("scan", scan_wire)
        time.sleep(max(0.0, start + (i + 1) / rate_hz - time.monotonic()))


def _child_offloaded(ready, total_s: float, rate_hz: float, beams: int, gateway: str) -> None:
    async def run() -> None:
        lap = _precompute_lap(rate_hz, beams)
        bot = await RosRobotClient(f"ws://{gateway}", "cpu-probe").connect()
        try:
            await bot.advertise_lidar()

            async def drain() -> None:
                # results come back on the same socket; discard them so the
                # websocket buffer does not grow into the measurement
                while True:
                    await bot.recv(timeout_s=3600.0)

            drainer = asyncio.create_task(drain())
            ready.send("ready")
            start = time.monotonic()
            for i in range(int(total_s * rate_hz) + 1):
                pose_wire, scan_wire = lap[i % len(lap)]
                await bot.publish(TF_TOPIC, pose_wire)
                await bot.publish(SCAN_TOPIC, scan_wire)
                delay = start + (i + 1) / rate_hz - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
            drainer.cancel()
        finally:
            await bot.close()

    asyncio.run(run())


def _run_mode(mode: str, config: CpuExperimentConfig, gateway: "str | None") -> Summary:
    ctx = mp.get_context("spawn")
    parent_conn, child_conn = ctx.Pipe()
    total = config.warmup_s + config.duration_s + 2.0
    if mode == "onboard":
        proc = ctx.Process(
            target=_child_onboard,
            args=(child_conn, total, config.rate_hz, config.beams),
            daemon=True,
        )
    else:
        if gateway is None:
            raise CpuExperimentError("offloaded mode needs a gateway address")
        proc = ctx.Process(
            target=_child_offloaded,
            args=(child_conn, total, config.rate_hz, config.beams, gateway),
            daemon=True,
        )
    proc.start()
    instance = None
    try:
        if not parent_conn.poll(30.0):
            raise CpuExperimentError(f"{mode} child never became ready")
        parent_conn.recv()
        if mode == "offloaded":
            # the child only streams; mapping has to be live on the gateway
            resp = httpx.post(
                f"http://{gateway}/api/offloads",
                json={"robot": "cpu-probe", "package": "gmapping"},
                timeout=10.0,
            )
            if resp.status_code != 200:
                raise CpuExperimentError(f"gmapping offload failed: {resp.text}")
            instance = resp.json()["instance"]
        time.sleep(config.warmup_s)
        watcher = CpuWatcher(proc.pid, interval_s=config.interval_s).start()
        time.sleep(config.duration_s)
        samples = watcher.stop()
        if not samples:
            raise CpuExperimentError(f"no CPU samples collected for {mode} child")
        return summarize([s.percent for s in samples])
    finally:
        if instance is not None:
            with contextlib.suppress(Exception):
                httpx.delete(f"http://{gateway}/api/offloads/{instance}", timeout=10.0)
        proc.terminate()
        proc.join(timeout=10.0)


def run_cpu_experiment(
    config: "CpuExperimentConfig | None" = None,
    gateway: "str | None" = None,
) -> CpuExperimentResult:
    """Run both modes sequentially against one gateway and compare means.

    If no gateway address is given, one is hosted in this process; the
    sampled pid is always the child's, so the host does not pollute the
    comparison either way.
    """
    config = config or CpuExperimentConfig()
    if gateway is not None:
        onboard = _run_mode("onboard", config, None)
        offloaded = _run_mode("offloaded", config, gateway)
        return CpuExperimentResult(onboard=onboard, offloaded=offloaded)

    from smartcloud.gateway.runner import ServerHandle

    with ServerHandle() as handle:
        onboard = _run_mode("onboard", config, None)
        offloaded = _run_mode("offloaded", config, handle.address)
        return CpuExperimentResult(onboard=onboard, offloaded=offloaded)

"""Live gateway for console integration tests.

Starts a gateway, keeps a lidar robot streaming pose+scan pairs and a camera
robot connected, and launches the detection offload for the camera stream.
Prints one JSON line with the addresses, then runs until stdin closes.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
import urllib.request
from pathlib import Path

from smartcloud.apps.classifier import load_classifier_config
from smartcloud.gateway.cli import default_fixture_manifest
from smartcloud.gateway.runner import ServerHandle
from smartcloud.gateway.server import create_server
from smartcloud.gateway.state import GatewayState
from smartcloud.simnet.robot import RawRobotClient, RosRobotClient, sample_path
from smartcloud.simnet.world import LidarConfig, default_world, simulate_scan

LIDAR_ROBOT = "jackal"
CAMERA_ROBOT = "roomba"
SCAN_RATE_HZ = 10.0


def start_detector(base: str) -> str:
    body = json.dumps({"robot": CAMERA_ROBOT, "package": "object_detection"})
    request = urllib.request.Request(
        f"{base}/api/offloads",
        data=body.encode("utf-8"),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(request, timeout=10) as response:
        return json.loads(response.read())["instance"]


async def drain(ws) -> None:
    """Keep the robot's inbox empty so gateway sends never back up."""
    try:
        async for _ in ws:
            pass
    except Exception:
        pass


async def stream_lidar(bot: RosRobotClient) -> None:
    world = default_world()
    poses = sample_path([(2.0, 2.0), (8.0, 2.0), (8.0, 8.0), (2.0, 8.0), (2.0, 2.0)], 0.1)
    lidar = LidarConfig(beams=90)
    scans = [simulate_scan(world, pose, lidar).to_wire() for pose in poses]
    i = 0
    while True:
        await bot.publish_step(poses[i % len(poses)], scans[i % len(scans)])
        i += 1
        await asyncio.sleep(1.0 / SCAN_RATE_HZ)


async def wait_for_stdin_eof() -> None:
    await asyncio.to_thread(sys.stdin.buffer.read)


async def main(ui_dir: "Path | None") -> int:
    manifest = default_fixture_manifest()
    state = GatewayState(
        classifier_config=load_classifier_config(manifest) if manifest else None
    )
    app = create_server(state, ui_dir=ui_dir)
    with ServerHandle(state, app=app) as handle:
        lidar = await RosRobotClient(handle.ws_base, LIDAR_ROBOT).connect()
        await lidar.advertise_lidar()
        camera = await RawRobotClient(handle.ws_base, CAMERA_ROBOT).connect()
        detector = start_detector(handle.http_base)

        print(json.dumps({
            "http": handle.http_base,
            "ws": handle.ws_base,
            "lidar_robot": LIDAR_ROBOT,
            "camera_stream": CAMERA_ROBOT,
            "detector_instance": detector,
        }), flush=True)

        tasks = [
            asyncio.create_task(drain(lidar.ws)),
            asyncio.create_task(stream_lidar(lidar)),
        ]
        try:
            await wait_for_stdin_eof()
        finally:
            for task in tasks:
                task.cancel()
            await asyncio.gather(*tasks, return_exceptions=True)
            await lidar.close()
            await camera.close()
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ui", type=Path, default=None,
                        help="serve this directory under /ui")
    args = parser.parse_args()
    raise SystemExit(asyncio.run(main(args.ui)))

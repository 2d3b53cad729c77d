"""The heterogeneous mission: a ROS lidar robot maps while a non-ROS camera
robot uploads frames, coordinated only through the gateway and the detection
web service.

The runner merges all robot actions into one timeline ordered by simulated
time and executes them synchronously (each scan waits for its entropy result,
each frame post for its acknowledgment). That makes the event log a pure
function of the script, so replays are byte-identical; no wall-clock values
appear in events.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import httpx

from smartcloud import protocol
from smartcloud.apps.mapper import OccupancyGrid
from smartcloud.gateway.state import result_topic
from smartcloud.simnet.robot import (
    GatewayUnreachable,
    RawRobotClient,
    RosRobotClient,
    parse_detection_xml,
    sample_path,
)
from smartcloud.simnet.world import LidarConfig, World2D, default_world, simulate_scan

logger = logging.getLogger(__name__)

SCENARIO_FORMAT = "smartcloud-scenario/1"

EV_MAPPING_STARTED = "MappingStarted"
EV_FRAME_POSTED = "FramePosted"
EV_DETECTION_REPORTED = "DetectionReported"
EV_TARGET_FOUND = "TargetFound"
EV_MAPPING_STOPPED = "MappingStopped"


class ScenarioError(Exception):
    pass


class FixtureMissing(ScenarioError):
    pass


@dataclass(frozen=True)
class ScenarioScript:
    waypoints: tuple = ((2.0, 2.0), (8.0, 2.0), (8.0, 8.0), (2.0, 8.0), (2.0, 2.0))
    step: float = 0.1
    scan_rate_hz: float = 5.0
    frames: tuple = ()  # (sim time s, fixture file name)
    lidar_robot: str = "jackal"
    camera_robot: str = "roomba"
    mapper_package: str = "gmapping"
    detector_package: str = "object_detection"
    target_label: str = "Trash Can"
    threshold: float = 0.5
    poll_period_s: float = 1.0
    seed: int = 0
    map_spec: "dict | None" = None

    def __post_init__(self) -> None:
        if len(self.waypoints) < 2:
            raise ScenarioError("need at least two waypoints")
        if not 0.0 < self.threshold <= 1.0:
            raise ScenarioError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.scan_rate_hz <= 0 or self.step <= 0 or self.poll_period_s <= 0:
            raise ScenarioError("rates and step must be positive")

    def to_wire(self) -> dict:
        doc = {
            "format": SCENARIO_FORMAT,
            "waypoints": [list(w) for w in self.waypoints],
            "step": self.step,
            "scan_rate_hz": self.scan_rate_hz,
            "frames": [[t, name] for t, name in self.frames],
            "lidar_robot": self.lidar_robot,
            "camera_robot": self.camera_robot,
            "mapper_package": self.mapper_package,
            "detector_package": self.detector_package,
            "target_label": self.target_label,
            "threshold": self.threshold,
            "poll_period_s": self.poll_period_s,
            "seed": self.seed,
        }
        if self.map_spec is not None:
            doc["map"] = self.map_spec
        return doc

    @classmethod
    def from_wire(cls, doc: dict) -> "ScenarioScript":
        if doc.get("format") != SCENARIO_FORMAT:
            raise ScenarioError(f"unsupported scenario format {doc.get('format')!r}")
        kwargs: dict = {}
        for key in (
            "step", "scan_rate_hz", "lidar_robot", "camera_robot", "mapper_package",
            "detector_package", "target_label", "threshold", "poll_period_s", "seed",
        ):
            if key in doc:
                kwargs[key] = doc[key]
        if "waypoints" in doc:
            kwargs["waypoints"] = tuple(tuple(float(v) for v in w) for w in doc["waypoints"])
        if "frames" in doc:
            kwargs["frames"] = tuple((float(t), str(n)) for t, n in doc["frames"])
        if "map" in doc:
            kwargs["map_spec"] = doc["map"]
        return cls(**kwargs)


def load_scenario_file(path: "str | Path") -> ScenarioScript:
    return ScenarioScript.from_wire(json.loads(Path(path).read_text(encoding="utf-8")))


def default_scenario(with_target: bool = True) -> ScenarioScript:
    """Office circuit: target-free frames every 2 s, the target frame near the
    end of the circuit. The no-target variant cycles fillers to completion."""
    fillers = ["hall_a.jpg", "hall_b.jpg", "hall_c.jpg"]
    frames = []
    for i in range(20):
        frames.append((2.0 + 2.0 * i, fillers[i % len(fillers)]))
    if with_target:
        frames.append((42.0, "office.jpg"))
    return ScenarioScript(frames=tuple(frames))


def default_fixtures_dir() -> Path:
    candidate = resources.files("smartcloud.data") / "fixtures"
    return Path(str(candidate))


@dataclass
class ScenarioResult:
    events: list
    entropy_series: list  # (scan index, bits)
    final_map: "dict | None"
    scans_streamed: int
    frames_posted: int

    def final_grid(self) -> "OccupancyGrid | None":
        return OccupancyGrid.from_snapshot(self.final_map) if self.final_map else None

    def event_log_text(self) -> str:
        """Newline-delimited JSON, stable key order, no wall-clock fields."""
        return "".join(
            json.dumps(event, sort_keys=True, separators=(",", ":")) + "\n"
            for event in self.events
        )


async def run_scenario(
    script: ScenarioScript,
    world: "World2D | None" = None,
    gateway: str = "127.0.0.1:9090",
    fixtures_dir: "str | Path | None" = None,
    lidar: "LidarConfig | None" = None,
) -> ScenarioResult:
    world = world or default_world()
    lidar = lidar or LidarConfig()
    fixtures = Path(fixtures_dir) if fixtures_dir is not None else default_fixtures_dir()
    for _, name in script.frames:
        if not (fixtures / name).is_file():
            raise FixtureMissing(str(fixtures / name))
    for x, y in script.waypoints:
        if not world.contains(x, y):
            raise ScenarioError(f"waypoint ({x}, {y}) outside world bounds")

    http_base = f"http://{gateway}"
    ws_base = f"ws://{gateway}"
    events: list[dict] = []
    entropy_series: list[tuple[int, float]] = []
    last_map: dict | None = None

    lidar_bot = await RosRobotClient(ws_base, script.lidar_robot).connect()
    try:
        camera_bot = await RawRobotClient(ws_base, script.camera_robot).connect()
    except GatewayUnreachable:
        await lidar_bot.close()
        raise
    try:
        async with httpx.AsyncClient(base_url=http_base, timeout=60.0) as http:
            await lidar_bot.advertise_lidar()
            body: dict = {"robot": script.lidar_robot, "package": script.mapper_package}
            if script.map_spec is not None:
                body["map"] = script.map_spec
            resp = await http.post("/api/offloads", json=body)
            if resp.status_code != 200:
                raise ScenarioError(f"mapper offload failed: {resp.text}")
            mapper_instance = resp.json()["instance"]
            resp = await http.post(
                "/api/offloads",
                json={"robot": script.camera_robot, "package": script.detector_package},
            )
            if resp.status_code != 200:
                raise ScenarioError(f"detector offload failed: {resp.text}")
            detector_instance = resp.json()["instance"]

            entropy_topic = result_topic(mapper_instance, "entropy")
            map_topic = result_topic(mapper_instance, "map")

            poses = sample_path(list(script.waypoints), script.step)
            mission_end = (len(poses) - 1) / script.scan_rate_hz
            actions: list[tuple[float, int, int, str, object]] = []
            seq = 0
            for t, name in script.frames:
                actions.append((t, 0, seq, "frame", name))
                seq += 1
            n_polls = int(mission_end / script.poll_period_s) + 1
            for i in range(1, n_polls + 1):
                actions.append((i * script.poll_period_s, 1, seq, "poll", None))
                seq += 1
            for i, pose in enumerate(poses):
                actions.append((i / script.scan_rate_hz, 2, seq, "scan", pose))
                seq += 1
            actions.sort(key=lambda a: (a[0], a[1], a[2]))

            # no gateway-session state (instance ids, clocks) in events: replays
            # on a shared gateway must still be byte-identical
            events.append(
                {"event": EV_MAPPING_STARTED, "t": 0.0,
                 "robot": script.lidar_robot, "package": script.mapper_package}
            )
            scans_done = 0
            frames_posted = 0
            last_seen_id = 0
            stop_t = mission_end
            for t, _, _, kind, payload in actions:
                if kind == "frame":
                    data = (fixtures / str(payload)).read_bytes()
                    resp = await http.post(
                        f"/streams/{script.camera_robot}/frames", content=data
                    )
                    if resp.status_code != 200:
                        raise ScenarioError(f"frame post failed: {resp.text}")
                    frames_posted += 1
                    events.append(
                        {"event": EV_FRAME_POSTED, "t": t, "robot": script.camera_robot,
                         "frame": str(payload), "message_id": resp.json()["message_id"]}
                    )
                elif kind == "poll":
                    resp = await http.get(f"/streams/{script.camera_robot}/latest")
                    if resp.status_code != 200:
                        continue
                    message_id, results = parse_detection_xml(resp.text)
                    if message_id <= last_seen_id:
                        continue
                    last_seen_id = message_id
                    events.append(
                        {"event": EV_DETECTION_REPORTED, "t": t, "message_id": message_id,
                         "results": [[label, p] for label, p in results]}
                    )
                    hits = [
                        (label, p) for label, p in results
                        if label == script.target_label and p >= script.threshold
                    ]
                    if hits:
                        label, p = hits[0]
                        events.append(
                            {"event": EV_TARGET_FOUND, "t": t, "label": label,
                             "probability": p, "message_id": message_id}
                        )
                        stop_t = t
                        break
                else:
                    scan = simulate_scan(world, payload, lidar)
                    await lidar_bot.publish_step(payload, scan.to_wire())
                    # lockstep: wait for this scan's entropy before the next action
                    while True:
                        message = await lidar_bot.recv(timeout_s=60.0)
                        if not isinstance(message, protocol.Publish):
                            continue
                        if message.topic == map_topic:
                            last_map = message.msg
                            continue
                        if message.topic == entropy_topic:
                            scans_done += 1
                            entropy_series.append((scans_done, float(message.msg)))
                            break

            events.append({"event": EV_MAPPING_STOPPED, "t": stop_t, "scans": scans_done})

            for instance in (mapper_instance, detector_instance):
                resp = await http.delete(f"/api/offloads/{instance}")
                if resp.status_code == 200 and instance == mapper_instance:
                    outputs = resp.json().get("outputs", {})
                    if "map" in outputs and outputs["map"].get("value"):
                        last_map = outputs["map"]["value"]
    finally:
        await camera_bot.close()
        await lidar_bot.close()

    return ScenarioResult(
        events=events,
        entropy_series=entropy_series,
        final_map=last_map,
        scans_streamed=scans_done,
        frames_posted=frames_posted,
    )

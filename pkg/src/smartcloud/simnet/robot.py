"""Simulated robot clients.

The lidar robot speaks the websocket protocol in ROS mode; the camera robot
is the non-ROS peer that uploads frames over HTTP. Both are thin: the
scenario runner owns timing and event ordering.
"""

from __future__ import annotations

import asyncio
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass

import websockets

from smartcloud import protocol
from smartcloud.apps.mapper import Pose2D

TF_TOPIC = "/tf"
SCAN_TOPIC = "/scan"
TF_TYPE = "tf2_msgs/TFMessage"
SCAN_TYPE = "sensor_msgs/LaserScan"


class RobotError(Exception):
    pass


class GatewayUnreachable(RobotError):
    pass


def sample_path(
    waypoints: "list[tuple[float, float]]", step: float
) -> list[Pose2D]:
    """Constant-speed poses along a polyline, heading along each segment."""
    if len(waypoints) < 2:
        raise RobotError("need at least two waypoints")
    poses: list[Pose2D] = []
    for (x0, y0), (x1, y1) in zip(waypoints, waypoints[1:]):
        seg_len = math.hypot(x1 - x0, y1 - y0)
        if seg_len == 0:
            continue
        heading = math.atan2(y1 - y0, x1 - x0)
        n = max(1, int(seg_len / step))
        for i in range(n):
            f = i / n
            poses.append(Pose2D(x0 + f * (x1 - x0), y0 + f * (y1 - y0), heading))
    last = waypoints[-1]
    poses.append(Pose2D(last[0], last[1], poses[-1].theta if poses else 0.0))
    return poses


class RosRobotClient:
    """Websocket client for a ROS-mode robot session."""

    def __init__(self, gateway_ws: str, robot_id: str, name: str = "") -> None:
        self.gateway_ws = gateway_ws
        self.robot_id = robot_id
        self.name = name or robot_id
        self.ws = None
        self._call_seq = 0

    async def connect(self) -> "RosRobotClient":
        url = f"{self.gateway_ws}/robot?robot={self.robot_id}&mode=ros&name={self.name}"
        try:
            self.ws = await websockets.connect(url, max_size=16 * 1024 * 1024)
        except OSError as exc:
            raise GatewayUnreachable(f"{self.gateway_ws}: {exc}") from exc
        return self

    async def close(self) -> None:
        if self.ws is not None:
            await self.ws.close()
            self.ws = None

    async def send(self, message: protocol.Message) -> None:
        await self.ws.send(protocol.encode(message))

    async def advertise(self, topic: str, type_: str) -> None:
        await self.send(protocol.Advertise(topic=topic, type=type_))

    async def publish(self, topic: str, msg: object) -> None:
        await self.send(protocol.Publish(topic=topic, msg=msg))

    async def recv(self, timeout_s: float = 30.0) -> protocol.Message:
        raw = await asyncio.wait_for(self.ws.recv(), timeout_s)
        return protocol.decode(raw if isinstance(raw, str) else raw.decode("utf-8"))

    async def recv_publish(self, topic: str, timeout_s: float = 30.0) -> protocol.Publish:
        """Drain frames until a publish on the given topic arrives.

        Gateway-originated subscribe/unsubscribe bookkeeping frames and
        other-topic publishes are skipped.
        """
        while True:
            message = await self.recv(timeout_s)
            if isinstance(message, protocol.Publish) and message.topic == topic:
                return message

    async def call_service(
        self, service: str, args: object = None, timeout_s: float = 30.0
    ) -> protocol.ServiceResponse:
        self._call_seq += 1
        call_id = f"{self.robot_id}-call-{self._call_seq}"
        await self.send(protocol.CallService(service=service, args=args, id=call_id))
        while True:
            message = await self.recv(timeout_s)
            if isinstance(message, protocol.ServiceResponse) and message.id == call_id:
                return message

    async def advertise_lidar(self) -> None:
        await self.advertise(TF_TOPIC, TF_TYPE)
        await self.advertise(SCAN_TOPIC, SCAN_TYPE)

    async def publish_step(self, pose: Pose2D, scan_wire: dict) -> None:
        await self.publish(TF_TOPIC, pose.to_wire())
        await self.publish(SCAN_TOPIC, scan_wire)


class RawRobotClient:
    """Presence-only websocket for a non-ROS robot; data flows over HTTP."""

    def __init__(self, gateway_ws: str, robot_id: str, name: str = "") -> None:
        self.gateway_ws = gateway_ws
        self.robot_id = robot_id
        self.name = name or robot_id
        self.ws = None

    async def connect(self) -> "RawRobotClient":
        url = f"{self.gateway_ws}/robot?robot={self.robot_id}&mode=raw&name={self.name}"
        try:
            self.ws = await websockets.connect(url)
        except OSError as exc:
            raise GatewayUnreachable(f"{self.gateway_ws}: {exc}") from exc
        return self

    async def close(self) -> None:
        if self.ws is not None:
            await self.ws.close()
            self.ws = None


def parse_detection_xml(xml_text: str) -> tuple[int, list[tuple[str, float]]]:
    """Extract (message id, [(label, probability)...]) from a detection report."""
    root = ET.fromstring(xml_text)
    message = root.find("Message")
    if message is None:
        raise RobotError("no Message element")
    message_id = int(message.findtext("MessageID", "0"))
    results = []
    for result in message.findall("Result"):
        label = result.findtext("Class", "")
        probability = float(result.findtext("Probability", "0"))
        results.append((label, probability))
    return message_id, results


@dataclass(frozen=True)
class EntropyPoint:
    scan_index: int
    entropy_bits: float

    def to_wire(self) -> dict:
        return {"scan": self.scan_index, "entropy": self.entropy_bits}

"""Gateway state machine: robots, offload instances, routing, events.

All state mutation happens on the server's event loop; instance workers are
the only other threads, and they re-enter the loop through
run_coroutine_threadsafe when publishing results, which also preserves
emission order.
"""

from __future__ import annotations

import asyncio
import enum
import itertools
import logging
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Awaitable, Callable

from smartcloud import protocol
from smartcloud.apps.classifier import ClassifierConfig
from smartcloud.apps.runtime import AppInstance, MapSpec, UnknownPackage as RuntimeUnknownPackage, create_app
from smartcloud.metrics import LatencyRecorder
from smartcloud.registry import Registry, default_registry, match_packages
from smartcloud.webservice import ResultStore

logger = logging.getLogger(__name__)

DEFAULT_QUEUE_CAP = 256
RESULT_TOPIC_PREFIX = "/smartcloud"
ECHO_SERVICE = "/smartcloud/echo"
EVENT_QUEUE_CAP = 1024


class GatewayError(Exception):
    pass


class DuplicateRobotId(GatewayError):
    pass


class UnknownRobot(GatewayError):
    pass


class UnknownPackage(GatewayError):
    pass


class MissingTopic(GatewayError):
    """A binding references a topic the robot has not advertised (or the
    advertised type does not fit the role)."""


class AppInitFailure(GatewayError):
    pass


class UnknownInstance(GatewayError):
    pass


class AlreadyStopped(GatewayError):
    pass


class InstanceStatus(str, enum.Enum):
    STARTING = "starting"
    RUNNING = "running"
    STOPPED = "stopped"
    FAILED = "failed"


def result_topic(instance_id: str, channel: str) -> str:
    return f"{RESULT_TOPIC_PREFIX}/{instance_id}/{channel}"


class EventBroadcast:
    """Fan-out of control events to any number of console subscribers."""

    def __init__(self) -> None:
        self._subscribers: list[asyncio.Queue] = []

    def subscribe(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue(maxsize=EVENT_QUEUE_CAP)
        self._subscribers.append(q)
        return q

    def unsubscribe(self, q: asyncio.Queue) -> None:
        if q in self._subscribers:
            self._subscribers.remove(q)

    def emit(self, event: dict) -> None:
        for q in self._subscribers:
            try:
                q.put_nowait(event)
            except asyncio.QueueFull:
                q.get_nowait()  # slow consumer: shed the oldest event
                q.put_nowait(event)


@dataclass
class RobotRecord:
    robot_id: str
    mode: protocol.SessionMode
    session: protocol.SessionState
    display_name: str
    connected_at: float
    send: Callable[[str], Awaitable[None]]
    # gateway-side subscriptions on this robot: topic -> refcount / subscribe id
    sub_refs: dict = field(default_factory=dict)
    sub_ids: dict = field(default_factory=dict)

    def topics(self) -> dict:
        return dict(self.session.advertised)


class InstanceWorker(threading.Thread):
    """One logical worker per offload instance.

    The inbound queue is bounded; when full, the oldest scan-role message is
    dropped first (mapping tolerates missing frames), otherwise the oldest
    message overall.
    """

    _SENTINEL = object()

    def __init__(self, instance: "OffloadInstance", state: "GatewayState", cap: int) -> None:
        super().__init__(name=f"worker-{instance.instance_id}", daemon=True)
        self.instance = instance
        self.state = state
        self.cap = cap
        self._queue: deque = deque()
        self._cond = threading.Condition()
        self._closed = False
        self.drops = 0

    def enqueue(self, topic: str, payload: object) -> None:
        role = self.instance.topic_roles.get(topic)
        if role is None:
            return
        with self._cond:
            if self._closed:
                return
            if len(self._queue) >= self.cap:
                self._drop_one_locked()
            self._queue.append((role, payload))
            self._cond.notify()

    def _drop_one_locked(self) -> None:
        self.drops += 1
        for i, (role, _) in enumerate(self._queue):
            if role == "scan":
                del self._queue[i]
                return
        self._queue.popleft()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._queue.append(self._SENTINEL)
            self._cond.notify()

    def run(self) -> None:
        inst = self.instance
        while True:
            with self._cond:
                while not self._queue:
                    self._cond.wait()
                item = self._queue.popleft()
            if item is self._SENTINEL:
                return
            role, payload = item
            try:
                emissions = inst.app.on_message(role, payload)
            except Exception:
                logger.exception("instance %s failed", inst.instance_id)
                self.state.call_in_loop(self.state.mark_failed(inst.instance_id))
                return
            for channel, value in emissions:
                # block until delivered: keeps per-channel emission order
                self.state.call_in_loop(
                    self.state.publish_result(inst.instance_id, channel, value)
                )


@dataclass
class OffloadInstance:
    instance_id: str
    package_id: str
    robot_id: str
    bindings: dict  # role -> topic
    app: AppInstance
    status: InstanceStatus = InstanceStatus.STARTING
    outputs: dict = field(default_factory=dict)  # channel -> {"seq": n, "value": v}
    worker: InstanceWorker | None = None
    stream_id: str | None = None  # set for web-service (non-ROS) flows

    @property
    def topic_roles(self) -> dict:
        return {topic: role for role, topic in self.bindings.items()}

    def snapshot(self) -> dict:
        return {
            "instance": self.instance_id,
            "package": self.package_id,
            "robot": self.robot_id,
            "bindings": dict(self.bindings),
            "status": self.status.value,
            "stream": self.stream_id,
            "outputs": {ch: dict(rec) for ch, rec in self.outputs.items()},
        }


class GatewayState:
    """Everything the server endpoints operate on."""

    def __init__(
        self,
        registry: Registry | None = None,
        classifier_config: ClassifierConfig | None = None,
        queue_cap: int = DEFAULT_QUEUE_CAP,
        strict_advertise: bool = False,
    ) -> None:
        self.registry = registry or default_registry()
        self.classifier_config = classifier_config or ClassifierConfig()
        self.queue_cap = queue_cap
        self.strict_advertise = strict_advertise
        self.robots: dict[str, RobotRecord] = {}
        self.instances: dict[str, OffloadInstance] = {}
        self.events = EventBroadcast()
        self.results = ResultStore()
        self.latency = LatencyRecorder()
        self.counters = {"frames_in": 0, "frames_bad": 0, "frames_out": 0, "queue_drops": 0}
        self.loop: asyncio.AbstractEventLoop | None = None
        self._instance_seq = itertools.count(1)
        self.services = {ECHO_SERVICE: self._echo}

    @staticmethod
    def _echo(args: dict | None) -> dict:
        return dict(args or {})

    def call_in_loop(self, coro: Awaitable) -> None:
        """Run a coroutine on the server loop from a worker thread and wait."""
        assert self.loop is not None
        asyncio.run_coroutine_threadsafe(coro, self.loop).result()

    # ---- robot lifecycle -------------------------------------------------

    def accept_robot(
        self,
        robot_id: str,
        mode: protocol.SessionMode,
        send: Callable[[str], Awaitable[None]],
        display_name: str = "",
    ) -> RobotRecord:
        if not robot_id:
            raise GatewayError("robot id must be non-empty")
        if robot_id in self.robots:
            raise DuplicateRobotId(robot_id)
        record = RobotRecord(
            robot_id=robot_id,
            mode=mode,
            session=protocol.SessionState(
                session_id=robot_id, mode=mode, strict_advertise=self.strict_advertise
            ),
            display_name=display_name or robot_id,
            connected_at=time.time(),
            send=send,
        )
        self.robots[robot_id] = record
        self.events.emit({"event": "connect", "robot": robot_id, "mode": mode.value})
        return record

    async def drop_robot(self, robot_id: str) -> None:
        record = self.robots.pop(robot_id, None)
        if record is None:
            return
        # orphaned instances cannot receive input or deliver results: stop them
        for inst in list(self.instances.values()):
            if inst.robot_id == robot_id and inst.status in (
                InstanceStatus.STARTING,
                InstanceStatus.RUNNING,
            ):
                try:
                    await self.stop_offload(inst.instance_id)
                except GatewayError:
                    pass
        self.events.emit({"event": "disconnect", "robot": robot_id})

    def consumers_for(self, robot_id: str) -> dict:
        """topic -> [instance ids] over the robot's live instances."""
        mapping: dict[str, list[str]] = {}
        for inst in self.instances.values():
            if inst.robot_id != robot_id or inst.status is not InstanceStatus.RUNNING:
                continue
            for topic in inst.bindings.values():
                mapping.setdefault(topic, []).append(inst.instance_id)
        return mapping

    async def handle_frame(self, record: RobotRecord, text: str) -> None:
        """One inbound websocket frame from a robot, in session order."""
        self.counters["frames_in"] += 1
        t0 = time.perf_counter_ns()
        try:
            message = protocol.decode(text)
        except protocol.ProtocolError as exc:
            self.counters["frames_bad"] += 1
            logger.warning("robot %s sent bad frame: %s", record.robot_id, exc)
            return
        known_before = set(record.session.advertised)
        _, effects = protocol.step_session(
            record.session,
            message,
            protocol.Origin.FROM_ROBOT,
            consumers=self.consumers_for(record.robot_id),
            services=self.services,
        )
        for topic, type_ in record.session.advertised.items():
            if topic not in known_before:
                self.events.emit(
                    {"event": "topic-advertised", "robot": record.robot_id,
                     "topic": topic, "type": type_}
                )
        for effect in effects:
            await self._apply_effect(record, message, effect, t0)

    async def _apply_effect(
        self,
        record: RobotRecord,
        message: protocol.Message,
        effect: protocol.RouteEffect,
        t0: int,
    ) -> None:
        if effect.kind is protocol.EffectKind.DELIVER:
            if effect.target == record.robot_id:
                await self._send(record, effect.payload)
            else:
                inst = self.instances.get(effect.target)
                if inst is not None and inst.worker is not None:
                    assert isinstance(message, protocol.Publish)
                    inst.worker.enqueue(message.topic, message.msg)
        elif effect.kind is protocol.EffectKind.RESPOND:
            payload = effect.payload
            if (
                isinstance(payload, protocol.ServiceResponse)
                and payload.service == ECHO_SERVICE
                and payload.values is not None
            ):
                values = dict(payload.values)
                values["processing_ns"] = time.perf_counter_ns() - t0
                payload = protocol.ServiceResponse(
                    service=payload.service, result=payload.result,
                    values=values, id=payload.id,
                )
            await self._send(record, payload)
        elif effect.kind is protocol.EffectKind.REJECT:
            self.counters["frames_bad"] += 1
            logger.warning("rejected frame from %s: %s", record.robot_id, effect.reason)

    async def _send(self, record: RobotRecord, message: protocol.Message) -> None:
        try:
            await record.send(protocol.encode(message))
            self.counters["frames_out"] += 1
        except Exception:
            logger.warning("send to robot %s failed", record.robot_id, exc_info=True)

    # ---- offload lifecycle ----------------------------------------------

    def suggest_bindings(self, robot_id: str, package_id: str) -> dict:
        """Deterministic auto-binding: per role, the lexicographically first
        unused advertised topic of the required type."""
        record = self.robots.get(robot_id)
        if record is None:
            raise UnknownRobot(robot_id)
        package = self.registry.get(package_id)
        if package is None:
            raise UnknownPackage(package_id)
        available = record.topics()
        bindings: dict[str, str] = {}
        used: set[str] = set()
        for role in sorted(package.required_topics):
            required_type = package.required_topics[role]
            if package.exact_names:
                candidate = f"/{role}"
                if available.get(candidate) != required_type:
                    raise MissingTopic(f"robot {robot_id} has no {candidate} of type {required_type}")
                bindings[role] = candidate
                used.add(candidate)
                continue
            for topic in sorted(available):
                if topic not in used and available[topic] == required_type:
                    bindings[role] = topic
                    used.add(topic)
                    break
            else:
                raise MissingTopic(f"robot {robot_id} has no unused topic of type {required_type}")
        return bindings

    async def start_offload(
        self,
        robot_id: str,
        package_id: str,
        bindings: dict | None = None,
        map_spec: MapSpec | None = None,
    ) -> OffloadInstance:
        record = self.robots.get(robot_id)
        if record is None:
            raise UnknownRobot(robot_id)
        package = self.registry.get(package_id)
        if package is None:
            raise UnknownPackage(package_id)

        needs_stream = record.mode is protocol.SessionMode.NON_ROS
        if bindings is None:
            bindings = {} if needs_stream else self.suggest_bindings(robot_id, package_id)
        if not needs_stream:
            self._check_bindings(record, package.required_topics, bindings)
        instance_id = f"{package_id}-{next(self._instance_seq)}"
        try:
            app = create_app(
                package, instance_id,
                classifier_config=self.classifier_config, map_spec=map_spec,
            )
        except RuntimeUnknownPackage as exc:
            raise UnknownPackage(str(exc)) from exc
        except Exception as exc:
            raise AppInitFailure(f"{package_id}: {exc}") from exc

        inst = OffloadInstance(
            instance_id=instance_id,
            package_id=package_id,
            robot_id=robot_id,
            bindings=dict(bindings),
            app=app,
        )
        self.instances[instance_id] = inst
        if needs_stream:
            # web-service flow: frames arrive over HTTP, results go to the store
            inst.stream_id = robot_id
            self.results.create_stream(robot_id)
        else:
            inst.worker = InstanceWorker(inst, self, self.queue_cap)
            inst.worker.start()
            await self._subscribe_bound_topics(record, inst)
        inst.status = InstanceStatus.RUNNING
        self.events.emit(
            {"event": "status-change", "instance": instance_id,
             "package": package_id, "robot": robot_id, "status": inst.status.value}
        )
        return inst

    def _check_bindings(self, record: RobotRecord, required: dict, bindings: dict) -> None:
        if set(bindings) != set(required):
            missing = sorted(set(required) - set(bindings))
            extra = sorted(set(bindings) - set(required))
            raise MissingTopic(f"bindings must cover roles exactly; missing {missing}, extra {extra}")
        available = record.topics()
        for role, topic in bindings.items():
            if topic not in available:
                raise MissingTopic(f"robot {record.robot_id} has not advertised {topic}")
            if available[topic] != required[role]:
                raise MissingTopic(
                    f"{topic} carries {available[topic]}, role {role} needs {required[role]}"
                )
        if len(set(bindings.values())) != len(bindings):
            raise MissingTopic("two roles bound to the same topic")

    async def _subscribe_bound_topics(self, record: RobotRecord, inst: OffloadInstance) -> None:
        for role, topic in sorted(inst.bindings.items()):
            record.sub_refs[topic] = record.sub_refs.get(topic, 0) + 1
            if record.sub_refs[topic] == 1:
                sub_id = f"gw:{record.robot_id}:{topic}"
                record.sub_ids[topic] = sub_id
                await self._send(
                    record,
                    protocol.Subscribe(topic=topic, type=record.topics().get(topic), id=sub_id),
                )

    async def _unsubscribe_topics(self, record: RobotRecord, topics: list) -> None:
        for topic in topics:
            count = record.sub_refs.get(topic, 0)
            if count <= 0:
                continue
            record.sub_refs[topic] = count - 1
            if record.sub_refs[topic] == 0:
                del record.sub_refs[topic]
                sub_id = record.sub_ids.pop(topic, None)
                await self._send(record, protocol.Unsubscribe(topic=topic, id=sub_id))

    async def stop_offload(self, instance_id: str) -> dict:
        inst = self.instances.get(instance_id)
        if inst is None:
            raise UnknownInstance(instance_id)
        if inst.status in (InstanceStatus.STOPPED, InstanceStatus.FAILED):
            raise AlreadyStopped(instance_id)
        if inst.worker is not None:
            inst.worker.close()
            await asyncio.to_thread(inst.worker.join)
            self.counters["queue_drops"] += inst.worker.drops
        try:
            for channel, value in inst.app.finalize():
                await self.publish_result(instance_id, channel, value)
        except Exception:
            logger.exception("finalize failed for %s", instance_id)
        inst.status = InstanceStatus.STOPPED
        if inst.stream_id is not None:
            self.results.drop_stream(inst.stream_id)
        record = self.robots.get(inst.robot_id)
        if record is not None and inst.worker is not None:
            await self._unsubscribe_topics(record, sorted(set(inst.bindings.values())))
        self.events.emit(
            {"event": "status-change", "instance": instance_id,
             "package": inst.package_id, "robot": inst.robot_id, "status": inst.status.value}
        )
        return inst.snapshot()

    async def mark_failed(self, instance_id: str) -> None:
        inst = self.instances.get(instance_id)
        if inst is None or inst.status in (InstanceStatus.STOPPED, InstanceStatus.FAILED):
            return
        inst.status = InstanceStatus.FAILED
        record = self.robots.get(inst.robot_id)
        if record is not None and inst.worker is not None:
            await self._unsubscribe_topics(record, sorted(set(inst.bindings.values())))
        self.events.emit(
            {"event": "status-change", "instance": instance_id,
             "package": inst.package_id, "robot": inst.robot_id, "status": inst.status.value}
        )

    async def publish_result(self, instance_id: str, channel: str, value: object) -> None:
        inst = self.instances.get(instance_id)
        if inst is None:
            raise UnknownInstance(instance_id)
        rec = inst.outputs.setdefault(channel, {"seq": 0, "value": None})
        rec["seq"] += 1
        rec["value"] = value
        record = self.robots.get(inst.robot_id)
        if inst.stream_id is None and record is not None:
            await self._send(
                record,
                protocol.Publish(topic=result_topic(instance_id, channel), msg=value),
            )
        self.events.emit(
            {"event": "result", "instance": instance_id, "robot": inst.robot_id,
             "channel": channel, "seq": rec["seq"], "value": value}
        )

    # ---- views -----------------------------------------------------------

    def robot_view(self) -> list:
        return [
            {
                "robot": r.robot_id,
                "display_name": r.display_name,
                "mode": r.mode.value,
                "connected_at": r.connected_at,
                "topics": r.topics(),
            }
            for r in sorted(self.robots.values(), key=lambda r: r.robot_id)
        ]

    def packages_view(self, robot_id: str) -> dict:
        record = self.robots.get(robot_id)
        if record is None:
            raise UnknownRobot(robot_id)
        matched = match_packages(record.topics(), self.registry)
        suggested = {}
        for pkg in matched:
            try:
                suggested[pkg] = self.suggest_bindings(robot_id, pkg)
            except MissingTopic:  # pragma: no cover - match implies bindable
                continue
        return {"robot": robot_id, "packages": matched, "suggested_bindings": suggested}

    def instances_view(self) -> list:
        return [
            self.instances[key].snapshot()
            for key in sorted(self.instances)
        ]

    def metrics_view(self) -> dict:
        view: dict = {"counters": dict(self.counters)}
        samples = self.latency.samples()
        if samples:
            view["latency"] = {
                "rtt_ms": self.latency.rtt_summary_ms().to_wire(),
                "processing_ms": self.latency.processing_summary_ms().to_wire(),
            }
        else:
            view["latency"] = None
        return view

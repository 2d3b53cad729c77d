"""App instances: the units the gateway launches per offload.

Every instance consumes (role, payload) pairs and returns (channel, value)
emissions. Instances are single-threaded with respect to their own state; the
caller (one worker per instance) must not share them across threads.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from smartcloud.apps.classifier import ClassifierConfig, DetectionReport, classify_image
from smartcloud.apps.images import Image, ImageError, decode_base64_image, decode_jpeg
from smartcloud.apps.mapper import (
    LaserScan2D,
    MapperError,
    OccupancyGrid,
    Pose2D,
    map_entropy,
    occupancy_update,
)
from smartcloud.registry import PackageDescriptor

logger = logging.getLogger(__name__)

MAP_EMIT_EVERY = 10


class RuntimeError_(Exception):
    pass


class TypeMismatch(RuntimeError_):
    """Payload does not fit the role it was delivered under."""


class UnknownPackage(RuntimeError_):
    """No app implementation covers the package's required roles."""


@dataclass(frozen=True)
class MapSpec:
    """Extent and resolution of the grid a mapper instance allocates.

    The default extent is offset half a cell so walls at integer coordinates
    run through cell centers rather than cell boundaries.
    """

    x_min: float = -0.05
    y_min: float = -0.05
    x_max: float = 10.05
    y_max: float = 10.05
    resolution: float = 0.1

    def make_grid(self) -> OccupancyGrid:
        return OccupancyGrid.from_extent(
            self.x_min, self.y_min, self.x_max, self.y_max, self.resolution
        )

    @classmethod
    def from_wire(cls, payload: dict) -> "MapSpec":
        return cls(
            x_min=float(payload.get("x_min", cls.x_min)),
            y_min=float(payload.get("y_min", cls.y_min)),
            x_max=float(payload.get("x_max", cls.x_max)),
            y_max=float(payload.get("y_max", cls.y_max)),
            resolution=float(payload.get("resolution", cls.resolution)),
        )


class MapperApp:
    """Pose-known occupancy mapper: tf sets the pose, scans update the grid.

    Emits ("entropy", bits) on every applied scan and ("map", snapshot) every
    MAP_EMIT_EVERY applied scans. Scans arriving before any pose are dropped
    and counted in scans_without_pose.
    """

    roles = ("tf", "scan")

    def __init__(self, instance_id: str, map_spec: MapSpec | None = None,
                 map_every: int = MAP_EMIT_EVERY) -> None:
        self.instance_id = instance_id
        self.grid = (map_spec or MapSpec()).make_grid()
        self.map_every = map_every
        self.pose: Pose2D | None = None
        self.scans_applied = 0
        self.scans_without_pose = 0

    def on_message(self, role: str, payload: object) -> list[tuple[str, object]]:
        if role == "tf":
            self.pose = self._decode_pose(payload)
            return []
        if role == "scan":
            if self.pose is None:
                self.scans_without_pose += 1
                return []
            scan = self._decode_scan(payload)
            occupancy_update(self.grid, self.pose, scan)
            self.scans_applied += 1
            out: list[tuple[str, object]] = [("entropy", map_entropy(self.grid))]
            if self.scans_applied % self.map_every == 0:
                out.append(("map", self.grid.to_snapshot()))
            return out
        raise TypeMismatch(f"mapper has no role {role!r}")

    def finalize(self) -> list[tuple[str, object]]:
        """Flush a final map so short runs still end with one."""
        if self.scans_applied == 0 or self.scans_applied % self.map_every == 0:
            return []
        return [("map", self.grid.to_snapshot())]

    @staticmethod
    def _decode_pose(payload: object) -> Pose2D:
        if not isinstance(payload, dict):
            raise TypeMismatch(f"tf payload must be an object, got {type(payload).__name__}")
        try:
            return Pose2D.from_wire(payload)
        except (KeyError, TypeError, ValueError) as exc:
            raise TypeMismatch(f"bad tf payload: {exc}") from exc

    @staticmethod
    def _decode_scan(payload: object) -> LaserScan2D:
        if not isinstance(payload, dict):
            raise TypeMismatch(f"scan payload must be an object, got {type(payload).__name__}")
        try:
            return LaserScan2D.from_wire(payload)
        except (KeyError, TypeError, ValueError, MapperError) as exc:
            raise TypeMismatch(f"bad scan payload: {exc}") from exc


class DetectorApp:
    """Image classifier: each frame emits one DetectionReport.

    The websocket path numbers reports with the instance's own counter; the
    web-service path calls classify() and lets its store assign ids.
    """

    roles = ("image",)

    def __init__(self, instance_id: str, config: ClassifierConfig | None = None,
                 channel: str = "detections") -> None:
        self.instance_id = instance_id
        self.config = config or ClassifierConfig()
        self.channel = channel
        self.messages = 0

    def on_message(self, role: str, payload: object) -> list[tuple[str, object]]:
        if role != "image":
            raise TypeMismatch(f"detector has no role {role!r}")
        image = self._decode_image(payload)
        self.messages += 1
        reference = payload.get("reference_id", "") if isinstance(payload, dict) else ""
        report = DetectionReport.from_pairs(self.messages, str(reference), self.classify(image))
        return [(self.channel, report.to_wire())]

    def finalize(self) -> list[tuple[str, object]]:
        return []

    def classify(self, image: Image) -> list[tuple[str, float]]:
        return classify_image(image, self.config)

    @staticmethod
    def _decode_image(payload: object) -> Image:
        if not isinstance(payload, dict) or "data" not in payload:
            raise TypeMismatch("image payload must be an object with a 'data' field")
        data = payload["data"]
        try:
            if isinstance(data, (bytes, bytearray)):
                return decode_jpeg(bytes(data))
            if isinstance(data, str):
                return decode_base64_image(data)
        except ImageError as exc:
            raise TypeMismatch(f"bad image payload: {exc}") from exc
        raise TypeMismatch(f"image data must be bytes or base64 text, got {type(data).__name__}")


AppInstance = MapperApp | DetectorApp


def app_on_message(instance: AppInstance, role: str, payload: object) -> list[tuple[str, object]]:
    """Functional alias over the instance method, for callers holding a union."""
    return instance.on_message(role, payload)


def create_app(
    descriptor: PackageDescriptor,
    instance_id: str,
    classifier_config: ClassifierConfig | None = None,
    map_spec: MapSpec | None = None,
) -> AppInstance:
    """Pick the implementation by the roles the package requires."""
    roles = set(descriptor.required_topics)
    if roles == {"tf", "scan"}:
        return MapperApp(instance_id, map_spec=map_spec)
    if roles == {"image"}:
        channel = descriptor.outputs[0] if descriptor.outputs else "detections"
        return DetectorApp(instance_id, config=classifier_config, channel=channel)
    raise UnknownPackage(
        f"package {descriptor.id!r} requires roles {sorted(roles)}; no implementation covers them"
    )

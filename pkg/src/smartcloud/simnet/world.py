"""2D world geometry and the planar lidar model.

Walls are line segments; a scan is the exact ray-segment intersection
distance per beam. No noise model here: the point is verifiable geometry, and
the network proxy supplies the stochastic part of the experiments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from smartcloud.apps.mapper import LaserScan2D, PoseOutOfBounds, Pose2D

WORLD_FORMAT = "smartcloud-world/1"


class WorldError(Exception):
    pass


@dataclass(frozen=True)
class WorldObject:
    label: str
    x: float
    y: float
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise WorldError(f"trigger radius must be > 0, got {self.radius}")


@dataclass(frozen=True)
class World2D:
    """Wall segments plus labeled objects inside a bounding rectangle."""

    bounds: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max
    walls: tuple[tuple[float, float, float, float], ...]
    objects: tuple[WorldObject, ...] = ()

    def __post_init__(self) -> None:
        x0, y0, x1, y1 = self.bounds
        if x1 <= x0 or y1 <= y0:
            raise WorldError(f"degenerate bounds {self.bounds}")
        for wx0, wy0, wx1, wy1 in self.walls:
            for x, y in ((wx0, wy0), (wx1, wy1)):
                if not (x0 <= x <= x1 and y0 <= y <= y1):
                    raise WorldError(f"wall endpoint ({x}, {y}) outside bounds {self.bounds}")
        for obj in self.objects:
            if not (x0 <= obj.x <= x1 and y0 <= obj.y <= y1):
                raise WorldError(f"object {obj.label!r} outside bounds {self.bounds}")

    def contains(self, x: float, y: float) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 <= x <= x1 and y0 <= y <= y1

    def to_wire(self) -> dict:
        return {
            "format": WORLD_FORMAT,
            "bounds": list(self.bounds),
            "walls": [list(w) for w in self.walls],
            "objects": [
                {"label": o.label, "x": o.x, "y": o.y, "radius": o.radius} for o in self.objects
            ],
        }

    @classmethod
    def from_wire(cls, payload: dict) -> "World2D":
        if payload.get("format") != WORLD_FORMAT:
            raise WorldError(f"unsupported world format {payload.get('format')!r}")
        return cls(
            bounds=tuple(float(v) for v in payload["bounds"]),
            walls=tuple(tuple(float(v) for v in w) for w in payload["walls"]),
            objects=tuple(
                WorldObject(str(o["label"]), float(o["x"]), float(o["y"]), float(o["radius"]))
                for o in payload.get("objects", [])
            ),
        )


def load_world_file(path: "str | Path") -> World2D:
    return World2D.from_wire(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class LidarConfig:
    """Planar scanner. Defaults: 360 beams over a full turn, 15 m reach."""

    beams: int = 360
    fov: float = 2.0 * math.pi
    range_min: float = 0.05
    range_max: float = 15.0

    def __post_init__(self) -> None:
        if self.beams < 1:
            raise WorldError("need at least one beam")

    @property
    def angle_min(self) -> float:
        return -self.fov / 2.0

    @property
    def angle_increment(self) -> float:
        # full-turn scans leave out the wrap-around duplicate beam
        if self.beams == 1:
            return 1.0
        span = self.fov if self.fov < 2.0 * math.pi else 2.0 * math.pi * (self.beams - 1) / self.beams
        return span / (self.beams - 1)

    @property
    def angle_max(self) -> float:
        return self.angle_min + (self.beams - 1) * self.angle_increment


def simulate_scan(world: World2D, pose: Pose2D, lidar: LidarConfig) -> LaserScan2D:
    """Exact per-beam distance to the nearest wall; beams that reach nothing
    within range_max read +inf (no return)."""
    if not world.contains(pose.x, pose.y):
        raise PoseOutOfBounds(f"pose ({pose.x:.3f}, {pose.y:.3f}) outside world bounds")

    angles = pose.theta + lidar.angle_min + np.arange(lidar.beams) * lidar.angle_increment
    if not world.walls:
        ranges = np.full(lidar.beams, math.inf)
    else:
        walls = np.asarray(world.walls, dtype=np.float64)  # (S, 4)
        dx = np.cos(angles)[:, None]  # (B, 1)
        dy = np.sin(angles)[:, None]
        apx = walls[None, :, 0] - pose.x  # (1, S) broadcast against beams
        apy = walls[None, :, 1] - pose.y
        vx = (walls[:, 2] - walls[:, 0])[None, :]
        vy = (walls[:, 3] - walls[:, 1])[None, :]
        denom = dx * vy - dy * vx  # cross(d, v) per beam-segment pair
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (apx * vy - apy * vx) / denom  # distance along the beam
            s = (apx * dy - apy * dx) / denom  # position along the segment
        valid = (np.abs(denom) > 1e-15) & (s >= 0.0) & (s <= 1.0) & (t >= 1e-12)
        t = np.where(valid, t, math.inf)
        ranges = t.min(axis=1)
    ranges = np.where(ranges <= lidar.range_max, ranges, math.inf)
    return LaserScan2D(
        angle_min=lidar.angle_min,
        angle_max=lidar.angle_max,
        angle_increment=lidar.angle_increment,
        range_min=lidar.range_min,
        range_max=lidar.range_max,
        ranges=tuple(ranges.tolist()),
    )


def default_world() -> World2D:
    """10x10 m room with a square pillar in the middle and one target object."""
    return World2D(
        bounds=(0.0, 0.0, 10.0, 10.0),
        walls=(
            (0.0, 0.0, 10.0, 0.0),
            (10.0, 0.0, 10.0, 10.0),
            (10.0, 10.0, 0.0, 10.0),
            (0.0, 10.0, 0.0, 0.0),
            (4.0, 4.0, 6.0, 4.0),
            (6.0, 4.0, 6.0, 6.0),
            (6.0, 6.0, 4.0, 6.0),
            (4.0, 6.0, 4.0, 4.0),
        ),
        objects=(WorldObject("Trash Can", 8.0, 5.0, 0.75),),
    )

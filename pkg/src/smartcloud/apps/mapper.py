"""Pose-known occupancy-grid mapping: the compute-bearing offload workload.

The grid stores per-cell log-odds, updated additively per beam: cells crossed
by a beam become more likely free, the cell holding the beam endpoint more
likely occupied. The robot's own cell is never updated. Updates are clamped so
no single region can saturate past the configured confidence bounds.

The per-beam ray walk is deliberately plain Python: it is the workload whose
cost the offloading experiments move between robot and cloud.
"""

from __future__ import annotations

import base64
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

L_FREE = -0.4
L_OCC = 0.85
L_MIN = -4.0
L_MAX = 4.0
P_OCCUPIED = 0.65
P_FREE = 0.35

MAP_SNAPSHOT_FORMAT = "smartcloud-map/1"

CELL_OCCUPIED = 1
CELL_FREE = 0
CELL_UNKNOWN = -1


class MapperError(Exception):
    pass


class PoseOutOfBounds(MapperError):
    """The robot pose lies outside the grid."""


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def to_wire(self) -> dict:
        return {"x": self.x, "y": self.y, "theta": self.theta}

    @classmethod
    def from_wire(cls, payload: dict) -> "Pose2D":
        return cls(x=float(payload["x"]), y=float(payload["y"]), theta=float(payload["theta"]))


@dataclass(frozen=True)
class LaserScan2D:
    angle_min: float
    angle_max: float
    angle_increment: float
    range_min: float
    range_max: float
    ranges: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranges", tuple(float(r) for r in self.ranges))
        expected = int(math.floor((self.angle_max - self.angle_min) / self.angle_increment + 1e-6)) + 1
        if len(self.ranges) != expected:
            raise MapperError(
                f"scan has {len(self.ranges)} ranges, expected {expected} from the angle span"
            )

    def beam_angle(self, i: int) -> float:
        return self.angle_min + i * self.angle_increment

    def is_return(self, r: float) -> bool:
        """A finite reading within [range_min, range_max]; anything else is no-return."""
        return math.isfinite(r) and self.range_min <= r <= self.range_max

    def to_wire(self) -> dict:
        """JSON-safe payload; NaN/inf no-returns become null."""
        return {
            "angle_min": self.angle_min,
            "angle_max": self.angle_max,
            "angle_increment": self.angle_increment,
            "range_min": self.range_min,
            "range_max": self.range_max,
            "ranges": [r if math.isfinite(r) else None for r in self.ranges],
        }

    @classmethod
    def from_wire(cls, payload: dict) -> "LaserScan2D":
        return cls(
            angle_min=float(payload["angle_min"]),
            angle_max=float(payload["angle_max"]),
            angle_increment=float(payload["angle_increment"]),
            range_min=float(payload["range_min"]),
            range_max=float(payload["range_max"]),
            ranges=tuple(math.nan if r is None else float(r) for r in payload["ranges"]),
        )


@dataclass
class OccupancyGrid:
    width: int
    height: int
    resolution: float
    origin_x: float = 0.0
    origin_y: float = 0.0
    l_min: float = L_MIN
    l_max: float = L_MAX
    cells: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.resolution <= 0:
            raise MapperError(f"resolution must be > 0, got {self.resolution}")
        if self.cells is None:
            self.cells = np.zeros((self.height, self.width), dtype=np.float64)
        if self.cells.shape != (self.height, self.width):
            raise MapperError(f"cell array shape {self.cells.shape} != (height, width)")

    @classmethod
    def from_extent(
        cls, x_min: float, y_min: float, x_max: float, y_max: float, resolution: float
    ) -> "OccupancyGrid":
        width = int(round((x_max - x_min) / resolution))
        height = int(round((y_max - y_min) / resolution))
        return cls(width=width, height=height, resolution=resolution, origin_x=x_min, origin_y=y_min)

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        """World point -> (cx, cy); may fall outside the grid."""
        cx = int(math.floor((x - self.origin_x) / self.resolution))
        cy = int(math.floor((y - self.origin_y) / self.resolution))
        return cx, cy

    def in_bounds(self, cx: int, cy: int) -> bool:
        return 0 <= cx < self.width and 0 <= cy < self.height

    def probabilities(self) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.cells))

    def classify(self) -> np.ndarray:
        """Per-cell label: occupied (p > 0.65), free (p < 0.35), else unknown."""
        p = self.probabilities()
        labels = np.full(p.shape, CELL_UNKNOWN, dtype=np.int8)
        labels[p > P_OCCUPIED] = CELL_OCCUPIED
        labels[p < P_FREE] = CELL_FREE
        return labels

    def to_snapshot(self) -> dict:
        """Versioned serialization: header + row-major probabilities quantized to 8 bits."""
        quantized = np.round(self.probabilities() * 255.0).astype(np.uint8)
        return {
            "format": MAP_SNAPSHOT_FORMAT,
            "width": self.width,
            "height": self.height,
            "resolution": self.resolution,
            "origin": [self.origin_x, self.origin_y],
            "cells": base64.b64encode(quantized.tobytes()).decode("ascii"),
        }

    @classmethod
    def from_snapshot(cls, snapshot: dict) -> "OccupancyGrid":
        if snapshot.get("format") != MAP_SNAPSHOT_FORMAT:
            raise MapperError(f"unsupported map snapshot format {snapshot.get('format')!r}")
        width, height = int(snapshot["width"]), int(snapshot["height"])
        raw = base64.b64decode(snapshot["cells"])
        p = np.frombuffer(raw, dtype=np.uint8).reshape((height, width)).astype(np.float64) / 255.0
        p = np.clip(p, 1e-6, 1.0 - 1e-6)
        grid = cls(
            width=width,
            height=height,
            resolution=float(snapshot["resolution"]),
            origin_x=float(snapshot["origin"][0]),
            origin_y=float(snapshot["origin"][1]),
        )
        grid.cells = np.log(p / (1.0 - p))
        return grid


def bresenham(x0: int, y0: int, x1: int, y1: int) -> Iterator[tuple[int, int]]:
    """Integer line traversal from (x0, y0) to (x1, y1), both endpoints included."""
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        yield x, y
        if x == x1 and y == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy


def occupancy_update(grid: OccupancyGrid, pose: Pose2D, scan: LaserScan2D) -> OccupancyGrid:
    """Fold one scan taken at a known pose into the grid (mutates and returns it).

    Per finite beam the ray is walked cell-by-cell: every crossed cell except
    the robot's own gets L_FREE, the endpoint cell gets L_OCC. No-return beams
    free the ray out to range_max without an occupied endpoint. Beams shorter
    than range_min carry no information and are skipped. All writes clamp to
    [l_min, l_max].
    """
    px, py = grid.cell_index(pose.x, pose.y)
    if not grid.in_bounds(px, py):
        raise PoseOutOfBounds(f"pose ({pose.x:.3f}, {pose.y:.3f}) is outside the grid")

    cells = grid.cells
    l_min, l_max = grid.l_min, grid.l_max
    cos = math.cos
    sin = math.sin
    for i, r in enumerate(scan.ranges):
        hit = scan.is_return(r)
        if not hit:
            if math.isfinite(r) and r < scan.range_min:
                continue  # too-close reading: no usable information
            dist = scan.range_max
        else:
            dist = r
        angle = pose.theta + scan.beam_angle(i)
        ex = pose.x + dist * cos(angle)
        ey = pose.y + dist * sin(angle)
        tx, ty = grid.cell_index(ex, ey)
        for cx, cy in bresenham(px, py, tx, ty):
            if cx == px and cy == py:
                continue  # never update the robot's own cell
            if not grid.in_bounds(cx, cy):
                continue
            delta = L_OCC if (hit and cx == tx and cy == ty) else L_FREE
            v = cells[cy, cx] + delta
            if v > l_max:
                v = l_max
            elif v < l_min:
                v = l_min
            cells[cy, cx] = v
    return grid


def map_entropy(grid: OccupancyGrid) -> float:
    """Total binary Shannon entropy of the map, in bits (remaining uncertainty)."""
    p = grid.probabilities()
    q = 1.0 - p
    # xlogx(0) = 0; the clamp keeps p in (0, 1) but stay safe anyway
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(p * np.log2(p, where=p > 0) + q * np.log2(q, where=q > 0))
    h[~np.isfinite(h)] = 0.0
    return float(np.sum(h))

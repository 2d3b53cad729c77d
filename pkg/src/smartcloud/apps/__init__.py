"""Offloadable applications: occupancy-grid mapping and image classification."""

from smartcloud.apps.classifier import ClassifierConfig, DetectionReport, classify_image
from smartcloud.apps.images import Image, decode_base64_image
from smartcloud.apps.mapper import (
    LaserScan2D,
    OccupancyGrid,
    Pose2D,
    map_entropy,
    occupancy_update,
)
from smartcloud.apps.runtime import DetectorApp, MapperApp, create_app

__all__ = [
    "ClassifierConfig",
    "DetectionReport",
    "DetectorApp",
    "Image",
    "LaserScan2D",
    "MapperApp",
    "OccupancyGrid",
    "Pose2D",
    "classify_image",
    "create_app",
    "decode_base64_image",
    "map_entropy",
    "occupancy_update",
]

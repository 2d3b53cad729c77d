"""Desk-scale experiment harness: 2D world, simulated robots, delay proxy,
and the heterogeneous-mission scenario runner."""

from smartcloud.simnet.proxy import DelayProxy, ProxyConfig
from smartcloud.simnet.world import LidarConfig, World2D, WorldObject, default_world, simulate_scan

__all__ = [
    "DelayProxy",
    "LidarConfig",
    "ProxyConfig",
    "World2D",
    "WorldObject",
    "default_world",
    "simulate_scan",
]

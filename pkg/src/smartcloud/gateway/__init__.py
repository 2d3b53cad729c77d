"""Cloud-layer gateway: robot sessions, offload lifecycle, control API."""

from smartcloud.gateway.state import (
    AlreadyStopped,
    AppInitFailure,
    DuplicateRobotId,
    GatewayError,
    GatewayState,
    InstanceStatus,
    MissingTopic,
    UnknownInstance,
    UnknownRobot,
)

__all__ = [
    "AlreadyStopped",
    "AppInitFailure",
    "DuplicateRobotId",
    "GatewayError",
    "GatewayState",
    "InstanceStatus",
    "MissingTopic",
    "UnknownInstance",
    "UnknownRobot",
]

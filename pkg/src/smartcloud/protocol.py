"""Wire codec and per-session state machine for the robot/gateway JSON protocol.

One JSON object per websocket text frame. Seven op kinds are supported:
advertise, unadvertise, publish, subscribe, unsubscribe, call_service and
service_response. Encoding is canonical (``op`` first, then ``id``, then the
remaining fields alphabetically; nested objects key-sorted) so identical
messages always produce byte-identical text.

Codec functions are pure and thread-safe. ``step_session`` mutates a single
session's state and must be called under per-session mutual exclusion.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, fields as dc_fields
from enum import Enum
from typing import Any, Callable, Mapping, Sequence, Union

logger = logging.getLogger(__name__)

UNKNOWN_TYPE = "unknown"
TOPICS_SERVICE = "/rosapi/topics"


class ProtocolError(Exception):
    """Base class for codec and session errors."""


class MalformedJson(ProtocolError):
    """Input is not parseable as a JSON object."""


class UnknownOp(ProtocolError):
    """The ``op`` field holds an unrecognized value."""


class SchemaViolation(ProtocolError):
    """A message is missing required fields or carries extra/invalid ones."""


# ---------------------------------------------------------------------------
# Message kinds


@dataclass(frozen=True, eq=True)
class Advertise:
    topic: str
    type: str
    id: str | None = None

    op = "advertise"


@dataclass(frozen=True, eq=True)
class Unadvertise:
    topic: str
    id: str | None = None

    op = "unadvertise"


@dataclass(frozen=True, eq=True)
class Publish:
    topic: str
    msg: Any
    id: str | None = None

    op = "publish"


@dataclass(frozen=True, eq=True)
class Subscribe:
    topic: str
    type: str | None = None
    id: str | None = None

    op = "subscribe"


@dataclass(frozen=True, eq=True)
class Unsubscribe:
    topic: str
    id: str | None = None

    op = "unsubscribe"


@dataclass(frozen=True, eq=True)
class CallService:
    service: str
    args: Any = None
    id: str | None = None

    op = "call_service"


@dataclass(frozen=True, eq=True)
class ServiceResponse:
    service: str
    result: bool
    values: Any = None
    id: str | None = None

    op = "service_response"


ProtocolMessage = Union[
    Advertise, Unadvertise, Publish, Subscribe, Unsubscribe, CallService, ServiceResponse
]

_OP_TO_CLASS: dict[str, type] = {
    cls.op: cls
    for cls in (Advertise, Unadvertise, Publish, Subscribe, Unsubscribe, CallService, ServiceResponse)
}

# Fields that must be present on the wire for each op; everything else the
# dataclass defines is optional, and anything beyond that is rejected.
_REQUIRED: dict[str, frozenset[str]] = {
    "advertise": frozenset({"topic", "type"}),
    "unadvertise": frozenset({"topic"}),
    "publish": frozenset({"topic", "msg"}),
    "subscribe": frozenset({"topic"}),
    "unsubscribe": frozenset({"topic"}),
    "call_service": frozenset({"service"}),
    "service_response": frozenset({"service", "result"}),
}

_ALLOWED: dict[str, frozenset[str]] = {
    op: frozenset(f.name for f in dc_fields(cls)) for op, cls in _OP_TO_CLASS.items()
}

_NAME_FIELDS = ("topic", "service")


def validate(msg: ProtocolMessage) -> None:
    """Check a message against its op kind's field contract.

    Raises SchemaViolation for empty/ill-formed names or wrongly typed fields.
    """
    op = getattr(msg, "op", None)
    if op not in _OP_TO_CLASS:
        raise UnknownOp(f"not a protocol message: {msg!r}")
    for name in _NAME_FIELDS:
        value = getattr(msg, name, None)
        if value is None:
            continue
        if not isinstance(value, str) or not value.startswith("/") or len(value) < 2:
            raise SchemaViolation(f"{name} must be a non-empty string starting with '/': {value!r}")
    for name in ("type", "id"):
        value = getattr(msg, name, None)
        if value is not None and (not isinstance(value, str) or not value):
            raise SchemaViolation(f"{name} must be a non-empty string: {value!r}")
    if op == "service_response" and not isinstance(msg.result, bool):
        raise SchemaViolation(f"result must be a boolean: {msg.result!r}")


def _canonical(value: Any) -> Any:
    """Recursively key-sort mappings so encoding depends on value, not insertion order."""
    if isinstance(value, Mapping):
        return {k: _canonical(value[k]) for k in sorted(value)}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    return value


def encode(msg: ProtocolMessage) -> str:
    """Encode a message to canonical UTF-8 JSON text (one websocket frame)."""
    validate(msg)
    body: dict[str, Any] = {}
    for f in dc_fields(msg):
        value = getattr(msg, f.name)
        if value is None and f.name in ("id", "type", "args", "values", "msg"):
            if f.name == "msg":
                body[f.name] = value  # publish msg may legitimately be null
            continue
        body[f.name] = value
    ordered: dict[str, Any] = {"op": msg.op}
    if body.get("id") is not None:
        ordered["id"] = body.pop("id")
    else:
        body.pop("id", None)
    for key in sorted(body):
        ordered[key] = _canonical(body[key])
    return json.dumps(ordered, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def decode(text: str) -> ProtocolMessage:
    """Decode one frame of JSON text; inverse of encode, tolerant of field order."""
    try:
        raw = json.loads(text)
    except (ValueError, TypeError) as exc:
        raise MalformedJson(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaViolation(f"frame must be a JSON object, got {type(raw).__name__}")
    op = raw.get("op")
    if op is None:
        raise SchemaViolation("frame has no 'op' field")
    if not isinstance(op, str) or op not in _OP_TO_CLASS:
        raise UnknownOp(f"unrecognized op {op!r}")
    present = set(raw) - {"op"}
    extra = present - _ALLOWED[op]
    if extra:
        raise SchemaViolation(f"extra fields for op '{op}': {sorted(extra)}")
    missing = _REQUIRED[op] - present
    if missing:
        raise SchemaViolation(f"missing fields for op '{op}': {sorted(missing)}")
    kwargs = {k: raw[k] for k in present}
    msg = _OP_TO_CLASS[op](**kwargs)
    validate(msg)
    return msg


# ---------------------------------------------------------------------------
# Session state machine


class SessionMode(Enum):
    ROS = "ros"
    NON_ROS = "raw"


class Origin(Enum):
    FROM_ROBOT = "robot"
    FROM_CLOUD = "cloud"


class EffectKind(Enum):
    DELIVER = "deliver"
    REGISTER_ROUTE = "register_route"
    UNREGISTER_ROUTE = "unregister_route"
    RESPOND = "respond"
    REJECT = "reject"


@dataclass(frozen=True)
class RouteEffect:
    """A routing instruction for the gateway: what to do with a processed frame.

    ``target`` is a session id (deliver to the robot connection) or an app
    instance id (deliver to a cloud-side consumer).
    """

    kind: EffectKind
    target: str
    payload: ProtocolMessage | None = None
    reason: str | None = None


@dataclass
class SessionState:
    """Per-robot connection state: advertisements, subscriptions, pending calls."""

    session_id: str
    mode: SessionMode = SessionMode.ROS
    strict_advertise: bool = False
    advertised: dict[str, str] = field(default_factory=dict)
    subscriptions: dict[str, str | None] = field(default_factory=dict)
    pending_calls: dict[str, str] = field(default_factory=dict)
    _call_counter: int = 0

    def new_call_id(self) -> str:
        """Server-generated correlation id, unique within the session."""
        self._call_counter += 1
        return f"{self.session_id}:{self._call_counter}"

    def check_invariants(self) -> None:
        # dict keys are unique by construction; guard value sanity instead
        for topic in list(self.advertised) + list(self.subscriptions):
            if not topic.startswith("/"):
                raise SchemaViolation(f"bad topic recorded in session state: {topic!r}")


ServiceHandler = Callable[[Any], Any]


def _reject(state: SessionState, msg: ProtocolMessage, reason: str) -> RouteEffect:
    logger.warning("session %s: rejecting %s frame: %s", state.session_id, msg.op, reason)
    return RouteEffect(EffectKind.REJECT, state.session_id, msg, reason)


def _respond_topics(state: SessionState, call: CallService) -> ServiceResponse:
    topics = list(state.advertised)
    return ServiceResponse(
        service=call.service,
        result=True,
        values={"topics": topics, "types": [state.advertised[t] for t in topics]},
        id=call.id,
    )


def step_session(
    state: SessionState,
    inbound: ProtocolMessage,
    origin: Origin,
    consumers: Mapping[str, Sequence[str]] | None = None,
    services: Mapping[str, ServiceHandler] | None = None,
) -> tuple[SessionState, list[RouteEffect]]:
    """Apply one inbound message to a session and emit routing effects.

    ``consumers`` maps topic name -> cloud-side consumer ids (app instances);
    when omitted, a publish on a subscribed topic yields a single Deliver
    targeting the session itself. ``services`` maps service name -> handler
    for cloud-hosted services beyond the built-in topic listing.
    """
    effects: list[RouteEffect] = []

    if isinstance(inbound, Advertise):
        state.advertised[inbound.topic] = inbound.type

    elif isinstance(inbound, Unadvertise):
        if inbound.topic not in state.advertised:
            effects.append(_reject(state, inbound, f"topic {inbound.topic} was never advertised"))
        else:
            del state.advertised[inbound.topic]

    elif isinstance(inbound, Subscribe):
        state.subscriptions[inbound.topic] = inbound.type
        effects.append(RouteEffect(EffectKind.REGISTER_ROUTE, state.session_id, inbound))

    elif isinstance(inbound, Unsubscribe):
        if inbound.topic not in state.subscriptions:
            effects.append(_reject(state, inbound, f"topic {inbound.topic} was never subscribed"))
        else:
            del state.subscriptions[inbound.topic]
            effects.append(RouteEffect(EffectKind.UNREGISTER_ROUTE, state.session_id, inbound))

    elif isinstance(inbound, Publish):
        if origin is Origin.FROM_ROBOT and inbound.topic not in state.advertised:
            if state.strict_advertise:
                effects.append(_reject(state, inbound, f"publish to unadvertised topic {inbound.topic}"))
                return state, effects
            logger.warning(
                "session %s: implicit advertise of %s (type %s)",
                state.session_id,
                inbound.topic,
                UNKNOWN_TYPE,
            )
            state.advertised[inbound.topic] = UNKNOWN_TYPE
        if origin is Origin.FROM_CLOUD:
            effects.append(RouteEffect(EffectKind.DELIVER, state.session_id, inbound))
        elif consumers is not None:
            targets = list(consumers.get(inbound.topic, ()))
            effects.extend(RouteEffect(EffectKind.DELIVER, t, inbound) for t in targets)
        elif inbound.topic in state.subscriptions:
            # loopback mode: the session is its own registered consumer
            effects.append(RouteEffect(EffectKind.DELIVER, state.session_id, inbound))

    elif isinstance(inbound, CallService):
        if origin is Origin.FROM_CLOUD:
            if inbound.id is None:
                effects.append(_reject(state, inbound, "cloud-originated call requires a correlation id"))
            elif inbound.id in state.pending_calls:
                effects.append(_reject(state, inbound, f"duplicate correlation id {inbound.id}"))
            else:
                state.pending_calls[inbound.id] = inbound.service
                effects.append(RouteEffect(EffectKind.DELIVER, state.session_id, inbound))
        elif inbound.service == TOPICS_SERVICE:
            effects.append(RouteEffect(EffectKind.RESPOND, state.session_id, _respond_topics(state, inbound)))
        elif services is not None and inbound.service in services:
            try:
                values = services[inbound.service](inbound.args)
                response = ServiceResponse(inbound.service, True, values, id=inbound.id)
            except Exception as exc:  # noqa: BLE001 - handler fault becomes a failed call
                logger.exception("service handler %s failed", inbound.service)
                response = ServiceResponse(inbound.service, False, {"error": str(exc)}, id=inbound.id)
            effects.append(RouteEffect(EffectKind.RESPOND, state.session_id, response))
        else:
            response = ServiceResponse(
                inbound.service, False, {"error": f"unknown service {inbound.service}"}, id=inbound.id
            )
            effects.append(RouteEffect(EffectKind.RESPOND, state.session_id, response))

    elif isinstance(inbound, ServiceResponse):
        if origin is Origin.FROM_ROBOT:
            if inbound.id is not None and inbound.id in state.pending_calls:
                del state.pending_calls[inbound.id]
                effects.append(RouteEffect(EffectKind.RESPOND, state.session_id, inbound))
            else:
                effects.append(_reject(state, inbound, f"response with unknown correlation id {inbound.id!r}"))
        else:
            effects.append(RouteEffect(EffectKind.DELIVER, state.session_id, inbound))

    else:
        raise UnknownOp(f"not a protocol message: {inbound!r}")

    return state, effects

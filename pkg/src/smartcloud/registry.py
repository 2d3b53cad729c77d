"""Capability registry: which offloadable packages fit a robot's topics or payloads.

Matching is type-driven: a package matches when every required role can be
bound to a distinct available topic of the required message type (two roles
demanding the same type need two topics). A package may opt into exact-name
matching instead, which additionally pins role ``r`` to the topic ``/r``.

The registry is immutable after load; queries are read-only and safe for
concurrent use.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Any, Mapping

JPEG_MAGIC = b"\xff\xd8\xff"
PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

REGISTRY_FORMAT = "smartcloud-registry/1"


class RegistryError(Exception):
    """Base class for registry loading problems."""


class ParseError(RegistryError):
    """Registry source is not valid JSON or violates the schema."""


class DuplicateId(RegistryError):
    """Two package declarations share an id."""


class DanglingReference(RegistryError):
    """A payload-app list references a package id that does not exist."""


class PackageKind(Enum):
    ROS_PACKAGE = "ros"
    JS_LIBRARY_APP = "js"


class PayloadKind(Enum):
    IMAGE = "image"
    GPS = "gps"
    LASER_SCAN = "laser_scan"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class PackageDescriptor:
    """An offloadable application's identity and required topic signature."""

    id: str
    kind: PackageKind
    required_topics: Mapping[str, str] = field(default_factory=dict)
    outputs: tuple[str, ...] = ()
    exact_names: bool = False

    def __post_init__(self) -> None:
        if not self.id:
            raise ParseError("package id must be non-empty")


@dataclass(frozen=True)
class Registry:
    packages: Mapping[str, PackageDescriptor]
    payload_apps: Mapping[PayloadKind, tuple[str, ...]]

    def get(self, package_id: str) -> PackageDescriptor | None:
        return self.packages.get(package_id)


def _parse_package(entry: Any) -> PackageDescriptor:
    if not isinstance(entry, dict):
        raise ParseError(f"package entry must be an object, got {type(entry).__name__}")
    try:
        pkg_id = entry["id"]
        kind = PackageKind(entry.get("kind", "ros"))
    except KeyError as exc:
        raise ParseError(f"package entry missing {exc}") from exc
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    requires = entry.get("requires", {})
    outputs = entry.get("outputs", [])
    if not isinstance(requires, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in requires.items()
    ):
        raise ParseError(f"package {pkg_id}: 'requires' must map role name to type name")
    if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
        raise ParseError(f"package {pkg_id}: 'outputs' must be a list of channel names")
    return PackageDescriptor(
        id=pkg_id,
        kind=kind,
        required_topics=dict(requires),
        outputs=tuple(outputs),
        exact_names=bool(entry.get("exact_names", False)),
    )


def load_registry(source: str) -> Registry:
    """Parse and validate a registry configuration document (JSON text)."""
    try:
        doc = json.loads(source)
    except ValueError as exc:
        raise ParseError(f"registry is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != REGISTRY_FORMAT:
        raise ParseError(f"registry document must declare format {REGISTRY_FORMAT!r}")

    packages: dict[str, PackageDescriptor] = {}
    for entry in doc.get("packages", []):
        pkg = _parse_package(entry)
        if pkg.id in packages:
            raise DuplicateId(f"duplicate package id {pkg.id!r}")
        packages[pkg.id] = pkg

    payload_apps: dict[PayloadKind, tuple[str, ...]] = {}
    raw_apps = doc.get("payload_apps", {})
    if not isinstance(raw_apps, dict):
        raise ParseError("'payload_apps' must map payload kind to package ids")
    for key, ids in raw_apps.items():
        try:
            kind = PayloadKind(key)
        except ValueError as exc:
            raise ParseError(f"unknown payload kind {key!r}") from exc
        if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
            raise ParseError(f"payload_apps[{key!r}] must be a list of package ids")
        for pkg_id in ids:
            if pkg_id not in packages:
                raise DanglingReference(f"payload app {pkg_id!r} is not a declared package")
        payload_apps[kind] = tuple(ids)

    return Registry(packages=packages, payload_apps=payload_apps)


def load_registry_file(path: str) -> Registry:
    with open(path, "r", encoding="utf-8") as fh:
        return load_registry(fh.read())


def default_registry() -> Registry:
    """The registry shipped with the package (gmapping, detection, tracking, geofence)."""
    source = resources.files("smartcloud.data").joinpath("registry.json").read_text("utf-8")
    return load_registry(source)


def _matches(available: Mapping[str, str], pkg: PackageDescriptor) -> bool:
    if pkg.exact_names:
        for role, type_name in pkg.required_topics.items():
            if available.get(f"/{role}") != type_name:
                return False
        return True
    # Type-driven with role binding: roles demanding the same type must bind
    # to distinct topics, so count topics per type.
    need = Counter(pkg.required_topics.values())
    have = Counter(available.values())
    return all(have[type_name] >= count for type_name, count in need.items())


def match_packages(available: Mapping[str, str], reg: Registry) -> list[str]:
    """Package ids runnable on the given topics (name -> type), sorted by id."""
    return sorted(pkg_id for pkg_id, pkg in reg.packages.items() if _matches(available, pkg))


def apps_for_payload(kind: PayloadKind, reg: Registry) -> list[str]:
    """Package ids configured for a payload kind, sorted by id; Unknown yields []."""
    if kind is PayloadKind.UNKNOWN:
        return []
    return sorted(reg.payload_apps.get(kind, ()))


def _looks_like_nmea(text: str) -> bool:
    head = text.lstrip()[:6]
    return head.startswith("$GP") or head.startswith("$GN") or head.startswith("$GL")


def classify_payload(payload: bytes, content_hint: str | None = None) -> PayloadKind:
    """Total, deterministic payload classification for the non-ROS ingestion path."""
    if content_hint and content_hint.split(";")[0].strip().lower().startswith("image/"):
        return PayloadKind.IMAGE
    if payload.startswith(JPEG_MAGIC) or payload.startswith(PNG_MAGIC):
        return PayloadKind.IMAGE
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError:
        return PayloadKind.UNKNOWN
    if _looks_like_nmea(text):
        return PayloadKind.GPS
    try:
        doc = json.loads(text)
    except ValueError:
        return PayloadKind.UNKNOWN
    if isinstance(doc, dict):
        if isinstance(doc.get("ranges"), list) and (
            "angle_min" in doc or "angle_increment" in doc
        ):
            return PayloadKind.LASER_SCAN
        if isinstance(doc.get("lat"), (int, float)) and isinstance(doc.get("lon"), (int, float)):
            return PayloadKind.GPS
    return PayloadKind.UNKNOWN

"""Deterministic image classification stand-in.

Two paths share one entry point. A fixture manifest maps image content
digests to pinned results, which is what the repeatable experiments use. When
a digest is not pinned, a cheap intensity-signature heuristic produces stable
output for arbitrary frames so live demos still show detections.

Per-class probabilities are independent scores, not a distribution; they are
not expected to sum to 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from smartcloud.apps.images import Image

FIXTURE_MANIFEST_FORMAT = "smartcloud-fixtures/1"

# Ordered label table for the heuristic path; index = intensity bucket.
DEFAULT_LABELS = (
    "Trash Can",
    "Swivel Chair",
    "File Cabinet",
    "Desk",
    "Monitor",
    "Whiteboard",
    "Bookshelf",
    "Door",
)


class ClassifierError(Exception):
    pass


class EmptyImage(ClassifierError):
    """Classification needs at least one pixel."""


class ManifestError(ClassifierError):
    """Fixture manifest is malformed."""


@dataclass(frozen=True)
class Detection:
    label: str
    probability: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ClassifierError(f"probability {self.probability} outside [0, 1]")


@dataclass(frozen=True)
class DetectionReport:
    """One classification result as delivered to clients.

    message_id 0 is reserved for the before-first-result rendering; stores
    assign ids starting at 1.
    """

    message_id: int
    reference_id: str
    results: tuple[Detection, ...]

    def __post_init__(self) -> None:
        if self.message_id < 0:
            raise ClassifierError(f"message id must be >= 0, got {self.message_id}")
        object.__setattr__(self, "results", tuple(self.results))

    @classmethod
    def from_pairs(
        cls, message_id: int, reference_id: str, pairs: "list[tuple[str, float]] | tuple"
    ) -> "DetectionReport":
        return cls(message_id, reference_id, tuple(Detection(l, p) for l, p in pairs))

    def pairs(self) -> list[tuple[str, float]]:
        return [(d.label, d.probability) for d in self.results]

    def to_wire(self) -> dict:
        return {
            "message_id": self.message_id,
            "reference_id": self.reference_id,
            "results": [[d.label, d.probability] for d in self.results],
        }

    @classmethod
    def from_wire(cls, payload: dict) -> "DetectionReport":
        return cls.from_pairs(
            int(payload["message_id"]),
            str(payload["reference_id"]),
            [(str(l), float(p)) for l, p in payload["results"]],
        )


@dataclass(frozen=True)
class ClassifierConfig:
    """Fixture manifest plus the heuristic fallback's label table."""

    fixtures: dict = field(default_factory=dict)  # digest -> tuple[Detection, ...]
    labels: tuple[str, ...] = DEFAULT_LABELS

    def __post_init__(self) -> None:
        if not self.labels:
            raise ClassifierError("label table must not be empty")


def load_classifier_config(path: "str | Path") -> ClassifierConfig:
    """Read a fixture manifest file into a config."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if raw.get("format") != FIXTURE_MANIFEST_FORMAT:
        raise ManifestError(f"unsupported manifest format {raw.get('format')!r}")
    fixtures: dict = {}
    for entry in raw.get("fixtures", []):
        digest = entry.get("digest")
        results = entry.get("results")
        if not isinstance(digest, str) or not isinstance(results, list):
            raise ManifestError(f"bad fixture entry: {entry!r}")
        if digest in fixtures:
            raise ManifestError(f"duplicate digest {digest}")
        fixtures[digest] = tuple(Detection(str(l), float(p)) for l, p in results)
    labels = tuple(raw["labels"]) if "labels" in raw else DEFAULT_LABELS
    return ClassifierConfig(fixtures=fixtures, labels=labels)


def intensity_signature(image: Image) -> tuple[float, float, float]:
    """Mean 8-bit intensity of the top, middle, and bottom thirds of the image."""
    if image.width == 0 or image.height == 0:
        raise EmptyImage("image has zero pixels")
    row_bytes = image.width * 3
    bounds = [0, image.height // 3, 2 * image.height // 3, image.height]
    means = []
    for lo, hi in zip(bounds, bounds[1:]):
        band = image.pixels[lo * row_bytes : hi * row_bytes]
        means.append(sum(band) / len(band) if band else 0.0)
    return (means[0], means[1], means[2])


def classify_image(image: Image, config: ClassifierConfig) -> list[tuple[str, float]]:
    """Classify one frame: manifest hit returns the pinned results, otherwise
    each intensity bucket selects a label and its normalized weight."""
    if image.width == 0 or image.height == 0:
        raise EmptyImage("image has zero pixels")
    pinned = config.fixtures.get(image.digest())
    if pinned is not None:
        return [(d.label, d.probability) for d in pinned]
    signature = intensity_signature(image)
    total = sum(signature)
    n = len(config.labels)
    results = []
    for mean in signature:
        index = min(int(mean * n / 256.0), n - 1)
        weight = round(mean / total, 2) if total > 0 else 0.0
        results.append((config.labels[index], weight))
    return results

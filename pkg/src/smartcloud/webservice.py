"""XML result rendering and the per-stream latest-result store.

The non-ROS path reports detections as a small XML document that clients
poll. Rendering is byte-stable: fixed element order, 2-space indentation,
probabilities always printed with 2 decimals, and an empty ReferenceID kept
as an empty element.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from xml.sax.saxutils import escape

from smartcloud.apps.classifier import DetectionReport

XML_CONTENT_TYPE = "application/xml"


class WebServiceError(Exception):
    pass


class UnknownStream(WebServiceError):
    """No such stream was ever provisioned."""


def render_detection_xml(report: DetectionReport) -> str:
    lines = ['<?xml version="1.0"?>', "<Response>", "  <Message>"]
    lines.append(f"    <MessageID>{report.message_id}</MessageID>")
    lines.append(f"    <ReferenceID>{escape(report.reference_id)}</ReferenceID>")
    for det in report.results:
        lines.append("    <Result>")
        lines.append(f"      <Class>{escape(det.label)}</Class>")
        lines.append(f"      <Probability>{det.probability:.2f}</Probability>")
        lines.append("    </Result>")
    lines.append("  </Message>")
    lines.append("</Response>")
    return "\n".join(lines) + "\n"


@dataclass
class _StreamState:
    report: DetectionReport | None = None
    counter: int = 0
    last_update: float = 0.0


class ResultStore:
    """Latest detection result per stream, with a monotone message counter.

    push() assigns ids; concurrent pushes to one stream serialize on the
    store lock, reads take a brief snapshot under the same lock.
    """

    def __init__(self) -> None:
        self._streams: dict[str, _StreamState] = {}
        self._lock = threading.Lock()

    def create_stream(self, stream_id: str) -> None:
        with self._lock:
            self._streams.setdefault(stream_id, _StreamState())

    def drop_stream(self, stream_id: str) -> None:
        with self._lock:
            self._streams.pop(stream_id, None)

    def has(self, stream_id: str) -> bool:
        with self._lock:
            return stream_id in self._streams

    def stream_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._streams)

    def push(
        self, stream_id: str, results: list[tuple[str, float]], reference_id: str = ""
    ) -> DetectionReport:
        """Store a new result and return it with the next message id."""
        with self._lock:
            state = self._streams.get(stream_id)
            if state is None:
                raise UnknownStream(stream_id)
            state.counter += 1
            report = DetectionReport.from_pairs(state.counter, reference_id, results)
            state.report = report
            state.last_update = time.time()
            return report

    def latest(self, stream_id: str) -> DetectionReport | None:
        with self._lock:
            state = self._streams.get(stream_id)
            if state is None:
                raise UnknownStream(stream_id)
            return state.report

    def latest_xml(self, stream_id: str) -> str:
        """XML for the stream's latest report; MessageID 0 before any result."""
        report = self.latest(stream_id)
        if report is None:
            report = DetectionReport(0, "", ())
        return render_detection_xml(report)

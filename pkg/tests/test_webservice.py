import threading
from importlib import resources

import pytest

from smartcloud.apps.classifier import DetectionReport
from smartcloud.webservice import (
    ResultStore,
    UnknownStream,
    render_detection_xml,
    XML_CONTENT_TYPE,
)

PAPER_RESULTS = [("Trash Can", 0.66), ("Swivel Chair", 0.72), ("File Cabinet", 0.44)]


def golden_text() -> str:
    path = resources.files("smartcloud.data") / "golden" / "detection.xml"
    return path.read_text(encoding="utf-8")


def test_golden_byte_identity():
    report = DetectionReport.from_pairs(1, "", PAPER_RESULTS)
    assert render_detection_xml(report) == golden_text()


def test_probabilities_always_two_decimals():
    report = DetectionReport.from_pairs(1, "", [("A", 0.5), ("B", 1.0), ("C", 0.0)])
    xml = render_detection_xml(report)
    assert "<Probability>0.50</Probability>" in xml
    assert "<Probability>1.00</Probability>" in xml
    assert "<Probability>0.00</Probability>" in xml


def test_labels_and_reference_are_escaped():
    report = DetectionReport.from_pairs(7, "a<b&c", [("Mops & <Brooms>", 0.25)])
    xml = render_detection_xml(report)
    assert "<ReferenceID>a&lt;b&amp;c</ReferenceID>" in xml
    assert "<Class>Mops &amp; &lt;Brooms&gt;</Class>" in xml


def test_no_results_renders_empty_message():
    xml = render_detection_xml(DetectionReport(0, "", ()))
    assert "<MessageID>0</MessageID>" in xml
    assert "<Result>" not in xml
    assert xml.endswith("</Response>\n")


def test_content_type_constant():
    assert XML_CONTENT_TYPE == "application/xml"


# ---- store ---------------------------------------------------------------------


def test_stream_lifecycle_and_monotone_ids():
    store = ResultStore()
    store.create_stream("camera")
    assert store.latest("camera") is None
    first = store.push("camera", [("A", 0.1)])
    second = store.push("camera", [("B", 0.2)], reference_id="r2")
    assert (first.message_id, second.message_id) == (1, 2)
    assert store.latest("camera") == second
    assert store.latest("camera").reference_id == "r2"


def test_latest_xml_before_any_result_uses_id_zero():
    store = ResultStore()
    store.create_stream("camera")
    xml = store.latest_xml("camera")
    assert "<MessageID>0</MessageID>" in xml


def test_read_idempotence():
    store = ResultStore()
    store.create_stream("camera")
    store.push("camera", PAPER_RESULTS)
    assert store.latest_xml("camera") == store.latest_xml("camera")


def test_unknown_stream_raises():
    store = ResultStore()
    with pytest.raises(UnknownStream):
        store.latest("ghost")
    with pytest.raises(UnknownStream):
        store.push("ghost", [])
    with pytest.raises(UnknownStream):
        store.latest_xml("ghost")


def test_create_stream_is_idempotent_and_keeps_counter():
    store = ResultStore()
    store.create_stream("camera")
    store.push("camera", [("A", 0.5)])
    store.create_stream("camera")  # no reset
    assert store.push("camera", [("B", 0.5)]).message_id == 2


def test_drop_stream_resets_ids():
    store = ResultStore()
    store.create_stream("camera")
    store.push("camera", [("A", 0.5)])
    store.drop_stream("camera")
    assert not store.has("camera")
    store.create_stream("camera")
    assert store.push("camera", [("A", 0.5)]).message_id == 1


def test_concurrent_pushes_linearize():
    store = ResultStore()
    store.create_stream("camera")
    ids = []
    lock = threading.Lock()

    def worker():
        for _ in range(50):
            report = store.push("camera", [("A", 0.5)])
            with lock:
                ids.append(report.message_id)

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(ids) == list(range(1, 201))
    assert store.latest("camera").message_id == 200

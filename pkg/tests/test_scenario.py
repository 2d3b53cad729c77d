import asyncio
import json

import pytest

from smartcloud.simnet.scenario import (
    EV_DETECTION_REPORTED,
    EV_FRAME_POSTED,
    EV_MAPPING_STARTED,
    EV_MAPPING_STOPPED,
    EV_TARGET_FOUND,
    FixtureMissing,
    ScenarioError,
    ScenarioScript,
    default_scenario,
    load_scenario_file,
    run_scenario,
)

from conftest import fresh_gateway


@pytest.fixture(scope="module")
def target_runs():
    """The same with-target mission run twice against one gateway."""
    script = default_scenario(with_target=True)
    with fresh_gateway() as gw:
        first = asyncio.run(run_scenario(script, gateway=gw.address))
        second = asyncio.run(run_scenario(script, gateway=gw.address))
    return first, second


@pytest.fixture(scope="module")
def explore_run():
    script = default_scenario(with_target=False)
    with fresh_gateway() as gw:
        return asyncio.run(run_scenario(script, gateway=gw.address))


def test_event_log_replays_byte_identical(target_runs):
    first, second = target_runs
    assert first.event_log_text() == second.event_log_text()
    assert first.entropy_series == second.entropy_series


def test_event_log_is_canonical_ndjson(target_runs):
    first, _ = target_runs
    lines = first.event_log_text().splitlines()
    assert len(lines) == len(first.events)
    for line, event in zip(lines, first.events):
        assert json.loads(line) == event
        assert line == json.dumps(event, sort_keys=True, separators=(",", ":"))


def test_mission_event_ordering(target_runs):
    first, _ = target_runs
    kinds = [e["event"] for e in first.events]
    assert kinds[0] == EV_MAPPING_STARTED
    assert kinds[-3:] == [EV_DETECTION_REPORTED, EV_TARGET_FOUND, EV_MAPPING_STOPPED]
    times = [e["t"] for e in first.events]
    assert times == sorted(times)

    found = first.events[-2]
    assert found["label"] == "Trash Can"
    assert found["probability"] >= 0.5
    stopped = first.events[-1]
    assert stopped["t"] == found["t"]
    assert stopped["scans"] == first.scans_streamed


def test_detection_ids_strictly_increase(target_runs):
    first, _ = target_runs
    ids = [e["message_id"] for e in first.events if e["event"] == EV_DETECTION_REPORTED]
    assert ids == sorted(set(ids))
    assert len(ids) >= 2  # fillers reported before the target frame


def test_frames_acknowledged_in_post_order(target_runs):
    first, _ = target_runs
    posts = [e for e in first.events if e["event"] == EV_FRAME_POSTED]
    assert [e["message_id"] for e in posts] == list(range(1, len(posts) + 1))
    assert first.frames_posted == len(posts)
    assert posts[-1]["frame"] == "office.jpg"


def test_target_free_run_completes_the_circuit(explore_run):
    kinds = [e["event"] for e in explore_run.events]
    assert EV_TARGET_FOUND not in kinds
    assert kinds[-1] == EV_MAPPING_STOPPED
    assert explore_run.scans_streamed > 200  # full circuit at 5 Hz


def test_exploration_reduces_entropy(explore_run):
    series = [bits for _, bits in explore_run.entropy_series]
    grid = explore_run.final_grid()
    assert grid is not None
    initial = float(grid.cells.size)  # 1 bit per unknown cell
    assert series[0] < initial
    assert series[-1] <= 0.2 * initial
    indices = [i for i, _ in explore_run.entropy_series]
    assert indices == list(range(1, len(indices) + 1))


def test_fixture_missing_detected_before_connecting():
    script = ScenarioScript(frames=((1.0, "no-such-frame.jpg"),))
    with pytest.raises(FixtureMissing):
        asyncio.run(run_scenario(script, gateway="127.0.0.1:1"))


def test_waypoint_outside_world_detected_before_connecting():
    script = ScenarioScript(waypoints=((2.0, 2.0), (99.0, 2.0)))
    with pytest.raises(ScenarioError):
        asyncio.run(run_scenario(script, gateway="127.0.0.1:1"))


def test_script_validation():
    with pytest.raises(ScenarioError):
        ScenarioScript(waypoints=((1.0, 1.0),))
    with pytest.raises(ScenarioError):
        ScenarioScript(threshold=0.0)
    with pytest.raises(ScenarioError):
        ScenarioScript(threshold=1.5)
    with pytest.raises(ScenarioError):
        ScenarioScript(step=0.0)
    with pytest.raises(ScenarioError):
        ScenarioScript(scan_rate_hz=-1.0)
    with pytest.raises(ScenarioError):
        ScenarioScript(poll_period_s=0.0)


def test_script_file_round_trip(tmp_path):
    script = default_scenario(with_target=True)
    path = tmp_path / "mission.json"
    path.write_text(json.dumps(script.to_wire()), encoding="utf-8")
    assert load_scenario_file(path) == script


def test_script_wrong_format_rejected():
    doc = default_scenario().to_wire()
    doc["format"] = "smartcloud-scenario/9"
    with pytest.raises(ScenarioError):
        ScenarioScript.from_wire(doc)


def test_map_spec_passes_through_wire():
    spec = {"x_min": 0.0, "y_min": 0.0, "x_max": 2.0, "y_max": 2.0, "resolution": 0.5}
    script = ScenarioScript(map_spec=spec)
    assert ScenarioScript.from_wire(script.to_wire()).map_spec == spec

import { describe, expect, it } from "vitest";

import {
  DETECTION_CAP,
  EVENT_BUFFER_CAP,
  applyEvent,
  createState,
  setOffloads,
  setPackages,
  setRobots,
  setSelectedRobot,
} from "../src/state.js";
import type { GatewayEvent, RobotInfo } from "../src/types.js";

function robot(id: string, topics: Record<string, string> = {}): RobotInfo {
  return {
    robot: id,
    display_name: id,
    mode: "ros",
    connected_at: 0,
    topics,
  };
}

function resultEvent(channel: string, seq: number, value: unknown): GatewayEvent {
  return {
    event: "result",
    instance: "gmapping-1",
    robot: "jackal",
    channel,
    seq,
    value,
  };
}

describe("ConsoleState reducer", () => {
  it("upserts offload rows from status-change events", () => {
    const state = createState();
    applyEvent(state, {
      event: "status-change",
      instance: "gmapping-1",
      package: "gmapping",
      robot: "jackal",
      status: "running",
    });
    expect(state.offloads.get("gmapping-1")?.status).toBe("running");
    applyEvent(state, {
      event: "status-change",
      instance: "gmapping-1",
      package: "gmapping",
      robot: "jackal",
      status: "stopped",
    });
    expect(state.offloads.get("gmapping-1")?.status).toBe("stopped");
    expect(state.offloads.size).toBe(1);
  });

  it("keeps bindings from the offload listing across status events", () => {
    const state = createState();
    setOffloads(state, [
      {
        instance: "gmapping-1",
        package: "gmapping",
        robot: "jackal",
        bindings: { tf: "/tf", scan: "/scan" },
        status: "running",
        stream: null,
        outputs: {},
      },
    ]);
    applyEvent(state, {
      event: "status-change",
      instance: "gmapping-1",
      package: "gmapping",
      robot: "jackal",
      status: "stopped",
    });
    expect(state.offloads.get("gmapping-1")?.bindings).toEqual({
      tf: "/tf",
      scan: "/scan",
    });
  });

  it("routes entropy results into a per-instance series", () => {
    const state = createState();
    applyEvent(state, resultEvent("entropy", 1, 10201.0));
    applyEvent(state, resultEvent("entropy", 2, 10100.5));
    const series = state.entropy.get("gmapping-1");
    expect(series?.map((p) => p.bits)).toEqual([10201.0, 10100.5]);
    expect(series?.map((p) => p.seq)).toEqual([1, 2]);
  });

  it("keeps the newest map snapshot per instance", () => {
    const state = createState();
    const snapshot = {
      format: "smartcloud-map/1",
      width: 2,
      height: 1,
      resolution: 0.1,
      origin: [0, 0] as [number, number],
      cells: "AAA=",
    };
    applyEvent(state, resultEvent("map", 3, snapshot));
    expect(state.maps.get("gmapping-1")).toBe(snapshot);
  });

  it("collects detection reports and caps the buffer", () => {
    const state = createState();
    for (let i = 1; i <= DETECTION_CAP + 5; i++) {
      applyEvent(
        state,
        resultEvent("detections", i, {
          message_id: i,
          reference_id: "",
          results: [["Trash Can", 0.66]],
        }),
      );
    }
    expect(state.detections).toHaveLength(DETECTION_CAP);
    expect(state.detections[0].messageId).toBe(6);
    expect(state.detections.at(-1)?.messageId).toBe(DETECTION_CAP + 5);
  });

  it("ignores malformed result values", () => {
    const state = createState();
    applyEvent(state, resultEvent("entropy", 1, "not a number"));
    applyEvent(state, resultEvent("map", 1, { width: 2 }));
    applyEvent(state, resultEvent("detections", 1, { results: "nope" }));
    expect(state.entropy.size).toBe(0);
    expect(state.maps.size).toBe(0);
    expect(state.detections).toHaveLength(0);
  });

  it("bounds the rolling event buffer", () => {
    const state = createState();
    for (let i = 0; i < EVENT_BUFFER_CAP + 10; i++) {
      applyEvent(state, { event: "connect", robot: `r${i}`, mode: "ros" });
    }
    expect(state.events).toHaveLength(EVENT_BUFFER_CAP);
    expect((state.events[0] as { robot: string }).robot).toBe("r10");
  });

  it("hints a robots refresh on connect and disconnect", () => {
    const state = createState();
    expect(applyEvent(state, { event: "connect", robot: "r1", mode: "ros" })).toEqual([
      "robots",
    ]);
    expect(applyEvent(state, { event: "disconnect", robot: "r1" })).toEqual(["robots"]);
  });

  it("hints a package refresh when the selected robot changes shape", () => {
    const state = createState();
    setSelectedRobot(state, "jackal");
    expect(
      applyEvent(state, {
        event: "topic-advertised",
        robot: "jackal",
        topic: "/scan",
        type: "sensor_msgs/LaserScan",
      }),
    ).toEqual(["robots", "packages"]);
    expect(applyEvent(state, { event: "disconnect", robot: "jackal" })).toEqual([
      "robots",
      "packages",
    ]);
  });

  it("drops stale package responses after a reselect", () => {
    const state = createState();
    setSelectedRobot(state, "a");
    setSelectedRobot(state, "b");
    setPackages(state, "a", '{"robot":"a","packages":["x"],"suggested_bindings":{}}');
    expect(state.packagesRaw).toBeNull();
    setPackages(state, "b", '{"robot":"b","packages":[],"suggested_bindings":{}}');
    expect(state.packages?.robot).toBe("b");
  });

  it("clears the selection when the robot leaves the listing", () => {
    const state = createState();
    setRobots(state, [robot("a"), robot("b")]);
    setSelectedRobot(state, "a");
    setPackages(state, "a", '{"robot":"a","packages":[],"suggested_bindings":{}}');
    setRobots(state, [robot("b")]);
    expect(state.selectedRobot).toBeNull();
    expect(state.packagesRaw).toBeNull();
  });
});

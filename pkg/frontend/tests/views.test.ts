import { describe, expect, it } from "vitest";

import { applyEvent, createState, setPackages, setRobots, setSelectedRobot } from "../src/state.js";
import type { RobotInfo } from "../src/types.js";
import {
  NO_PACKAGES_TEXT,
  NO_TOPICS_TEXT,
  detectionTableView,
  entropyPolyline,
  metricsView,
  offloadTableView,
  packageListView,
  unboundRoles,
} from "../src/views.js";

function robot(id: string, topics: Record<string, string>): RobotInfo {
  return { robot: id, display_name: id, mode: "ros", connected_at: 0, topics };
}

describe("packageListView", () => {
  it("lists topics with types and packages in response order", () => {
    const state = createState();
    setRobots(state, [
      robot("jackal", { "/tf": "tf2_msgs/TFMessage", "/scan": "sensor_msgs/LaserScan" }),
    ]);
    setSelectedRobot(state, "jackal");
    setPackages(
      state,
      "jackal",
      JSON.stringify({
        robot: "jackal",
        packages: ["alpha", "beta", "gamma"],
        suggested_bindings: { alpha: { in: "/tf" }, beta: {}, gamma: {} },
      }),
    );
    const view = packageListView(state);
    expect(view.topics).toEqual([
      { name: "/tf", type: "tf2_msgs/TFMessage" },
      { name: "/scan", type: "sensor_msgs/LaserScan" },
    ]);
    expect(view.packages.map((p) => p.id)).toEqual(["alpha", "beta", "gamma"]);
    expect(view.packages[0].suggestedBindings).toEqual({ in: "/tf" });
    expect(view.topicsEmptyText).toBeNull();
    expect(view.packagesEmptyText).toBeNull();
  });

  it("renders explicit empty states instead of blank panels", () => {
    const state = createState();
    setRobots(state, [robot("bare", {})]);
    setSelectedRobot(state, "bare");
    setPackages(
      state,
      "bare",
      '{"robot":"bare","packages":[],"suggested_bindings":{}}',
    );
    const view = packageListView(state);
    expect(view.topicsEmptyText).toBe(NO_TOPICS_TEXT);
    expect(view.packagesEmptyText).toBe(NO_PACKAGES_TEXT);
  });
});

describe("unboundRoles", () => {
  it("accepts a fully bound form", () => {
    expect(unboundRoles({ tf: "/tf", scan: "/scan" }, { tf: "/tf", scan: "/scan" })).toEqual(
      [],
    );
  });

  it("reports cleared and whitespace-only roles", () => {
    expect(unboundRoles({ tf: "/tf", scan: "/scan" }, { tf: "", scan: "  " })).toEqual([
      "scan",
      "tf",
    ]);
  });

  it("treats packages without roles as launchable", () => {
    expect(unboundRoles({}, {})).toEqual([]);
  });
});

describe("offloadTableView", () => {
  it("sorts rows by instance id", () => {
    const state = createState();
    for (const instance of ["b-2", "a-1", "c-3"]) {
      applyEvent(state, {
        event: "status-change",
        instance,
        package: "p",
        robot: "r",
        status: "running",
      });
    }
    expect(offloadTableView(state).map((r) => r.instance)).toEqual(["a-1", "b-2", "c-3"]);
  });
});

describe("detectionTableView", () => {
  it("renders the newest report first with two-decimal probabilities", () => {
    const state = createState();
    applyEvent(state, {
      event: "result",
      instance: "object_detection-1",
      robot: "roomba",
      channel: "detections",
      seq: 1,
      value: {
        message_id: 1,
        reference_id: "",
        results: [
          ["Trash Can", 0.66],
          ["Swivel Chair", 0.72],
          ["File Cabinet", 0.44],
        ],
      },
    });
    const rows = detectionTableView(state);
    expect(rows.map((r) => [r.label, r.probability])).toEqual([
      ["Trash Can", "0.66"],
      ["Swivel Chair", "0.72"],
      ["File Cabinet", "0.44"],
    ]);
    expect(rows.every((r) => r.messageId === 1)).toBe(true);
  });
});

describe("entropyPolyline", () => {
  it("spans the box and inverts y", () => {
    const points = [
      { seq: 1, bits: 100 },
      { seq: 2, bits: 75 },
      { seq: 3, bits: 50 },
    ];
    // max bits at the top (y=0), min at the bottom (y=height)
    expect(entropyPolyline(points, 100, 50)).toBe("0.0,0.0 50.0,25.0 100.0,50.0");
  });

  it("handles empty and constant series", () => {
    expect(entropyPolyline([], 100, 50)).toBe("");
    expect(entropyPolyline([{ seq: 1, bits: 5 }], 100, 50)).toBe("0.0,50.0");
    expect(
      entropyPolyline(
        [
          { seq: 1, bits: 5 },
          { seq: 2, bits: 5 },
        ],
        100,
        50,
      ),
    ).toBe("0.0,50.0 100.0,50.0");
  });
});

describe("metricsView", () => {
  it("formats summaries and sorts counters", () => {
    const summary = {
      count: 10,
      mean: 32.911,
      min: 32.0,
      max: 34.0,
      p50: 32.9,
      p95: 33.06,
      p99: 33.5,
    };
    const view = metricsView({
      counters: { frames_in: 5, events_out: 2 },
      latency: { rtt_ms: summary, processing_ms: { ...summary, mean: 0.035, p95: 0.05 } },
    });
    expect(view.rtt).toBe("mean 32.91 ms, p95 33.06 ms (n=10)");
    expect(view.processing).toBe("mean 0.04 ms, p95 0.05 ms (n=10)");
    expect(view.counters).toEqual([
      ["events_out", 2],
      ["frames_in", 5],
    ]);
  });

  it("reports missing latency data explicitly", () => {
    const view = metricsView({ counters: {}, latency: null });
    expect(view.rtt).toBe("no samples yet");
  });
});

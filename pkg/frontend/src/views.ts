/** Pure view models: everything the DOM layer renders is computed here. */

import type { ConsoleState, DetectionRow, EntropyPoint, OffloadRow } from "./state.js";
import type { MetricsResponse, SummaryWire } from "./types.js";

export interface TopicRow {
  name: string;
  type: string;
}

export interface PackageRow {
  id: string;
  suggestedBindings: Record<string, string>;
}

export interface PackageListView {
  robot: string | null;
  topics: TopicRow[];
  packages: PackageRow[];
  /** Explicit empty states; the panel never renders blank. */
  topicsEmptyText: string | null;
  packagesEmptyText: string | null;
}

export const NO_PACKAGES_TEXT = "no packages available";
export const NO_TOPICS_TEXT = "no topics advertised";
export const NO_ROBOT_TEXT = "select a robot";

export function packageListView(state: ConsoleState): PackageListView {
  if (state.selectedRobot === null) {
    return {
      robot: null,
      topics: [],
      packages: [],
      topicsEmptyText: NO_ROBOT_TEXT,
      packagesEmptyText: NO_ROBOT_TEXT,
    };
  }
  const robot = state.robots.find((r) => r.robot === state.selectedRobot);
  const topics: TopicRow[] = robot
    ? Object.entries(robot.topics).map(([name, type]) => ({ name, type }))
    : [];
  // packages come from the parsed copy of packagesRaw, in response order
  const packages: PackageRow[] = (state.packages?.packages ?? []).map((id) => ({
    id,
    suggestedBindings: state.packages?.suggested_bindings[id] ?? {},
  }));
  return {
    robot: state.selectedRobot,
    topics,
    packages,
    topicsEmptyText: topics.length === 0 ? NO_TOPICS_TEXT : null,
    packagesEmptyText: packages.length === 0 ? NO_PACKAGES_TEXT : null,
  };
}

/** Roles that block a launch: unbound or bound to an empty topic name. */
export function unboundRoles(
  suggested: Record<string, string>,
  bindings: Record<string, string>,
): string[] {
  return Object.keys(suggested)
    .filter((role) => !(bindings[role] ?? "").trim())
    .sort();
}

export function offloadTableView(state: ConsoleState): OffloadRow[] {
  return [...state.offloads.values()].sort((a, b) =>
    a.instance.localeCompare(b.instance),
  );
}

export interface DetectionCell {
  instance: string;
  messageId: number;
  label: string;
  probability: string;
}

/** Newest report first, one row per (label, probability) pair. */
export function detectionTableView(
  state: ConsoleState,
  limit: number = 30,
): DetectionCell[] {
  const rows: DetectionCell[] = [];
  for (const report of [...state.detections].reverse()) {
    for (const [label, probability] of report.results) {
      rows.push({
        instance: report.instance,
        messageId: report.messageId,
        label,
        probability: probability.toFixed(2),
      });
      if (rows.length >= limit) return rows;
    }
  }
  return rows;
}

export function latestDetection(state: ConsoleState): DetectionRow | null {
  return state.detections.length > 0
    ? state.detections[state.detections.length - 1]
    : null;
}

/** SVG polyline points for an entropy series, y inverted (up = more bits). */
export function entropyPolyline(
  points: EntropyPoint[],
  width: number,
  height: number,
): string {
  if (points.length === 0) return "";
  const bits = points.map((p) => p.bits);
  const min = Math.min(...bits);
  const max = Math.max(...bits);
  const span = max - min || 1;
  const dx = points.length > 1 ? width / (points.length - 1) : 0;
  return points
    .map((p, i) => {
      const x = i * dx;
      const y = height - ((p.bits - min) / span) * height;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
}

function summaryText(summary: SummaryWire): string {
  return `mean ${summary.mean.toFixed(2)} ms, p95 ${summary.p95.toFixed(2)} ms (n=${summary.count})`;
}

export interface MetricsView {
  rtt: string;
  processing: string;
  counters: Array<[string, number]>;
}

export function metricsView(metrics: MetricsResponse): MetricsView {
  return {
    rtt: metrics.latency ? summaryText(metrics.latency.rtt_ms) : "no samples yet",
    processing: metrics.latency
      ? summaryText(metrics.latency.processing_ms)
      : "no samples yet",
    counters: Object.entries(metrics.counters).sort(([a], [b]) => a.localeCompare(b)),
  };
}

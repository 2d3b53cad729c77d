/** Console state and the event reducer.
 *
 * The state holds exactly what the panels render: the robot list, the
 * selected robot's package response (raw, straight off the wire), the
 * offload table, and rolling live-result buffers keyed by instance.
 */

import type {
  GatewayEvent,
  InstanceSnapshot,
  MapSnapshot,
  PackagesResponse,
  RobotInfo,
} from "./types.js";

export const EVENT_BUFFER_CAP = 200;
export const ENTROPY_CAP = 600;
export const DETECTION_CAP = 50;

export interface OffloadRow {
  instance: string;
  package: string;
  robot: string;
  status: string;
  bindings: Record<string, string>;
}

export interface EntropyPoint {
  seq: number;
  bits: number;
}

export interface DetectionRow {
  instance: string;
  messageId: number;
  referenceId: string;
  results: Array<[string, number]>;
}

export interface ConsoleState {
  robots: RobotInfo[];
  selectedRobot: string | null;
  /** Byte-exact /api/robots/<id>/packages body for the selected robot. */
  packagesRaw: string | null;
  packages: PackagesResponse | null;
  offloads: Map<string, OffloadRow>;
  events: GatewayEvent[];
  entropy: Map<string, EntropyPoint[]>;
  maps: Map<string, MapSnapshot>;
  detections: DetectionRow[];
  /** Banner text; null renders no banner. */
  lastError: string | null;
}

export function createState(): ConsoleState {
  return {
    robots: [],
    selectedRobot: null,
    packagesRaw: null,
    packages: null,
    offloads: new Map(),
    events: [],
    entropy: new Map(),
    maps: new Map(),
    detections: [],
    lastError: null,
  };
}

export function setRobots(state: ConsoleState, robots: RobotInfo[]): void {
  state.robots = robots;
  if (
    state.selectedRobot !== null &&
    !robots.some((r) => r.robot === state.selectedRobot)
  ) {
    state.selectedRobot = null;
    state.packagesRaw = null;
    state.packages = null;
  }
}

export function setSelectedRobot(state: ConsoleState, robotId: string | null): void {
  state.selectedRobot = robotId;
  state.packagesRaw = null;
  state.packages = null;
}

export function setPackages(state: ConsoleState, robotId: string, raw: string): void {
  if (state.selectedRobot !== robotId) return; // stale response for a past selection
  state.packagesRaw = raw;
  state.packages = JSON.parse(raw) as PackagesResponse;
}

export function setOffloads(state: ConsoleState, instances: InstanceSnapshot[]): void {
  state.offloads = new Map(
    instances.map((inst) => [
      inst.instance,
      {
        instance: inst.instance,
        package: inst.package,
        robot: inst.robot,
        status: inst.status,
        bindings: inst.bindings,
      },
    ]),
  );
}

export function setError(state: ConsoleState, message: string | null): void {
  state.lastError = message;
}

function isMapSnapshot(value: unknown): value is MapSnapshot {
  return (
    typeof value === "object" &&
    value !== null &&
    typeof (value as MapSnapshot).cells === "string" &&
    typeof (value as MapSnapshot).width === "number"
  );
}

function pushCapped<T>(items: T[], item: T, cap: number): void {
  items.push(item);
  if (items.length > cap) items.splice(0, items.length - cap);
}

/** What the caller should re-fetch after an event. */
export type RefreshHint = "robots" | "packages";

export function applyEvent(state: ConsoleState, ev: GatewayEvent): RefreshHint[] {
  pushCapped(state.events, ev, EVENT_BUFFER_CAP);
  switch (ev.event) {
    case "connect":
      return ["robots"];
    case "disconnect":
      return state.selectedRobot === ev.robot ? ["robots", "packages"] : ["robots"];
    case "topic-advertised":
      // matching depends on topics, so the package list may have changed
      return state.selectedRobot === ev.robot ? ["robots", "packages"] : ["robots"];
    case "status-change": {
      const existing = state.offloads.get(ev.instance);
      state.offloads.set(ev.instance, {
        instance: ev.instance,
        package: ev.package,
        robot: ev.robot,
        status: ev.status,
        bindings: existing ? existing.bindings : {},
      });
      return [];
    }
    case "result": {
      if (ev.channel === "entropy" && typeof ev.value === "number") {
        const series = state.entropy.get(ev.instance) ?? [];
        pushCapped(series, { seq: ev.seq, bits: ev.value }, ENTROPY_CAP);
        state.entropy.set(ev.instance, series);
      } else if (ev.channel === "map" && isMapSnapshot(ev.value)) {
        state.maps.set(ev.instance, ev.value);
      } else if (ev.channel === "detections") {
        const value = ev.value as {
          message_id?: number;
          reference_id?: string;
          results?: Array<[string, number]>;
        };
        if (typeof value?.message_id === "number" && Array.isArray(value.results)) {
          pushCapped(
            state.detections,
            {
              instance: ev.instance,
              messageId: value.message_id,
              referenceId: value.reference_id ?? "",
              results: value.results,
            },
            DETECTION_CAP,
          );
        }
      }
      return [];
    }
  }
}

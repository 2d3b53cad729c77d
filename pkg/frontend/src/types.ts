/** Wire shapes of the gateway control API. */

export interface RobotInfo {
  robot: string;
  display_name: string;
  mode: "ros" | "raw";
  connected_at: number;
  topics: Record<string, string>;
}

export interface RobotsResponse {
  robots: RobotInfo[];
}

export interface PackagesResponse {
  robot: string;
  packages: string[];
  suggested_bindings: Record<string, Record<string, string>>;
}

export interface InstanceSnapshot {
  instance: string;
  package: string;
  robot: string;
  bindings: Record<string, string>;
  status: string;
  stream: string | null;
  outputs: Record<string, { seq: number; value: unknown }>;
}

export interface OffloadsResponse {
  instances: InstanceSnapshot[];
}

export interface StartOffloadRequest {
  robot: string;
  package: string;
  bindings?: Record<string, string>;
}

export interface SummaryWire {
  count: number;
  mean: number;
  min: number;
  max: number;
  p50: number;
  p95: number;
  p99: number;
}

export interface MetricsResponse {
  counters: Record<string, number>;
  latency: { rtt_ms: SummaryWire; processing_ms: SummaryWire } | null;
}

export interface MapSnapshot {
  format: string;
  width: number;
  height: number;
  resolution: number;
  origin: [number, number];
  cells: string;
}

export interface DetectionReportWire {
  message_id: number;
  reference_id: string;
  results: Array<[string, number]>;
}

/** Events fanned out on /api/events. */

export interface ConnectEvent {
  event: "connect";
  robot: string;
  mode: "ros" | "raw";
}

export interface DisconnectEvent {
  event: "disconnect";
  robot: string;
}

export interface TopicAdvertisedEvent {
  event: "topic-advertised";
  robot: string;
  topic: string;
  type: string;
}

export interface StatusChangeEvent {
  event: "status-change";
  instance: string;
  package: string;
  robot: string;
  status: string;
}

export interface ResultEvent {
  event: "result";
  instance: string;
  robot: string;
  channel: string;
  seq: number;
  value: unknown;
}

export type GatewayEvent =
  | ConnectEvent
  | DisconnectEvent
  | TopicAdvertisedEvent
  | StatusChangeEvent
  | ResultEvent;

export function isGatewayEvent(value: unknown): value is GatewayEvent {
  if (typeof value !== "object" || value === null) return false;
  const kind = (value as { event?: unknown }).event;
  return (
    kind === "connect" ||
    kind === "disconnect" ||
    kind === "topic-advertised" ||
    kind === "status-change" ||
    kind === "result"
  );
}

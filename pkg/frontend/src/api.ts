/** Thin fetch wrapper over the gateway control API.
 *
 * Each method issues exactly one request. The packages call keeps the raw
 * response body so callers can render the server's matching verbatim.
 */

import type {
  InstanceSnapshot,
  MetricsResponse,
  OffloadsResponse,
  PackagesResponse,
  RobotsResponse,
  StartOffloadRequest,
} from "./types.js";

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorFrom(response: Response): Promise<ApiError> {
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as { error?: unknown };
    if (typeof body.error === "string") message = body.error;
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(response.status, message);
}

export interface PackagesResult {
  /** Exact response body; the package list is rendered from this, unmodified. */
  raw: string;
  parsed: PackagesResponse;
}

export class ApiClient {
  constructor(
    readonly base: string,
    private readonly fetchFn: FetchFn = (url, init) => fetch(url, init),
  ) {}

  private async get(path: string): Promise<Response> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) throw await errorFrom(response);
    return response;
  }

  async listRobots(): Promise<RobotsResponse> {
    return (await this.get("/api/robots")).json() as Promise<RobotsResponse>;
  }

  async robotPackages(robotId: string): Promise<PackagesResult> {
    const response = await this.get(
      `/api/robots/${encodeURIComponent(robotId)}/packages`,
    );
    const raw = await response.text();
    return { raw, parsed: JSON.parse(raw) as PackagesResponse };
  }

  async listOffloads(): Promise<OffloadsResponse> {
    return (await this.get("/api/offloads")).json() as Promise<OffloadsResponse>;
  }

  async metrics(): Promise<MetricsResponse> {
    return (await this.get("/api/metrics")).json() as Promise<MetricsResponse>;
  }

  async startOffload(
    request: StartOffloadRequest,
  ): Promise<{ instance: string; status: string }> {
    const response = await this.fetchFn(this.base + "/api/offloads", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!response.ok) throw await errorFrom(response);
    return response.json() as Promise<{ instance: string; status: string }>;
  }

  async stopOffload(instanceId: string): Promise<InstanceSnapshot> {
    const response = await this.fetchFn(
      this.base + `/api/offloads/${encodeURIComponent(instanceId)}`,
      { method: "DELETE" },
    );
    if (!response.ok) throw await errorFrom(response);
    return response.json() as Promise<InstanceSnapshot>;
  }
}

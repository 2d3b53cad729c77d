import { describe, expect, it } from "vitest";

import {
  launchOffload,
  refreshRobots,
  selectRobot,
  stopOffload,
} from "../src/actions.js";
import { ApiClient, type FetchFn } from "../src/api.js";
import { createState } from "../src/state.js";

function apiWithLog(
  routes: Record<string, string | [number, string]>,
): { api: ApiClient; calls: string[] } {
  const calls: string[] = [];
  const fetchFn: FetchFn = async (url, init) => {
    const key = `${init?.method ?? "GET"} ${url}`;
    calls.push(key);
    const route = routes[key];
    if (route === undefined) return new Response('{"error":"no route"}', { status: 404 });
    const [status, body] = typeof route === "string" ? [200, route] : route;
    return new Response(body, { status });
  };
  return { api: new ApiClient("", fetchFn), calls };
}

const PACKAGES_BODY =
  '{"robot": "jackal",   "packages": ["gmapping"], "suggested_bindings": {"gmapping": {"scan": "/scan", "tf": "/tf"}}}';

describe("user action invariants", () => {
  it("selectRobot issues exactly one GET and keeps the body verbatim", async () => {
    const { api, calls } = apiWithLog({
      "GET /api/robots/jackal/packages": PACKAGES_BODY,
    });
    const state = createState();
    await selectRobot(api, state, "jackal");
    expect(calls).toEqual(["GET /api/robots/jackal/packages"]);
    expect(state.packagesRaw).toBe(PACKAGES_BODY); // thin client: no re-encoding
    expect(state.packages?.packages).toEqual(["gmapping"]);
    expect(state.lastError).toBeNull();
  });

  it("launchOffload with a complete form issues exactly one POST", async () => {
    const { api, calls } = apiWithLog({
      "POST /api/offloads": '{"instance":"gmapping-1","status":"running"}',
    });
    const state = createState();
    const outcome = await launchOffload(
      api,
      state,
      "jackal",
      "gmapping",
      { tf: "/tf", scan: "/scan" },
      { tf: "/tf", scan: "/scan" },
    );
    expect(outcome).toEqual({ instance: "gmapping-1", formError: null });
    expect(calls).toEqual(["POST /api/offloads"]);
    expect(state.offloads.get("gmapping-1")?.status).toBe("running");
  });

  it("launchOffload with an unbound role sends nothing", async () => {
    const { api, calls } = apiWithLog({});
    const state = createState();
    const outcome = await launchOffload(
      api,
      state,
      "jackal",
      "gmapping",
      { tf: "/tf", scan: "/scan" },
      { tf: "/tf", scan: "" },
    );
    expect(outcome.instance).toBeNull();
    expect(outcome.formError).toBe("unbound roles: scan");
    expect(calls).toEqual([]);
    expect(state.offloads.size).toBe(0);
  });

  it("renders API rejections inline without touching the table", async () => {
    const { api, calls } = apiWithLog({
      "POST /api/offloads": [400, '{"error":"robot jackal has not advertised /odom"}'],
    });
    const state = createState();
    const outcome = await launchOffload(
      api,
      state,
      "jackal",
      "gmapping",
      { tf: "/tf" },
      { tf: "/odom" },
    );
    expect(outcome.instance).toBeNull();
    expect(outcome.formError).toBe("robot jackal has not advertised /odom (HTTP 400)");
    expect(calls).toEqual(["POST /api/offloads"]);
    expect(state.offloads.size).toBe(0);
    expect(state.lastError).toBeNull(); // form error, not a banner
  });

  it("stopOffload issues exactly one DELETE and updates the row", async () => {
    const { api, calls } = apiWithLog({
      "DELETE /api/offloads/gmapping-1":
        '{"instance":"gmapping-1","package":"gmapping","robot":"jackal",' +
        '"bindings":{},"status":"stopped","stream":null,"outputs":{}}',
    });
    const state = createState();
    state.offloads.set("gmapping-1", {
      instance: "gmapping-1",
      package: "gmapping",
      robot: "jackal",
      status: "running",
      bindings: {},
    });
    await stopOffload(api, state, "gmapping-1");
    expect(calls).toEqual(["DELETE /api/offloads/gmapping-1"]);
    expect(state.offloads.get("gmapping-1")?.status).toBe("stopped");
  });

  it("surfaces refresh failures as a dismissible banner", async () => {
    const { api } = apiWithLog({});
    const state = createState();
    await refreshRobots(api, state);
    expect(state.lastError).toBe("robot list: no route (HTTP 404)");
    expect(state.robots).toEqual([]); // panel renders its empty state, not a blank
  });
});

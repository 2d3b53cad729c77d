/** User actions. Each performs at most one control API call; validation
 * failures short-circuit before any request is made.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  ConsoleState,
  setError,
  setOffloads,
  setPackages,
  setRobots,
  setSelectedRobot,
} from "./state.js";
import { unboundRoles } from "./views.js";

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.message} (HTTP ${error.status})`;
  return error instanceof Error ? error.message : String(error);
}

/** Bootstrap and event-driven refreshes; not user actions. */
export async function refreshRobots(api: ApiClient, state: ConsoleState): Promise<void> {
  try {
    setRobots(state, (await api.listRobots()).robots);
  } catch (error) {
    setError(state, `robot list: ${describe(error)}`);
  }
}

export async function refreshOffloads(api: ApiClient, state: ConsoleState): Promise<void> {
  try {
    setOffloads(state, (await api.listOffloads()).instances);
  } catch (error) {
    setError(state, `offload list: ${describe(error)}`);
  }
}

export async function refreshPackages(api: ApiClient, state: ConsoleState): Promise<void> {
  const robotId = state.selectedRobot;
  if (robotId === null) return;
  try {
    const result = await api.robotPackages(robotId);
    setPackages(state, robotId, result.raw);
  } catch (error) {
    setError(state, `packages for ${robotId}: ${describe(error)}`);
  }
}

/** User action: pick a robot. One GET for its packages. */
export async function selectRobot(
  api: ApiClient,
  state: ConsoleState,
  robotId: string,
): Promise<void> {
  setSelectedRobot(state, robotId);
  await refreshPackages(api, state);
}

export interface LaunchOutcome {
  instance: string | null;
  /** Inline form error: unbound roles or the API's rejection text. */
  formError: string | null;
}

/** User action: launch a package. Validates first; invalid forms send nothing. */
export async function launchOffload(
  api: ApiClient,
  state: ConsoleState,
  robotId: string,
  packageId: string,
  suggested: Record<string, string>,
  bindings: Record<string, string>,
): Promise<LaunchOutcome> {
  const missing = unboundRoles(suggested, bindings);
  if (missing.length > 0) {
    return { instance: null, formError: `unbound roles: ${missing.join(", ")}` };
  }
  try {
    const started = await api.startOffload({
      robot: robotId,
      package: packageId,
      bindings,
    });
    state.offloads.set(started.instance, {
      instance: started.instance,
      package: packageId,
      robot: robotId,
      status: started.status,
      bindings,
    });
    return { instance: started.instance, formError: null };
  } catch (error) {
    return { instance: null, formError: describe(error) };
  }
}

/** User action: stop an instance. One DELETE. */
export async function stopOffload(
  api: ApiClient,
  state: ConsoleState,
  instanceId: string,
): Promise<void> {
  try {
    const snapshot = await api.stopOffload(instanceId);
    const row = state.offloads.get(instanceId);
    if (row) row.status = snapshot.status;
  } catch (error) {
    setError(state, `stop ${instanceId}: ${describe(error)}`);
  }
}

/** Browser bootstrap: wires the state, the event stream, and the panels.
 *
 * Served by the gateway under /ui, so every API path is same-origin.
 */

import {
  launchOffload,
  refreshOffloads,
  refreshPackages,
  refreshRobots,
  selectRobot,
  stopOffload,
} from "./actions.js";
import { ApiClient } from "./api.js";
import { EventStream } from "./events.js";
import { decodeMapGray } from "./mapimage.js";
import { applyEvent, createState, setError } from "./state.js";
import {
  detectionTableView,
  entropyPolyline,
  metricsView,
  offloadTableView,
  packageListView,
} from "./views.js";

const METRICS_POLL_MS = 2000;
const STALE_POLL_MS = 1000;

const state = createState();
const api = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

function cellRow(table: HTMLElement, cells: Array<string | HTMLElement>): void {
  const tr = document.createElement("tr");
  for (const cell of cells) {
    const td = document.createElement("td");
    if (typeof cell === "string") td.textContent = cell;
    else td.appendChild(cell);
    tr.appendChild(td);
  }
  table.appendChild(tr);
}

function emptyRow(table: HTMLElement, text: string, span: number): void {
  const tr = document.createElement("tr");
  const td = document.createElement("td");
  td.colSpan = span;
  td.className = "empty";
  td.textContent = text;
  tr.appendChild(td);
  table.appendChild(tr);
}

function renderBanner(): void {
  const banner = el<HTMLDivElement>("banner");
  if (state.lastError === null) {
    banner.hidden = true;
    return;
  }
  banner.hidden = false;
  el<HTMLSpanElement>("banner-text").textContent = state.lastError;
}

function renderRobots(): void {
  const list = el<HTMLUListElement>("robot-list");
  clear(list);
  if (state.robots.length === 0) {
    const li = document.createElement("li");
    li.className = "empty";
    li.textContent = "no robots connected";
    list.appendChild(li);
    return;
  }
  for (const robot of state.robots) {
    const li = document.createElement("li");
    const button = document.createElement("button");
    button.textContent = `${robot.display_name} (${robot.mode})`;
    button.className = robot.robot === state.selectedRobot ? "selected" : "";
    button.onclick = () => {
      void selectRobot(api, state, robot.robot).then(renderAll);
    };
    li.appendChild(button);
    list.appendChild(li);
  }
}

function bindingInputs(
  form: HTMLElement,
  suggested: Record<string, string>,
): Record<string, HTMLInputElement> {
  const inputs: Record<string, HTMLInputElement> = {};
  for (const [role, topic] of Object.entries(suggested)) {
    const label = document.createElement("label");
    label.textContent = `${role}: `;
    const input = document.createElement("input");
    input.value = topic;
    input.size = 14;
    label.appendChild(input);
    form.appendChild(label);
    inputs[role] = input;
  }
  return inputs;
}

function renderPackages(): void {
  const view = packageListView(state);
  el<HTMLSpanElement>("selected-robot").textContent = view.robot ?? "none";

  const topics = el<HTMLTableSectionElement>("topic-rows");
  clear(topics);
  if (view.topicsEmptyText !== null) emptyRow(topics, view.topicsEmptyText, 2);
  for (const topic of view.topics) cellRow(topics, [topic.name, topic.type]);

  const packages = el<HTMLDivElement>("package-rows");
  clear(packages);
  if (view.packagesEmptyText !== null) {
    const div = document.createElement("div");
    div.className = "empty";
    div.textContent = view.packagesEmptyText;
    packages.appendChild(div);
    return;
  }
  for (const pkg of view.packages) {
    const row = document.createElement("div");
    row.className = "package-row";
    const name = document.createElement("strong");
    name.textContent = pkg.id;
    row.appendChild(name);
    const form = document.createElement("span");
    const inputs = bindingInputs(form, pkg.suggestedBindings);
    row.appendChild(form);
    const error = document.createElement("span");
    error.className = "form-error";
    const launch = document.createElement("button");
    launch.textContent = "launch";
    launch.onclick = () => {
      const bindings: Record<string, string> = {};
      for (const [role, input] of Object.entries(inputs)) bindings[role] = input.value;
      void launchOffload(
        api,
        state,
        view.robot as string,
        pkg.id,
        pkg.suggestedBindings,
        bindings,
      ).then((outcome) => {
        error.textContent = outcome.formError ?? "";
        renderAll();
      });
    };
    row.appendChild(launch);
    row.appendChild(error);
    packages.appendChild(row);
  }
}

function renderOffloads(): void {
  const rows = el<HTMLTableSectionElement>("offload-rows");
  clear(rows);
  const table = offloadTableView(state);
  if (table.length === 0) {
    emptyRow(rows, "no offloads", 5);
    return;
  }
  for (const row of table) {
    const stop = document.createElement("button");
    stop.textContent = "stop";
    stop.disabled = row.status !== "running" && row.status !== "starting";
    stop.onclick = () => {
      void stopOffload(api, state, row.instance).then(renderAll);
    };
    cellRow(rows, [row.instance, row.package, row.robot, row.status, stop]);
  }
}

function renderLiveResults(): void {
  // newest map snapshot across instances; stop freezes it on the final one
  const canvas = el<HTMLCanvasElement>("map-canvas");
  const snapshots = [...state.maps.values()];
  if (snapshots.length > 0) {
    const snapshot = snapshots[snapshots.length - 1];
    const image = decodeMapGray(snapshot);
    canvas.width = image.width;
    canvas.height = image.height;
    const ctx = canvas.getContext("2d");
    if (ctx !== null) {
      ctx.putImageData(new ImageData(image.pixels, image.width, image.height), 0, 0);
    }
  }

  const entropySvg = el<HTMLElement>("entropy-line");
  const series = [...state.entropy.values()];
  const points = series.length > 0 ? series[series.length - 1] : [];
  entropySvg.setAttribute("points", entropyPolyline(points, 280, 60));
  el<HTMLSpanElement>("entropy-latest").textContent =
    points.length > 0 ? `${points[points.length - 1].bits.toFixed(1)} bits` : "no data";

  const detections = el<HTMLTableSectionElement>("detection-rows");
  clear(detections);
  const cells = detectionTableView(state);
  if (cells.length === 0) emptyRow(detections, "no detections", 3);
  for (const cell of cells) {
    cellRow(detections, [String(cell.messageId), cell.label, cell.probability]);
  }
}

function renderAll(): void {
  renderBanner();
  renderRobots();
  renderPackages();
  renderOffloads();
  renderLiveResults();
}

async function pollMetrics(): Promise<void> {
  try {
    const view = metricsView(await api.metrics());
    el<HTMLSpanElement>("metric-rtt").textContent = view.rtt;
    el<HTMLSpanElement>("metric-processing").textContent = view.processing;
    el<HTMLSpanElement>("metric-counters").textContent = view.counters
      .map(([name, value]) => `${name}=${value}`)
      .join("  ");
  } catch {
    el<HTMLSpanElement>("metric-rtt").textContent = "unreachable";
  }
}

function wsUrl(): string {
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${location.host}/api/events`;
}

function start(): void {
  el<HTMLButtonElement>("banner-dismiss").onclick = () => {
    setError(state, null);
    renderBanner();
  };

  const stream = new EventStream({
    url: wsUrl(),
    onEvent: (ev) => {
      const hints = applyEvent(state, ev);
      const tasks: Array<Promise<void>> = [];
      if (hints.includes("robots")) tasks.push(refreshRobots(api, state));
      if (hints.includes("packages")) tasks.push(refreshPackages(api, state));
      if (tasks.length === 0) renderAll();
      else void Promise.all(tasks).then(renderAll);
    },
    onStatus: (status) => {
      el<HTMLSpanElement>("stream-status").textContent = status;
    },
  });
  stream.connect();

  setInterval(() => {
    el<HTMLSpanElement>("stale-indicator").hidden = !stream.isStale();
  }, STALE_POLL_MS);
  setInterval(() => void pollMetrics(), METRICS_POLL_MS);

  void Promise.all([refreshRobots(api, state), refreshOffloads(api, state)]).then(() => {
    renderAll();
    void pollMetrics();
  });
}

start();

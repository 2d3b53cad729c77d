/** Event stream client: one websocket, reconnect with capped exponential
 * backoff, and a staleness clock for the "no events lately" indicator.
 */

import { isGatewayEvent, type GatewayEvent } from "./types.js";

export interface WebSocketLike {
  onopen: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
}

export type StreamStatus = "connecting" | "open" | "reconnecting" | "closed";

export interface EventStreamOptions {
  url: string;
  onEvent: (ev: GatewayEvent) => void;
  onStatus?: (status: StreamStatus) => void;
  makeSocket?: (url: string) => WebSocketLike;
  now?: () => number;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
  baseDelayMs?: number;
  maxDelayMs?: number;
  staleAfterMs?: number;
}

export const BASE_DELAY_MS = 500;
export const MAX_DELAY_MS = 8000;
export const STALE_AFTER_MS = 5000;

export function backoffDelayMs(
  attempt: number,
  baseMs: number = BASE_DELAY_MS,
  maxMs: number = MAX_DELAY_MS,
): number {
  return Math.min(baseMs * 2 ** attempt, maxMs);
}

export class EventStream {
  status: StreamStatus = "closed";
  /** Set on open and on every event; drives the staleness indicator. */
  lastActivityAt: number | null = null;

  private socket: WebSocketLike | null = null;
  private attempt = 0;
  private timer: unknown = null;
  private stopped = false;

  private readonly makeSocket: (url: string) => WebSocketLike;
  private readonly now: () => number;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;
  private readonly clearTimer: (handle: unknown) => void;
  private readonly baseDelayMs: number;
  private readonly maxDelayMs: number;
  private readonly staleAfterMs: number;

  constructor(private readonly options: EventStreamOptions) {
    this.makeSocket =
      options.makeSocket ?? ((url) => new WebSocket(url) as unknown as WebSocketLike);
    this.now = options.now ?? (() => Date.now());
    this.setTimer = options.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimer = options.clearTimer ?? ((h) => clearTimeout(h as number));
    this.baseDelayMs = options.baseDelayMs ?? BASE_DELAY_MS;
    this.maxDelayMs = options.maxDelayMs ?? MAX_DELAY_MS;
    this.staleAfterMs = options.staleAfterMs ?? STALE_AFTER_MS;
  }

  connect(): void {
    this.stopped = false;
    this.open();
  }

  close(): void {
    this.stopped = true;
    if (this.timer !== null) {
      this.clearTimer(this.timer);
      this.timer = null;
    }
    if (this.socket !== null) {
      const socket = this.socket;
      this.socket = null;
      socket.onclose = null;
      socket.close();
    }
    this.setStatus("closed");
  }

  /** True when connected but silent past the stale threshold. */
  isStale(): boolean {
    return (
      this.status === "open" &&
      this.lastActivityAt !== null &&
      this.now() - this.lastActivityAt > this.staleAfterMs
    );
  }

  private setStatus(status: StreamStatus): void {
    this.status = status;
    this.options.onStatus?.(status);
  }

  private open(): void {
    this.setStatus(this.attempt === 0 ? "connecting" : "reconnecting");
    const socket = this.makeSocket(this.options.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempt = 0;
      this.lastActivityAt = this.now();
      this.setStatus("open");
    };
    socket.onmessage = (ev) => {
      this.lastActivityAt = this.now();
      let parsed: unknown;
      try {
        parsed = JSON.parse(String(ev.data));
      } catch {
        return; // not ours; ignore
      }
      if (isGatewayEvent(parsed)) this.options.onEvent(parsed);
    };
    socket.onerror = () => {
      // the close handler owns reconnection
    };
    socket.onclose = () => {
      this.socket = null;
      if (this.stopped) return;
      const delay = backoffDelayMs(this.attempt, this.baseDelayMs, this.maxDelayMs);
      this.attempt += 1;
      this.setStatus("reconnecting");
      this.timer = this.setTimer(() => {
        this.timer = null;
        this.open();
      }, delay);
    };
  }
}

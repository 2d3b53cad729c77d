import { describe, expect, it } from "vitest";

import {
  BASE_DELAY_MS,
  EventStream,
  MAX_DELAY_MS,
  backoffDelayMs,
  type WebSocketLike,
} from "../src/events.js";
import type { GatewayEvent } from "../src/types.js";

class FakeSocket implements WebSocketLike {
  onopen: ((ev: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev: unknown) => void) | null = null;
  onerror: ((ev: unknown) => void) | null = null;
  closedByClient = false;

  close(): void {
    this.closedByClient = true;
  }

  serverOpen(): void {
    this.onopen?.({});
  }

  serverSend(data: string): void {
    this.onmessage?.({ data });
  }

  serverClose(): void {
    this.onclose?.({});
  }
}

interface PendingTimer {
  fn: () => void;
  ms: number;
}

class Harness {
  sockets: FakeSocket[] = [];
  timers: PendingTimer[] = [];
  events: GatewayEvent[] = [];
  statuses: string[] = [];
  clock = 0;
  stream: EventStream;

  constructor(staleAfterMs?: number) {
    this.stream = new EventStream({
      url: "ws://gw/api/events",
      onEvent: (ev) => this.events.push(ev),
      onStatus: (status) => this.statuses.push(status),
      makeSocket: () => {
        const socket = new FakeSocket();
        this.sockets.push(socket);
        return socket;
      },
      now: () => this.clock,
      setTimer: (fn, ms) => {
        const timer = { fn, ms };
        this.timers.push(timer);
        return timer;
      },
      clearTimer: (handle) => {
        this.timers = this.timers.filter((t) => t !== handle);
      },
      staleAfterMs,
    });
  }

  fireTimer(): PendingTimer {
    const timer = this.timers.shift();
    if (!timer) throw new Error("no pending timer");
    timer.fn();
    return timer;
  }

  last(): FakeSocket {
    return this.sockets[this.sockets.length - 1];
  }
}

describe("backoffDelayMs", () => {
  it("doubles from the base and saturates at the cap", () => {
    const delays = [0, 1, 2, 3, 4, 5, 6].map((n) => backoffDelayMs(n));
    expect(delays).toEqual([500, 1000, 2000, 4000, 8000, 8000, 8000]);
    expect(BASE_DELAY_MS).toBe(500);
    expect(MAX_DELAY_MS).toBe(8000);
  });
});

describe("EventStream", () => {
  it("delivers parsed gateway events", () => {
    const h = new Harness();
    h.stream.connect();
    h.last().serverOpen();
    h.last().serverSend('{"event":"connect","robot":"r1","mode":"ros"}');
    h.last().serverSend("not json");
    h.last().serverSend('{"op":"publish"}');
    expect(h.events).toEqual([{ event: "connect", robot: "r1", mode: "ros" }]);
    expect(h.stream.status).toBe("open");
  });

  it("reconnects with exponential backoff and resets after success", () => {
    const h = new Harness();
    h.stream.connect();
    h.last().serverOpen();

    const observed: number[] = [];
    for (let i = 0; i < 6; i++) {
      h.last().serverClose();
      observed.push(h.fireTimer().ms);
    }
    expect(observed).toEqual([500, 1000, 2000, 4000, 8000, 8000]);
    expect(h.sockets).toHaveLength(7);

    h.last().serverOpen();
    expect(h.stream.status).toBe("open");
    h.last().serverClose();
    expect(h.fireTimer().ms).toBe(500); // attempt counter reset by the open
  });

  it("stops reconnecting once closed", () => {
    const h = new Harness();
    h.stream.connect();
    h.last().serverOpen();
    h.last().serverClose();
    expect(h.timers).toHaveLength(1);
    h.stream.close();
    expect(h.timers).toHaveLength(0);
    expect(h.stream.status).toBe("closed");
  });

  it("flags staleness after the threshold without events", () => {
    const h = new Harness(5000);
    h.stream.connect();
    h.clock = 1000;
    h.last().serverOpen();
    expect(h.stream.isStale()).toBe(false);

    h.clock = 5500;
    h.last().serverSend('{"event":"disconnect","robot":"r1"}');
    expect(h.stream.isStale()).toBe(false);

    h.clock = 10_499;
    expect(h.stream.isStale()).toBe(false);
    h.clock = 10_501;
    expect(h.stream.isStale()).toBe(true);

    h.last().serverClose();
    expect(h.stream.isStale()).toBe(false); // disconnected, not stale
  });
});

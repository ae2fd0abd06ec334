import { describe, expect, it } from "vitest";

import {
  MAX_SEND_HZ,
  OrientationSender,
  readingFromDeviceOrientation,
  type SocketLike,
} from "../src/orientation.js";
import { validateOrientationMessage } from "../src/protocol.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }
}

function makeSender(opts: { minIntervalMs?: number } = {}) {
  const sockets: FakeSocket[] = [];
  const scheduled: Array<() => void> = [];
  let now = 0;
  const sender = new OrientationSender(
    () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    {
      minIntervalMs: opts.minIntervalMs,
      now: () => now,
      schedule: (fn) => void scheduled.push(fn),
    },
  );
  return {
    sender,
    sockets,
    runScheduled: () => {
      while (scheduled.length) scheduled.shift()!();
    },
    advance: (ms: number) => {
      now += ms;
    },
  };
}

describe("OrientationSender", () => {
  it("streams schema-conformant records with increasing seq", () => {
    const { sender, sockets, advance } = makeSender();
    sender.start();
    sockets[0].onopen!();
    for (let i = 0; i < 5; i++) {
      sender.handleReading(1.0, 2.0, 3.0 + i);
      advance(50);
    }
    const messages = sockets[0].sent.map(validateOrientationMessage);
    expect(messages).toHaveLength(5);
    expect(messages.map((m) => m.seq)).toEqual([1, 2, 3, 4, 5]);
    for (const m of messages) {
      expect(Number.isFinite(m.roll)).toBe(true);
      expect(m.t).toBeDefined();
    }
  });

  it("throttles bursts to at most 60 Hz", () => {
    const { sender, sockets, advance } = makeSender();
    sender.start();
    sockets[0].onopen!();
    // synthetic 1 kHz burst for one second
    for (let i = 0; i < 1000; i++) {
      sender.handleReading(0, 0, i * 0.1);
      advance(1);
    }
    expect(sockets[0].sent.length).toBeLessThanOrEqual(MAX_SEND_HZ);
    expect(sockets[0].sent.length).toBeGreaterThan(MAX_SEND_HZ / 2);
    // consecutive sends never closer than the throttle interval
    const stamps = sockets[0].sent.map((m) => validateOrientationMessage(m).t!);
    for (let i = 1; i < stamps.length; i++) {
      expect(stamps[i] - stamps[i - 1]).toBeGreaterThanOrEqual(1000 / MAX_SEND_HZ);
    }
  });

  it("drops readings while disconnected", () => {
    const { sender, sockets } = makeSender();
    sender.start();
    expect(sender.handleReading(0, 0, 0)).toBe(false);
    sockets[0].onopen!();
    expect(sender.handleReading(0, 0, 0)).toBe(true);
  });

  it("reconnects with a fresh socket and restarts seq", () => {
    const { sender, sockets, runScheduled, advance } = makeSender();
    sender.start();
    sockets[0].onopen!();
    sender.handleReading(0, 0, 10);
    advance(100);
    sender.handleReading(0, 0, 11);
    expect(sockets[0].sent).toHaveLength(2);

    sockets[0].close();
    expect(sender.isConnected).toBe(false);
    runScheduled();
    expect(sockets).toHaveLength(2);
    sockets[1].onopen!();
    advance(100);
    sender.handleReading(0, 0, 12);
    // seq restarted: the server treats this as a new session and recalibrates
    expect(validateOrientationMessage(sockets[1].sent[0]).seq).toBe(1);
  });

  it("stop() closes the socket and stops reconnecting", () => {
    const { sender, sockets, runScheduled } = makeSender();
    sender.start();
    sockets[0].onopen!();
    sender.stop();
    expect(sockets[0].closed).toBe(true);
    runScheduled();
    expect(sockets).toHaveLength(1);
  });
});

describe("readingFromDeviceOrientation", () => {
  it("maps alpha/beta/gamma to yaw/pitch/roll with wrapping", () => {
    const r = readingFromDeviceOrientation(350, 10, -20);
    expect(r).toEqual({ roll: -20, pitch: 10, yaw: -10 });
  });

  it("returns null when the sensor reports nulls", () => {
    expect(readingFromDeviceOrientation(null, 0, 0)).toBeNull();
  });
});

// Orientation capture and upstream streaming.
//
// Readings are throttled to at most 60 Hz, serialized with a per-connection
// monotonically increasing sequence number, and re-sent over a fresh socket
// after any disconnect. The sequence restarts on reconnect on purpose: a new
// session makes the server recalibrate on its first sample, so the head
// returns to (0,0) for the operator's current pose.

import { buildOrientationMessage, wrap180 } from "./protocol.js";

export const MAX_SEND_HZ = 60;

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export interface OrientationSenderOptions {
  minIntervalMs?: number;
  reconnectDelayMs?: number;
  now?: () => number;
  schedule?: (fn: () => void, delayMs: number) => void;
  onStateChange?: (connected: boolean) => void;
}

interface Reading {
  roll: number;
  pitch: number;
  yaw: number;
}

/** Map a DeviceOrientationEvent to the gateway's roll/pitch/yaw convention. */
export function readingFromDeviceOrientation(
  alpha: number | null,
  beta: number | null,
  gamma: number | null,
): Reading | null {
  if (alpha === null || beta === null || gamma === null) return null;
  // alpha: z-axis 0..360 -> yaw; beta: x-axis -> pitch; gamma: y-axis -> roll
  return { roll: wrap180(gamma), pitch: wrap180(beta), yaw: wrap180(alpha) };
}

export class OrientationSender {
  readonly minIntervalMs: number;
  private readonly reconnectDelayMs: number;
  private readonly now: () => number;
  private readonly schedule: (fn: () => void, delayMs: number) => void;
  private readonly onStateChange?: (connected: boolean) => void;

  private socket: SocketLike | null = null;
  private connected = false;
  private running = false;
  private seq = 0;
  private lastSentMs = -Infinity;
  sentCount = 0;

  constructor(
    private readonly socketFactory: () => SocketLike,
    opts: OrientationSenderOptions = {},
  ) {
    this.minIntervalMs = opts.minIntervalMs ?? 1000 / MAX_SEND_HZ;
    this.reconnectDelayMs = opts.reconnectDelayMs ?? 1000;
    this.now = opts.now ?? (() => performance.now());
    this.schedule = opts.schedule ?? ((fn, ms) => void setTimeout(fn, ms));
    this.onStateChange = opts.onStateChange;
  }

  get isConnected(): boolean {
    return this.connected;
  }

  start(): void {
    if (this.running) return;
    this.running = true;
    this.connect();
  }

  stop(): void {
    this.running = false;
    this.socket?.close();
    this.socket = null;
    this.setConnected(false);
  }

  private setConnected(value: boolean): void {
    if (this.connected !== value) {
      this.connected = value;
      this.onStateChange?.(value);
    }
  }

  private connect(): void {
    const sock = this.socketFactory();
    this.socket = sock;
    sock.onopen = () => {
      // fresh session: restart the sequence so the server re-zeros the head
      this.seq = 0;
      this.lastSentMs = -Infinity;
      this.setConnected(true);
    };
    const retry = () => {
      this.setConnected(false);
      if (this.socket === sock) this.socket = null;
      if (this.running) this.schedule(() => this.running && this.connect(), this.reconnectDelayMs);
    };
    sock.onclose = retry;
    sock.onerror = () => sock.close();
  }

  /** Offer one sensor reading; returns true if a message went out. */
  handleReading(roll: number, pitch: number, yaw: number): boolean {
    if (!this.connected || this.socket === null) return false;
    const t = this.now();
    if (t - this.lastSentMs < this.minIntervalMs) return false;
    this.lastSentMs = t;
    this.seq += 1;
    this.socket.send(buildOrientationMessage(roll, pitch, yaw, this.seq, t));
    this.sentCount += 1;
    return true;
  }
}

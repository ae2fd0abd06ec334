// Wire formats shared with the gateway: JSON orientation records going up,
// framed JPEG messages coming down.

export interface OrientationMessage {
  roll: number;
  pitch: number;
  yaw: number;
  seq: number;
  t?: number;
}

export function wrap180(angle: number): number {
  let a = angle % 360;
  if (a > 180) a -= 360;
  else if (a <= -180) a += 360;
  return a;
}

export function buildOrientationMessage(
  roll: number,
  pitch: number,
  yaw: number,
  seq: number,
  t?: number,
): string {
  const msg: OrientationMessage = {
    roll: wrap180(roll),
    pitch: wrap180(pitch),
    yaw: wrap180(yaw),
    seq,
  };
  if (t !== undefined) msg.t = t;
  return JSON.stringify(msg);
}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

/** Validates a record against the gateway's orientation schema; throws on violation. */
export function validateOrientationMessage(text: string): OrientationMessage {
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch {
    throw new Error("orientation message is not valid JSON");
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    throw new Error("orientation message must be a JSON object");
  }
  const msg = parsed as Record<string, unknown>;
  for (const field of ["roll", "pitch", "yaw"] as const) {
    if (!isFiniteNumber(msg[field])) {
      throw new Error(`field ${field} missing or not a finite number`);
    }
  }
  if (!Number.isInteger(msg.seq) || (msg.seq as number) < 0) {
    throw new Error("field seq missing or not an unsigned integer");
  }
  if (msg.t !== undefined && !isFiniteNumber(msg.t)) {
    throw new Error("field t must be a number when present");
  }
  return {
    roll: msg.roll as number,
    pitch: msg.pitch as number,
    yaw: msg.yaw as number,
    seq: msg.seq as number,
    ...(msg.t !== undefined ? { t: msg.t as number } : {}),
  };
}

// Video frame message: 8-byte header, ASCII magic "XLFR" then a big-endian
// uint32 payload length, followed by the JPEG payload.
export const VIDEO_HEADER_LEN = 8;
const MAGIC = [0x58, 0x4c, 0x46, 0x52]; // "XLFR"

export function parseFrameMessage(buffer: ArrayBuffer): Uint8Array {
  if (buffer.byteLength < VIDEO_HEADER_LEN) {
    throw new Error(`frame message shorter than header: ${buffer.byteLength} bytes`);
  }
  const bytes = new Uint8Array(buffer);
  for (let i = 0; i < 4; i++) {
    if (bytes[i] !== MAGIC[i]) throw new Error("bad frame magic");
  }
  const length = new DataView(buffer).getUint32(4, false);
  const payload = bytes.subarray(VIDEO_HEADER_LEN);
  if (payload.byteLength !== length) {
    throw new Error(`payload length ${payload.byteLength} != header length ${length}`);
  }
  return payload;
}

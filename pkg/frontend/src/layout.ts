// Split-screen VR geometry: a pure function so it is testable without a
// display. The screen is halved vertically; the same frame is contain-fit
// into each half, scaled by zoom about the half's center, then the left
// copy shifts +convergencePx and the right copy -convergencePx.

import type { ViewSettings } from "./settings.js";

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export function layoutSplitView(
  frameW: number,
  frameH: number,
  screenW: number,
  screenH: number,
  s: ViewSettings,
): [Rect, Rect] {
  if (frameW <= 0 || frameH <= 0 || screenW <= 0 || screenH <= 0) {
    throw new Error("dimensions must be positive");
  }
  const halfW = screenW / 2;
  const fit = Math.min(halfW / frameW, screenH / frameH);
  const drawW = frameW * fit * s.zoom;
  const drawH = frameH * fit * s.zoom;
  const cy = screenH / 2;

  const leftCx = halfW / 2 + s.convergencePx;
  const rightCx = halfW + halfW / 2 - s.convergencePx;

  return [
    { x: leftCx - drawW / 2, y: cy - drawH / 2, w: drawW, h: drawH },
    { x: rightCx - drawW / 2, y: cy - drawH / 2, w: drawW, h: drawH },
  ];
}

export function rectCenter(r: Rect): { cx: number; cy: number } {
  return { cx: r.x + r.w / 2, cy: r.y + r.h / 2 };
}

// Page wiring: sensors in, video out, controls overlay.

import { layoutSplitView } from "./layout.js";
import {
  OrientationSender,
  readingFromDeviceOrientation,
  type SocketLike,
} from "./orientation.js";
import { parseFrameMessage } from "./protocol.js";
import {
  loadSettings,
  resolveStore,
  saveSettings,
  type ViewSettings,
} from "./settings.js";
import { requestRecalibration, StatusPoller } from "./status.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const controls = document.getElementById("controls")!;
const statusDot = document.getElementById("status-dot")!;
const convergenceSlider = document.getElementById("convergence") as HTMLInputElement;
const zoomSlider = document.getElementById("zoom") as HTMLInputElement;
const recalibrateBtn = document.getElementById("recalibrate") as HTMLButtonElement;
const enableBtn = document.getElementById("enable") as HTMLButtonElement;

const store = resolveStore();
let settings: ViewSettings = loadSettings(store);
convergenceSlider.value = String(settings.convergencePx);
zoomSlider.value = String(settings.zoom);

let latestFrame: ImageBitmap | null = null;
let frameVersion = 0;
let drawnVersion = -1;

function wsUrl(path: string): string {
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${location.host}${path}`;
}

// ---- orientation upstream ------------------------------------------------

const sender = new OrientationSender(
  () => new WebSocket(wsUrl("/ws/orientation")) as unknown as SocketLike,
  {
    onStateChange: (connected) => {
      statusDot.classList.toggle("ok", connected);
    },
  },
);

function onDeviceOrientation(ev: DeviceOrientationEvent): void {
  const reading = readingFromDeviceOrientation(ev.alpha, ev.beta, ev.gamma);
  if (reading !== null) {
    sender.handleReading(reading.roll, reading.pitch, reading.yaw);
  }
}

async function enableSensors(): Promise<void> {
  type PermissionCtor = { requestPermission?: () => Promise<string> };
  const ctor = DeviceOrientationEvent as unknown as PermissionCtor;
  try {
    if (typeof ctor.requestPermission === "function") {
      const outcome = await ctor.requestPermission();
      if (outcome !== "granted") {
        showBanner("Motion permission denied - tap to retry");
        return;
      }
    }
    hideBanner();
    window.addEventListener("deviceorientation", onDeviceOrientation);
    sender.start();
  } catch {
    showBanner("Could not access orientation sensors - tap to retry");
  }
}

function showBanner(text: string): void {
  banner.textContent = text;
  banner.style.display = "block";
  enableBtn.style.display = "block";
}

function hideBanner(): void {
  banner.style.display = "none";
  enableBtn.style.display = "none";
}

enableBtn.addEventListener("click", () => void enableSensors());
banner.addEventListener("click", () => void enableSensors());

// ---- video downstream ------------------------------------------------------

function connectVideo(): void {
  const sock = new WebSocket(wsUrl("/ws/video"));
  sock.binaryType = "arraybuffer";
  sock.onmessage = async (ev: MessageEvent<ArrayBuffer>) => {
    try {
      const jpeg = parseFrameMessage(ev.data);
      const blob = new Blob([jpeg.slice()], { type: "image/jpeg" });
      const bitmap = await createImageBitmap(blob);
      latestFrame?.close();
      latestFrame = bitmap;
      frameVersion += 1;
    } catch (err) {
      console.warn("dropping bad video frame", err);
    }
  };
  sock.onclose = () => setTimeout(connectVideo, 1000);
  sock.onerror = () => sock.close();
}

function draw(): void {
  requestAnimationFrame(draw);
  const w = (canvas.width = canvas.clientWidth);
  const h = (canvas.height = canvas.clientHeight);
  if (latestFrame === null) {
    if (drawnVersion !== frameVersion) {
      ctx.fillStyle = "#000";
      ctx.fillRect(0, 0, w, h);
    }
    return;
  }
  const [left, right] = layoutSplitView(latestFrame.width, latestFrame.height, w, h, settings);
  ctx.fillStyle = "#000";
  ctx.fillRect(0, 0, w, h);
  ctx.save();
  ctx.beginPath();
  ctx.rect(0, 0, w / 2, h);
  ctx.clip();
  ctx.drawImage(latestFrame, left.x, left.y, left.w, left.h);
  ctx.restore();
  ctx.save();
  ctx.beginPath();
  ctx.rect(w / 2, 0, w / 2, h);
  ctx.clip();
  ctx.drawImage(latestFrame, right.x, right.y, right.w, right.h);
  ctx.restore();
  drawnVersion = frameVersion;
}

// ---- controls --------------------------------------------------------------

function applySettings(): void {
  settings = {
    convergencePx: Number(convergenceSlider.value),
    zoom: Number(zoomSlider.value),
  };
  saveSettings(settings, store);
}

convergenceSlider.addEventListener("input", applySettings);
zoomSlider.addEventListener("input", applySettings);

recalibrateBtn.addEventListener("click", () => {
  void requestRecalibration().then((ok) => {
    recalibrateBtn.textContent = ok ? "Recalibrated" : "Recalibrate (failed)";
    setTimeout(() => (recalibrateBtn.textContent = "Recalibrate"), 1200);
  });
});

const poller = new StatusPoller((status) => {
  const head = status?.modalities.find((m) => m.modality === "head");
  statusDot.classList.toggle("ok", Boolean(head?.connected && !head.stale));
  statusDot.title = status ? `safety: ${status.safety}` : "gateway unreachable";
});
poller.start();

// tap toggles the controls overlay; double tap goes fullscreen
let lastTap = 0;
canvas.addEventListener("pointerdown", () => {
  const now = Date.now();
  if (now - lastTap < 350) {
    void document.documentElement.requestFullscreen?.();
  } else {
    controls.classList.toggle("hidden");
  }
  lastTap = now;
});

connectVideo();
void enableSensors();
requestAnimationFrame(draw);

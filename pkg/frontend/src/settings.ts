// View settings persisted across sessions: convergence offset between the
// two eye copies and the zoom factor.

export interface ViewSettings {
  convergencePx: number;
  zoom: number;
}

export const DEFAULT_SETTINGS: ViewSettings = { convergencePx: 0, zoom: 1.0 };
export const ZOOM_MIN = 0.5;
export const ZOOM_MAX = 2.0;
export const CONVERGENCE_LIMIT_PX = 200;

const STORAGE_KEY = "teleop.viewSettings";

export interface StringStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export function memoryStore(): StringStore {
  const data = new Map<string, string>();
  return {
    getItem: (k) => data.get(k) ?? null,
    setItem: (k, v) => void data.set(k, v),
  };
}

/** localStorage when usable, otherwise a warned in-memory fallback. */
export function resolveStore(): StringStore {
  try {
    const probe = "teleop.probe";
    window.localStorage.setItem(probe, "1");
    window.localStorage.removeItem(probe);
    return window.localStorage;
  } catch {
    console.warn("localStorage unavailable; settings will not survive reload");
    return memoryStore();
  }
}

export function clampSettings(s: ViewSettings): ViewSettings {
  return {
    convergencePx: Math.max(
      -CONVERGENCE_LIMIT_PX,
      Math.min(CONVERGENCE_LIMIT_PX, s.convergencePx),
    ),
    zoom: Math.max(ZOOM_MIN, Math.min(ZOOM_MAX, s.zoom)),
  };
}

export function loadSettings(store: StringStore): ViewSettings {
  const raw = store.getItem(STORAGE_KEY);
  if (raw === null) return { ...DEFAULT_SETTINGS };
  try {
    const parsed = JSON.parse(raw) as Partial<ViewSettings>;
    if (
      typeof parsed.convergencePx !== "number" ||
      !Number.isFinite(parsed.convergencePx) ||
      typeof parsed.zoom !== "number" ||
      !Number.isFinite(parsed.zoom)
    ) {
      throw new Error("bad shape");
    }
    return clampSettings({ convergencePx: parsed.convergencePx, zoom: parsed.zoom });
  } catch {
    console.warn("stored view settings corrupted; using defaults");
    return { ...DEFAULT_SETTINGS };
  }
}

export function saveSettings(s: ViewSettings, store: StringStore): void {
  store.setItem(STORAGE_KEY, JSON.stringify(clampSettings(s)));
}

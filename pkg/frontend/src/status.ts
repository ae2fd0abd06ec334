// Gateway control API: status polling and recalibration.

export interface ModalityStatus {
  modality: string;
  connected: boolean;
  last_seen_ms: number | null;
  stale: boolean;
}

export interface GatewayStatus {
  modalities: ModalityStatus[];
  tick: { count: number; rate_hz: number; jitter: Record<string, number> };
  safety: string | null;
  head: { yaw: number; roll: number } | null;
}

type FetchLike = (url: string, init?: { method?: string }) => Promise<{
  ok: boolean;
  json(): Promise<unknown>;
}>;

export async function fetchStatus(fetchFn: FetchLike = fetch): Promise<GatewayStatus | null> {
  try {
    const resp = await fetchFn("/api/status");
    if (!resp.ok) return null;
    return (await resp.json()) as GatewayStatus;
  } catch {
    return null;
  }
}

export async function requestRecalibration(fetchFn: FetchLike = fetch): Promise<boolean> {
  try {
    const resp = await fetchFn("/api/recalibrate", { method: "POST" });
    return resp.ok;
  } catch {
    return false;
  }
}

export class StatusPoller {
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly onStatus: (status: GatewayStatus | null) => void,
    private readonly intervalMs = 1000,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  start(): void {
    if (this.timer !== null) return;
    const poll = async () => this.onStatus(await fetchStatus(this.fetchFn));
    void poll();
    this.timer = setInterval(poll, this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}

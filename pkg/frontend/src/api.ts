// Gateway client. The base URL defaults to the server that served the page
// (the gateway mounts this app at /console).

import type {
  AirspaceDoc,
  FlightPlanDoc,
  FrameDoc,
  ResolutionDoc,
  SnapshotDoc,
} from "./types.js";

export class GatewayError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`gateway ${status}: ${detail}`);
  }
}

export class GatewayClient {
  constructor(
    private base: string = "/api/v1",
    private fetcher: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetcher(this.base + path);
    if (!response.ok) {
      throw new GatewayError(response.status, await response.text());
    }
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const response = await this.fetcher(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? "{}" : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = await response.text();
      try {
        detail = (JSON.parse(detail) as { detail?: string }).detail ?? detail;
      } catch {
        // plain text stays as-is
      }
      throw new GatewayError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  status() {
    return this.get<{ state: string; t_sim: number; cycle: number }>("/status");
  }

  snapshot() {
    return this.get<SnapshotDoc>("/snapshot");
  }

  airspace() {
    return this.get<AirspaceDoc>("/airspace");
  }

  aircraftPlan(callsign: string) {
    return this.get<FlightPlanDoc>(`/aircraft/${callsign}/plan`);
  }

  traces() {
    return this.get<{ records: ResolutionDoc[] }>("/traces");
  }

  timeline() {
    return this.get<{ count: number; t_first: number; t_last: number }>(
      "/timeline",
    );
  }

  frame(index: number) {
    return this.get<FrameDoc>(`/timeline/${index}`);
  }

  approve(clearanceId: string) {
    return this.post(`/clearances/${clearanceId}/approve`);
  }

  reject(clearanceId: string) {
    return this.post(`/clearances/${clearanceId}/reject`);
  }

  modify(clearanceId: string, action: Record<string, unknown>) {
    return this.post(`/clearances/${clearanceId}/modify`, { action });
  }

  control(op: string, args: Record<string, unknown> = {}) {
    return this.post("/control", { op, ...args });
  }

  /** Subscribe to the snapshot stream; returns an unsubscribe function. */
  stream(onSnapshot: (snap: SnapshotDoc) => void, onError?: () => void) {
    const source = new EventSource(this.base + "/stream");
    source.addEventListener("snapshot", (event) => {
      onSnapshot(JSON.parse((event as MessageEvent).data) as SnapshotDoc);
    });
    source.onerror = () => onError?.();
    return () => source.close();
  }
}

// Push-channel client with reconnect, plus thin control-endpoint wrappers.

import type { AoiModelDoc, PushEvent } from "./types.js";

export interface ClientCallbacks {
  onEvent(event: PushEvent): void;
  onConnection(state: "connecting" | "open" | "reconnecting"): void;
}

export class PushChannelClient {
  private socket: WebSocket | null = null;
  private closed = false;
  private backoffMs = 500;

  constructor(private baseUrl: string, private callbacks: ClientCallbacks) {}

  start(): void {
    this.callbacks.onConnection("connecting");
    this.connect();
  }

  private connect(): void {
    const wsUrl = this.baseUrl.replace(/^http/, "ws") + "/ws";
    const socket = new WebSocket(wsUrl);
    this.socket = socket;
    socket.onopen = () => {
      this.backoffMs = 500;
      this.callbacks.onConnection("open");
    };
    socket.onmessage = (msg) => {
      this.callbacks.onEvent(JSON.parse(msg.data as string) as PushEvent);
    };
    socket.onclose = () => this.scheduleReconnect();
    socket.onerror = () => socket.close();
  }

  private scheduleReconnect(): void {
    if (this.closed) return;
    this.callbacks.onConnection("reconnecting");
    setTimeout(() => this.connect(), this.backoffMs);
    this.backoffMs = Math.min(this.backoffMs * 2, 8000);
  }

  stop(): void {
    this.closed = true;
    this.socket?.close();
  }
}

export class ControlApi {
  constructor(private baseUrl: string) {}

  private async post(path: string, body?: unknown): Promise<Response> {
    return fetch(this.baseUrl + path, {
      method: "POST",
      headers: body ? { "content-type": "application/json" } : undefined,
      body: body ? JSON.stringify(body) : undefined,
    });
  }

  start(): Promise<Response> {
    return this.post("/control/start");
  }

  stop(): Promise<Response> {
    return this.post("/control/stop");
  }

  annotate(text: string): Promise<Response> {
    return this.post("/control/annotate", { text });
  }

  async getAoiModel(): Promise<AoiModelDoc> {
    const resp = await fetch(this.baseUrl + "/aoi");
    return (await resp.json()) as AoiModelDoc;
  }

  async putAoiModel(doc: AoiModelDoc): Promise<{ ok: boolean; error?: string }> {
    const resp = await fetch(this.baseUrl + "/aoi", {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    });
    if (resp.ok) return { ok: true };
    const body = (await resp.json()) as { error?: string };
    return { ok: false, error: body.error ?? `HTTP ${resp.status}` };
  }
}

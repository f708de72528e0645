import { SseParser } from "./sse";
import type {
  GatewayEvent, InterventionAck, NodeLabel, Snapshot, WindowResult,
} from "./types";

export class GatewayRequestError extends Error {
  constructor(public status: number, public code: string, reason: string) {
    super(reason);
  }
}

async function unwrap<T>(resp: Response): Promise<T> {
  const body = await resp.json();
  if (!resp.ok) {
    throw new GatewayRequestError(
      resp.status, body.code ?? "error", body.reason ?? resp.statusText);
  }
  return body as T;
}

/** Thin client over the gateway HTTP + event-stream API. */
export class GatewayClient {
  constructor(private baseUrl: string,
              private fetchImpl: typeof fetch = fetch) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async createSession(config: object, mode = "manual-step"):
      Promise<{ id: string; status: string; max_windows: number }> {
    const resp = await this.fetchImpl(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ config, mode }),
    });
    return unwrap(resp);
  }

  async getSession(id: string): Promise<{
    id: string; status: string; window_index: number;
    max_windows: number; variant: string; mode: string;
  }> {
    return unwrap(await this.fetchImpl(this.url(`/sessions/${id}`)));
  }

  async step(id: string): Promise<WindowResult> {
    const resp = await this.fetchImpl(this.url(`/sessions/${id}/step`),
                                      { method: "POST" });
    return unwrap(resp);
  }

  async markNode(id: string, node: number, label: NodeLabel):
      Promise<InterventionAck> {
    const resp = await this.fetchImpl(this.url(`/sessions/${id}/interventions`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ node, label }),
    });
    return unwrap(resp);
  }

  async getSnapshot(id: string): Promise<Snapshot> {
    return unwrap(await this.fetchImpl(this.url(`/sessions/${id}/snapshot`)));
  }

  /** Fetch the event log from a cursor; with follow=false resolves once
   *  the replay completes, which makes state reproducible offline. */
  async readEvents(id: string, after = -1, follow = false,
                   onEvent?: (e: GatewayEvent) => void):
      Promise<GatewayEvent[]> {
    const resp = await this.fetchImpl(
      this.url(`/sessions/${id}/events?after=${after}&follow=${follow}`));
    if (!resp.ok || !resp.body) {
      throw new GatewayRequestError(resp.status, "stream_failed",
                                    `event stream HTTP ${resp.status}`);
    }
    const parser = new SseParser();
    const events: GatewayEvent[] = [];
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    for (;;) {
      const { done, value } = await reader.read();
      if (value) {
        for (const event of parser.push(decoder.decode(value, { stream: true }))) {
          events.push(event);
          onEvent?.(event);
        }
      }
      if (done) return events;
    }
  }
}

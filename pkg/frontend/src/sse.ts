import type { GatewayEvent } from "./types";

/**
 * Incremental parser for the gateway's server-sent-event frames:
 *
 *   id: <index>\nevent: <type>\ndata: <json>\n\n
 *
 * push() accepts arbitrary chunk boundaries and yields complete events.
 */
export class SseParser {
  private buffer = "";

  push(chunk: string): GatewayEvent[] {
    this.buffer += chunk;
    const events: GatewayEvent[] = [];
    let cut: number;
    while ((cut = this.buffer.indexOf("\n\n")) >= 0) {
      const frame = this.buffer.slice(0, cut);
      this.buffer = this.buffer.slice(cut + 2);
      const event = parseFrame(frame);
      if (event) events.push(event);
    }
    return events;
  }
}

function parseFrame(frame: string): GatewayEvent | null {
  let id = -1;
  let type = "";
  let data = "";
  for (const line of frame.split("\n")) {
    if (line.startsWith("id: ")) id = Number(line.slice(4));
    else if (line.startsWith("event: ")) type = line.slice(7);
    else if (line.startsWith("data: ")) data = line.slice(6);
  }
  if (!type || !data) return null;
  return { index: id, type: type as GatewayEvent["type"], data: JSON.parse(data) };
}

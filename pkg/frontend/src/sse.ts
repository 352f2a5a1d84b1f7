// Server-sent event subscription with seq-based resume.  The browser's
// EventSource replays Last-Event-ID on its own reconnects; explicit
// connects pass the resume point as a query parameter, which the server
// treats the same way.  Duplicate delivery is harmless either way because
// the fold ignores already-applied seqs.

import type { EventKind, SessionEvent } from "./types.js";
import { EVENT_KINDS } from "./types.js";

export interface StreamHandlers {
  onEvent(event: SessionEvent): void;
  onGap(missed: number): void;
  onConnection(connected: boolean): void;
}

export function streamUrl(sessionId: string, lastSeq: number): string {
  const base = `/api/sessions/${encodeURIComponent(sessionId)}/events`;
  return lastSeq > 0 ? `${base}?last_event_id=${lastSeq}` : base;
}

export function parseEventFrame(
  kind: EventKind,
  data: string,
  lastEventId: string,
): SessionEvent | null {
  const seq = Number.parseInt(lastEventId, 10);
  if (!Number.isFinite(seq) || seq <= 0) return null;
  let payload: unknown;
  try {
    payload = JSON.parse(data);
  } catch {
    return null;
  }
  if (typeof payload !== "object" || payload === null) return null;
  return { kind, seq, payload } as SessionEvent;
}

export function parseGapFrame(data: string): number {
  try {
    const payload = JSON.parse(data) as { missed?: unknown };
    return typeof payload.missed === "number" ? payload.missed : 0;
  } catch {
    return 0;
  }
}

export class EventStream {
  private source: EventSource | null = null;

  constructor(
    private readonly sessionId: string,
    private readonly handlers: StreamHandlers,
  ) {}

  connect(lastSeq: number): void {
    this.close();
    const source = new EventSource(streamUrl(this.sessionId, lastSeq));
    this.source = source;
    source.onopen = () => this.handlers.onConnection(true);
    source.onerror = () => this.handlers.onConnection(false);
    for (const kind of EVENT_KINDS) {
      source.addEventListener(kind, (msg: MessageEvent<string>) => {
        const event = parseEventFrame(kind, msg.data, msg.lastEventId);
        if (event) this.handlers.onEvent(event);
      });
    }
    source.addEventListener("Gap", (msg: MessageEvent<string>) => {
      this.handlers.onGap(parseGapFrame(msg.data));
    });
  }

  close(): void {
    if (this.source) {
      this.source.close();
      this.source = null;
    }
  }
}

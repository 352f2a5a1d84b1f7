// REST client for the session service.  The UI writes through exactly two
// endpoints (create session, submit query); everything else is read-only.

import type {
  ApiErrorBody,
  GraphNeighbors,
  ProcedureRow,
  QueryResponse,
  SessionCreated,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly retriable: boolean;

  constructor(body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.retriable = body.retriable;
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(path, init);
  if (!res.ok) {
    let body: ApiErrorBody;
    try {
      body = (await res.json()) as ApiErrorBody;
    } catch {
      body = { code: `http_${res.status}`, message: res.statusText, retriable: res.status >= 500 };
    }
    throw new ApiError(body);
  }
  return (await res.json()) as T;
}

function postJSON<T>(path: string, body: unknown): Promise<T> {
  return request<T>(path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
}

export function createSession(): Promise<SessionCreated> {
  return postJSON<SessionCreated>("/api/sessions", {});
}

export function submitQuery(sessionId: string, text: string): Promise<QueryResponse> {
  return postJSON<QueryResponse>(`/api/sessions/${encodeURIComponent(sessionId)}/query`, { text });
}

export function listProcedures(): Promise<ProcedureRow[]> {
  return request<ProcedureRow[]>("/api/procedures");
}

export function graphNeighbors(nodeId: string): Promise<GraphNeighbors> {
  return request<GraphNeighbors>(`/api/graph/${encodeURIComponent(nodeId)}/neighbors`);
}

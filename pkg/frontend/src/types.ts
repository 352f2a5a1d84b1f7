// Wire types mirroring the session-service HTTP/SSE API.

export interface StepDisplayedPayload {
  number: number;
  text: string;
}

export interface ShowFigurePayload {
  number: number;
  media_path: string;
  media_url: string;
  caption: string;
}

export interface ConfidenceResult {
  chunk_id: string;
  confidence: number;
}

export interface ConfidenceUpdatePayload {
  results: ConfidenceResult[];
}

export interface RefusalPayload {
  text: string;
}

export interface VerbatimWarningPayload {
  step_number: number | null;
  expected: string;
  first_divergence: number | null;
}

export type SessionEvent =
  | { kind: "StepDisplayed"; seq: number; payload: StepDisplayedPayload }
  | { kind: "ShowFigure"; seq: number; payload: ShowFigurePayload }
  | { kind: "ConfidenceUpdate"; seq: number; payload: ConfidenceUpdatePayload }
  | { kind: "Refusal"; seq: number; payload: RefusalPayload }
  | { kind: "VerbatimWarning"; seq: number; payload: VerbatimWarningPayload };

export type EventKind = SessionEvent["kind"];

export const EVENT_KINDS: readonly EventKind[] = [
  "StepDisplayed",
  "ShowFigure",
  "ConfidenceUpdate",
  "Refusal",
  "VerbatimWarning",
];

export interface ApiErrorBody {
  code: string;
  message: string;
  retriable: boolean;
}

export interface SessionCreated {
  session_id: string;
}

export interface QueryResponse {
  session_id: string;
  procedure_id: string | null;
  reply: string;
  step_number: number | null;
  figure_numbers: number[];
  verbatim: {
    status: "Pass" | "Fail" | "NotApplicable";
    expected: string;
    found_span: string | null;
    first_divergence: number | null;
  };
  decision: {
    proceed: boolean;
    top_confidence: number;
    threshold: number;
  };
  events: SessionEvent[];
}

export interface ProcedureRow {
  id: string;
  title: string;
  last_updated: string;
  step_count: number;
  figure_count: number;
}

export interface GraphNeighbor {
  id: string;
  kind: string;
  attributes: [string, string][];
}

export interface GraphNeighbors {
  node_id: string;
  neighbors: GraphNeighbor[];
}

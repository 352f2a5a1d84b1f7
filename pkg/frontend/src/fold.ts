// Pure fold from the ordered session-event stream to the rendered view
// state.  Replaying the same events yields the same state; events at or
// below the last applied seq are ignored, so a resumed stream that
// overlaps never double-applies.

import type { ConfidenceResult, SessionEvent } from "./types.js";

export type Connection = "Connected" | "Reconnecting";

export interface StepView {
  number: number;
  text: string;
}

export interface FigureView {
  number: number;
  mediaUrl: string;
  caption: string;
}

export interface ConfidenceRow {
  label: string;
  confidence: number;
}

export type WarningKind = "refusal" | "verbatim" | "gap";

export interface Warning {
  kind: WarningKind;
  text: string;
}

export interface ViewState {
  sessionId: string;
  currentStep: StepView | null;
  visibleFigure: FigureView | null;
  confidenceList: ConfidenceRow[];
  warnings: Warning[];
  connection: Connection;
  lastSeq: number;
  // Events ahead of the next expected seq, held until the gap fills.
  buffered: SessionEvent[];
  // Set after a Gap frame: the next event may jump seq and is applied as
  // the new baseline instead of being buffered.
  resync: boolean;
}

export function initialState(sessionId: string): ViewState {
  return {
    sessionId,
    currentStep: null,
    visibleFigure: null,
    confidenceList: [],
    warnings: [],
    connection: "Connected",
    lastSeq: 0,
    buffered: [],
    resync: false,
  };
}

export function setConnection(state: ViewState, connection: Connection): ViewState {
  if (state.connection === connection) return state;
  return { ...state, connection };
}

// A Gap frame means events were evicted server-side before this client
// resumed; the stream continues from a later seq.
export function noteGap(state: ViewState, missed: number): ViewState {
  return {
    ...state,
    warnings: [...state.warnings, { kind: "gap", text: `${missed} event(s) missed` }],
    resync: true,
  };
}

export function applyEvent(state: ViewState, event: SessionEvent): ViewState {
  if (event.seq <= state.lastSeq) return state;
  if (!state.resync && event.seq > state.lastSeq + 1) {
    return { ...state, buffered: insertBuffered(state.buffered, event) };
  }
  let next = applyInOrder(state, event);
  // Drain any buffered events the new baseline unblocks.
  while (next.buffered.length > 0 && next.buffered[0].seq <= next.lastSeq + 1) {
    const [head, ...rest] = next.buffered;
    next = { ...next, buffered: rest };
    if (head.seq === next.lastSeq + 1) {
      next = applyInOrder(next, head);
    }
  }
  return next;
}

export function applyAll(state: ViewState, events: SessionEvent[]): ViewState {
  return events.reduce(applyEvent, state);
}

function insertBuffered(buffered: SessionEvent[], event: SessionEvent): SessionEvent[] {
  if (buffered.some((e) => e.seq === event.seq)) return buffered;
  const out = [...buffered, event];
  out.sort((a, b) => a.seq - b.seq);
  return out;
}

function applyInOrder(state: ViewState, event: SessionEvent): ViewState {
  const base = { ...state, lastSeq: event.seq, resync: false };
  switch (event.kind) {
    case "StepDisplayed":
      // A new step starts a new reply; any figure belongs to the old one.
      return {
        ...base,
        currentStep: { number: event.payload.number, text: event.payload.text },
        visibleFigure: null,
      };
    case "ShowFigure":
      return {
        ...base,
        visibleFigure: {
          number: event.payload.number,
          mediaUrl: event.payload.media_url,
          caption: event.payload.caption,
        },
      };
    case "ConfidenceUpdate":
      return { ...base, confidenceList: event.payload.results.map(toConfidenceRow) };
    case "Refusal":
      return {
        ...base,
        warnings: [...base.warnings, { kind: "refusal", text: event.payload.text }],
      };
    case "VerbatimWarning": {
      const step = event.payload.step_number;
      const at = event.payload.first_divergence;
      const where = step === null ? "unknown step" : `step ${step}`;
      const position = at === null ? "" : ` diverges at word ${at}`;
      return {
        ...base,
        warnings: [...base.warnings, { kind: "verbatim", text: `${where}${position}` }],
      };
    }
  }
}

function toConfidenceRow(result: ConfidenceResult): ConfidenceRow {
  return { label: result.chunk_id, confidence: result.confidence };
}

export type ConfidenceBand = "high" | "mid" | "low";

// Bands mirror the answering gate: at or above the refusal threshold is
// answerable, 0.7 and up is a strong match.
export function confidenceBand(value: number): ConfidenceBand {
  if (value >= 0.7) return "high";
  if (value >= 0.35) return "mid";
  return "low";
}

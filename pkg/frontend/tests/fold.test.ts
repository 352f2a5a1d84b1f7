import { describe, expect, it } from "vitest";

import {
  applyAll,
  applyEvent,
  confidenceBand,
  initialState,
  noteGap,
  setConnection,
  ViewState,
} from "../src/fold";
import type { SessionEvent } from "../src/types";
import replay from "./fixtures/cpr-replay.json";

const REPLAY_EVENTS = replay.events as SessionEvent[];

function freshState(): ViewState {
  return initialState("test-session");
}

function stepEvent(seq: number, number: number, text: string): SessionEvent {
  return { kind: "StepDisplayed", seq, payload: { number, text } };
}

describe("recorded walkthrough replay", () => {
  it("renders the fourth step text and its figure", () => {
    const state = applyAll(freshState(), REPLAY_EVENTS);

    expect(state.currentStep).not.toBeNull();
    expect(state.currentStep!.number).toBe(replay.expected_step_number);
    expect(state.currentStep!.text).toBe(replay.expected_step_text);

    expect(state.visibleFigure).not.toBeNull();
    expect(state.visibleFigure!.number).toBe(replay.expected_figure_number);
    expect(state.visibleFigure!.mediaUrl).toBe(replay.expected_media_url);
    expect(state.visibleFigure!.caption).toBe("AED electrode placement on the patient's chest");

    expect(state.confidenceList.length).toBeGreaterThan(0);
    expect(state.confidenceList[0].label).toBe("iss-cpr:header");
    expect(state.warnings).toEqual([]);
    expect(state.lastSeq).toBe(3);
  });

  it("is deterministic: two independent folds agree", () => {
    const a = applyAll(freshState(), REPLAY_EVENTS);
    const b = applyAll(freshState(), REPLAY_EVENTS);
    expect(a).toEqual(b);
  });

  it("ignores a full overlapping replay after resume", () => {
    const state = applyAll(freshState(), REPLAY_EVENTS);
    // A resume that overlaps re-delivers already-applied seqs; every one
    // must be a no-op, returning the very same state object.
    expect(applyAll(state, REPLAY_EVENTS)).toBe(state);
  });

  it("resuming from a mid-stream seq applies only the tail", () => {
    const beforeDrop = applyAll(freshState(), REPLAY_EVENTS.slice(0, 2));
    // Server honoring Last-Event-ID: 2 sends only events with seq > 2.
    const resumed = applyAll(beforeDrop, REPLAY_EVENTS.slice(2));
    expect(resumed).toEqual(applyAll(freshState(), REPLAY_EVENTS));
  });
});

describe("seq ordering", () => {
  it("buffers out-of-order events until the gap fills", () => {
    const [e1, e2, e3] = REPLAY_EVENTS;
    const afterSkip = applyAll(freshState(), [e1, e3]);
    expect(afterSkip.lastSeq).toBe(1);
    expect(afterSkip.buffered.map((e) => e.seq)).toEqual([3]);
    expect(afterSkip.visibleFigure).toBeNull();

    const complete = applyEvent(afterSkip, e2);
    expect(complete.buffered).toEqual([]);
    expect(complete).toEqual(applyAll(freshState(), [e1, e2, e3]));
  });

  it("drops duplicate seqs delivered mid-stream", () => {
    const [e1, e2] = REPLAY_EVENTS;
    const once = applyAll(freshState(), [e1, e2]);
    expect(applyEvent(once, e2)).toBe(once);
  });

  it("accepts a seq jump only after a gap notice", () => {
    const late = stepEvent(50, 2, "RESTRAIN PATIENT:\nAttach patient restraints to CMRS.");
    const state = applyAll(freshState(), REPLAY_EVENTS);

    const withoutGap = applyEvent(state, late);
    expect(withoutGap.currentStep!.number).toBe(4);
    expect(withoutGap.buffered.map((e) => e.seq)).toEqual([50]);

    const withGap = applyEvent(noteGap(state, 46), late);
    expect(withGap.currentStep!.number).toBe(2);
    expect(withGap.lastSeq).toBe(50);
    expect(withGap.warnings).toContainEqual({ kind: "gap", text: "46 event(s) missed" });
  });
});

describe("event semantics", () => {
  it("a new step clears the previous reply's figure", () => {
    const state = applyAll(freshState(), REPLAY_EVENTS);
    expect(state.visibleFigure).not.toBeNull();

    const next = applyEvent(state, stepEvent(4, 5, "PERFORM CPR:\nBegin chest compressions."));
    expect(next.currentStep!.number).toBe(5);
    expect(next.visibleFigure).toBeNull();
  });

  it("a refusal banners without touching the step panel", () => {
    const state = applyAll(freshState(), REPLAY_EVENTS);
    const refused = applyEvent(state, {
      kind: "Refusal",
      seq: 4,
      payload: { text: "I can only answer questions about the provided procedures." },
    });
    expect(refused.currentStep).toEqual(state.currentStep);
    expect(refused.warnings).toContainEqual({
      kind: "refusal",
      text: "I can only answer questions about the provided procedures.",
    });
  });

  it("a verbatim warning reports the divergence position", () => {
    const warned = applyEvent(freshState(), {
      kind: "VerbatimWarning",
      seq: 1,
      payload: { step_number: 4, expected: "DEPLOY AED: ...", first_divergence: 7 },
    });
    expect(warned.warnings).toEqual([{ kind: "verbatim", text: "step 4 diverges at word 7" }]);
    expect(warned.currentStep).toBeNull();
  });

  it("confidence updates replace the whole list", () => {
    const state = applyAll(freshState(), REPLAY_EVENTS);
    const updated = applyEvent(state, {
      kind: "ConfidenceUpdate",
      seq: 4,
      payload: { results: [{ chunk_id: "iss-cpr:step-5", confidence: 0.9 }] },
    });
    expect(updated.confidenceList).toEqual([{ label: "iss-cpr:step-5", confidence: 0.9 }]);
  });
});

describe("connection state", () => {
  it("round-trips without disturbing applied events", () => {
    const state = applyAll(freshState(), REPLAY_EVENTS);
    const offline = setConnection(state, "Reconnecting");
    expect(offline.connection).toBe("Reconnecting");
    expect(offline.currentStep).toEqual(state.currentStep);
    expect(setConnection(offline, "Connected").connection).toBe("Connected");
    expect(setConnection(state, "Connected")).toBe(state);
  });
});

describe("confidence bands", () => {
  it("mirrors the gate thresholds", () => {
    expect(confidenceBand(0.7)).toBe("high");
    expect(confidenceBand(0.95)).toBe("high");
    expect(confidenceBand(0.699)).toBe("mid");
    expect(confidenceBand(0.35)).toBe("mid");
    expect(confidenceBand(0.349)).toBe("low");
    expect(confidenceBand(0)).toBe("low");
  });
});

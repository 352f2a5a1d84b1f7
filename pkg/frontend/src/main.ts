// Bootstrap: one session, one event stream, one fold.  All server state
// arrives through events; POST responses only steer side lookups (graph
// links for the procedure the reply came from).

import { ApiError, createSession, graphNeighbors, submitQuery } from "./api.js";
import { applyEvent, initialState, noteGap, setConnection, ViewState } from "./fold.js";
import { EventStream } from "./sse.js";
import { findPanels, render, renderGraphLinks } from "./view.js";

async function boot(): Promise<void> {
  const panels = findPanels(document);
  const form = document.getElementById("query-form") as HTMLFormElement;
  const input = document.getElementById("query-input") as HTMLInputElement;
  const pending = document.getElementById("pending") as HTMLElement;
  const toast = document.getElementById("toast") as HTMLElement;
  const graphLinks = document.getElementById("graph-links") as HTMLElement;

  const { session_id: sessionId } = await createSession();
  let state: ViewState = initialState(sessionId);
  let queued: string[] = [];

  const update = (next: ViewState): void => {
    if (next === state) return;
    if (next.lastSeq > state.lastSeq) pending.hidden = true;
    state = next;
    render(state, panels);
  };

  const stream = new EventStream(sessionId, {
    onEvent: (event) => update(applyEvent(state, event)),
    onGap: (missed) => update(noteGap(state, missed)),
    onConnection: (connected) => {
      update(setConnection(state, connected ? "Connected" : "Reconnecting"));
      if (connected) void flushQueued();
    },
  });
  stream.connect(state.lastSeq);

  const showToast = (message: string, retriable: boolean): void => {
    toast.textContent = retriable ? `${message} (retriable)` : message;
    toast.hidden = false;
    setTimeout(() => {
      toast.hidden = true;
    }, 4000);
  };

  const send = async (text: string): Promise<void> => {
    pending.hidden = false;
    try {
      const result = await submitQuery(sessionId, text);
      if (result.procedure_id) void showNeighbors(result.procedure_id);
    } catch (err) {
      pending.hidden = true;
      if (err instanceof ApiError) showToast(err.message, err.retriable);
      else showToast(String(err), false);
    }
  };

  const flushQueued = async (): Promise<void> => {
    const batch = queued;
    queued = [];
    for (const text of batch) await send(text);
  };

  const showNeighbors = async (procedureId: string): Promise<void> => {
    try {
      const result = await graphNeighbors(`procedure-doc:${procedureId}`);
      renderGraphLinks(graphLinks, result.neighbors);
    } catch {
      graphLinks.replaceChildren();
    }
  };

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const text = input.value.trim();
    if (!text) {
      input.setCustomValidity("Enter a question first.");
      input.reportValidity();
      return;
    }
    input.setCustomValidity("");
    input.value = "";
    if (state.connection === "Reconnecting") {
      queued.push(text);
      return;
    }
    void send(text);
  });

  render(state, panels);
}

void boot();

// DOM rendering.  render() is a function of ViewState alone: it rebuilds
// the dynamic regions on every call, so state and screen cannot drift.

import { confidenceBand, ViewState } from "./fold.js";
import type { GraphNeighbor } from "./types.js";

export interface Panels {
  connection: HTMLElement;
  stepNumber: HTMLElement;
  stepText: HTMLElement;
  figurePanel: HTMLElement;
  figureImage: HTMLImageElement;
  figureCaption: HTMLElement;
  confidenceList: HTMLElement;
  warnings: HTMLElement;
}

export function findPanels(root: Document): Panels {
  const byId = (id: string): HTMLElement => {
    const el = root.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el;
  };
  return {
    connection: byId("connection"),
    stepNumber: byId("step-number"),
    stepText: byId("step-text"),
    figurePanel: byId("figure-panel"),
    figureImage: byId("figure-image") as HTMLImageElement,
    figureCaption: byId("figure-caption"),
    confidenceList: byId("confidence-list"),
    warnings: byId("warnings"),
  };
}

export function render(state: ViewState, panels: Panels): void {
  panels.connection.textContent = state.connection;
  panels.connection.className = `badge ${state.connection === "Connected" ? "ok" : "warn"}`;

  if (state.currentStep) {
    panels.stepNumber.textContent = `Step ${state.currentStep.number}`;
    panels.stepText.textContent = state.currentStep.text;
  } else {
    panels.stepNumber.textContent = "";
    panels.stepText.textContent = "Ask about a procedure step to begin.";
  }

  if (state.visibleFigure) {
    panels.figurePanel.hidden = false;
    panels.figureImage.src = state.visibleFigure.mediaUrl;
    panels.figureImage.alt = state.visibleFigure.caption;
    panels.figureCaption.textContent = `Figure ${state.visibleFigure.number}: ${state.visibleFigure.caption}`;
  } else {
    panels.figurePanel.hidden = true;
    panels.figureImage.removeAttribute("src");
    panels.figureCaption.textContent = "";
  }

  panels.confidenceList.replaceChildren(
    ...state.confidenceList.map((row) => {
      const li = document.createElement("li");
      const label = document.createElement("span");
      label.className = "chunk-label";
      label.textContent = row.label;
      const value = document.createElement("span");
      value.className = `badge ${confidenceBand(row.confidence)}`;
      value.textContent = row.confidence.toFixed(3);
      li.append(label, value);
      return li;
    }),
  );

  panels.warnings.replaceChildren(
    ...state.warnings.map((warning) => {
      const li = document.createElement("li");
      li.className = `warning ${warning.kind}`;
      li.textContent = warning.text;
      return li;
    }),
  );
}

export function renderGraphLinks(target: HTMLElement, neighbors: GraphNeighbor[]): void {
  target.replaceChildren(
    ...neighbors.map((node) => {
      const li = document.createElement("li");
      const kind = document.createElement("span");
      kind.className = "badge mid";
      kind.textContent = node.kind;
      const text = document.createElement("span");
      text.textContent =
        node.attributes.length > 0
          ? node.attributes.map(([k, v]) => `${k}: ${v}`).join("; ")
          : node.id;
      li.append(kind, text);
      return li;
    }),
  );
}

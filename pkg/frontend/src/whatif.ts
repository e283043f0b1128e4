/**
 * What-if analysis: click a point, get its seven features and predicted
 * customers, keep a session history, pin interesting probes into the
 * comparison tray. The explore -> compare -> probe-again loop.
 */

import type { AnalyzeResult } from "./api.js";
import { FEATURE_NAMES } from "./api.js";
import { featureLabel, verbatim } from "./format.js";
import type { CompareEntry } from "./state.js";

export function whatIfId(result: AnalyzeResult): string {
  return `whatif:${result.lat},${result.lng}`;
}

export function toCompareEntry(result: AnalyzeResult): CompareEntry {
  return {
    id: whatIfId(result),
    label: `what-if ${verbatim(result.lat)}, ${verbatim(result.lng)}`,
    features: result.features,
    predicted_customers: result.predicted_customers,
  };
}

export function renderWhatIfCard(
  host: HTMLElement,
  result: AnalyzeResult,
  onPin?: (entry: CompareEntry) => void,
): HTMLElement {
  const card = document.createElement("div");
  card.className = "whatif-card";

  const title = document.createElement("h3");
  title.textContent = `What-if at ${verbatim(result.lat)}, ${verbatim(result.lng)}`;
  card.appendChild(title);

  const prediction = document.createElement("p");
  prediction.className = "prediction";
  const label = document.createElement("span");
  label.textContent = "Predicted customers: ";
  const value = document.createElement("strong");
  value.dataset.field = "predicted_customers";
  value.textContent = verbatim(result.predicted_customers);
  prediction.append(label, value);
  card.appendChild(prediction);

  const list = document.createElement("dl");
  list.className = "factor-list";
  for (const name of FEATURE_NAMES) {
    const row = document.createElement("div");
    row.className = "factor-row";
    const dt = document.createElement("dt");
    dt.textContent = featureLabel(name);
    const dd = document.createElement("dd");
    dd.dataset.field = name;
    dd.textContent = verbatim(result.features[name]);
    row.append(dt, dd);
    list.appendChild(row);
  }
  card.appendChild(list);

  if (onPin) {
    const pin = document.createElement("button");
    pin.type = "button";
    pin.className = "pin-button";
    pin.textContent = "pin to comparison";
    pin.addEventListener("click", () => onPin(toCompareEntry(result)));
    card.appendChild(pin);
  }

  host.prepend(card); // newest probe first in the session history
  return card;
}

export function renderWhatIfError(host: HTMLElement, message: string): HTMLElement {
  const note = document.createElement("p");
  note.className = "whatif-error";
  note.setAttribute("role", "alert");
  note.textContent = message;
  host.prepend(note);
  return note;
}

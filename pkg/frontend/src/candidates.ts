/**
 * Ranked candidate markers and the per-location factor panel. The panel is
 * fed entirely by the FeatureSet embedded in the ranking response.
 */

import type { RankedCandidate } from "./api.js";
import { FEATURE_NAMES } from "./api.js";
import { featureLabel, verbatim } from "./format.js";
import type { MapView } from "./map.js";

export function candidateId(c: RankedCandidate): string {
  return `cand:${c.center.lat},${c.center.lng}`;
}

export function renderCandidates(
  map: MapView,
  candidates: RankedCandidate[],
  panelHost: HTMLElement,
  onPin?: (c: RankedCandidate) => void,
): HTMLElement[] {
  const layer = map.layer("markers");
  layer.replaceChildren();
  const markers: HTMLElement[] = [];
  for (const candidate of candidates) {
    const marker = document.createElement("button");
    marker.type = "button";
    marker.className = "candidate-marker";
    marker.textContent = verbatim(candidate.rank);
    marker.dataset.rank = verbatim(candidate.rank);
    const { x, y } = map.project(candidate.center);
    marker.style.position = "absolute";
    marker.style.left = `${x - 12}px`;
    marker.style.top = `${y - 12}px`;
    marker.addEventListener("click", (event) => {
      event.stopPropagation();
      renderFactorPanel(panelHost, candidate, onPin);
    });
    layer.appendChild(marker);
    markers.push(marker);
  }
  return markers;
}

export function renderEmptyCandidates(map: MapView, panelHost: HTMLElement, reason: string): void {
  map.clearLayer("markers");
  panelHost.replaceChildren();
  const empty = document.createElement("div");
  empty.className = "empty-notice";
  empty.textContent = `no candidate locations: ${reason}`;
  panelHost.appendChild(empty);
}

export function renderFactorPanel(
  host: HTMLElement,
  candidate: RankedCandidate,
  onPin?: (c: RankedCandidate) => void,
): void {
  host.replaceChildren();
  const panel = document.createElement("div");
  panel.className = "factor-panel";

  const title = document.createElement("h3");
  title.textContent = `Candidate #${verbatim(candidate.rank)}`;
  panel.appendChild(title);

  const coords = document.createElement("p");
  coords.className = "coords";
  coords.textContent = `${verbatim(candidate.center.lat)}, ${verbatim(candidate.center.lng)}`;
  panel.appendChild(coords);

  const list = document.createElement("dl");
  list.className = "factor-list";
  const prediction = document.createElement("div");
  prediction.className = "factor-row factor-prediction";
  prediction.innerHTML = "";
  const pdt = document.createElement("dt");
  pdt.textContent = "Predicted customers";
  const pdd = document.createElement("dd");
  pdd.dataset.field = "predicted_customers";
  pdd.textContent = verbatim(candidate.predicted_customers);
  prediction.append(pdt, pdd);
  list.appendChild(prediction);
  for (const name of FEATURE_NAMES) {
    const row = document.createElement("div");
    row.className = "factor-row";
    const dt = document.createElement("dt");
    dt.textContent = featureLabel(name);
    const dd = document.createElement("dd");
    dd.dataset.field = name;
    dd.textContent = verbatim(candidate.features[name]);
    row.append(dt, dd);
    list.appendChild(row);
  }
  panel.appendChild(list);

  if (onPin) {
    const pin = document.createElement("button");
    pin.type = "button";
    pin.className = "pin-button";
    pin.textContent = "add to comparison";
    pin.addEventListener("click", () => onPin(candidate));
    panel.appendChild(pin);
  }
  host.appendChild(panel);
}

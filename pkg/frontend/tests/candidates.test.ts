import { beforeEach, describe, expect, it } from "vitest";

import type { RankedCandidate } from "../src/api.js";
import { FEATURE_NAMES } from "../src/api.js";
import { renderCandidates, renderEmptyCandidates } from "../src/candidates.js";
import { MapView } from "../src/map.js";
import { fixture } from "./helpers.js";

let map: MapView;
let panel: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="map"></div><div id="panel"></div>';
  map = new MapView(document.getElementById("map")!, { width: 800, height: 560 });
  map.fitBounds({ lat: 39.8, lng: 116.25 }, { lat: 40.05, lng: 116.55 });
  panel = document.getElementById("panel")!;
});

describe("renderCandidates", () => {
  it("labels markers 1..n by rank", () => {
    const rows = fixture<RankedCandidate[]>("ranking.json");
    expect(rows.length).toBe(3);
    renderCandidates(map, rows, panel);
    const labels = [...document.querySelectorAll(".candidate-marker")].map((m) => m.textContent);
    expect(labels).toEqual(["1", "2", "3"]);
  });

  it("marker click opens the factor panel with exact API values", () => {
    const rows = fixture<RankedCandidate[]>("ranking.json");
    const markers = renderCandidates(map, rows, panel);
    markers[1].click();
    const panelValues: Record<string, string> = {};
    panel.querySelectorAll<HTMLElement>("dd[data-field]").forEach((dd) => {
      panelValues[dd.dataset.field!] = dd.textContent ?? "";
    });
    expect(panelValues.predicted_customers).toBe(String(rows[1].predicted_customers));
    for (const name of FEATURE_NAMES) {
      expect(panelValues[name]).toBe(String(rows[1].features[name]));
    }
  });

  it("re-rendering the same response yields identical markup", () => {
    const rows = fixture<RankedCandidate[]>("ranking.json");
    renderCandidates(map, rows, panel);
    const first = map.layer("markers").innerHTML;
    renderCandidates(map, rows, panel);
    expect(map.layer("markers").innerHTML).toBe(first);
  });

  it("empty-demand state explains itself", () => {
    renderEmptyCandidates(map, panel, "no candidates to rank: no-gap");
    expect(panel.textContent).toMatch(/no candidate locations/);
    expect(document.querySelectorAll(".candidate-marker").length).toBe(0);
  });

  it("pin callback receives the clicked candidate", () => {
    const rows = fixture<RankedCandidate[]>("ranking.json");
    let pinned: RankedCandidate | null = null;
    const markers = renderCandidates(map, rows, panel, (c) => {
      pinned = c;
    });
    markers[0].click();
    (panel.querySelector(".pin-button") as HTMLElement).click();
    expect(pinned).not.toBeNull();
    expect(pinned!.rank).toBe(rows[0].rank);
  });
});

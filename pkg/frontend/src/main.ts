/**
 * App wiring: URL-driven view state, one in-flight request per view with
 * cancellation on supersession, layer switching, and the what-if loop.
 */

import { ApiClient, ApiError, type RankedCandidate } from "./api.js";
import { renderCandidates, renderEmptyCandidates, candidateId } from "./candidates.js";
import { renderComparison } from "./compare.js";
import { renderHeatmap } from "./heatmap.js";
import { MapView } from "./map.js";
import { MAX_COMPARE, ViewState } from "./state.js";
import { showToast } from "./toast.js";
import { renderWhatIfCard, renderWhatIfError } from "./whatif.js";
import { verbatim } from "./format.js";

const DEFAULT_CELL_M = 500;

interface AppElements {
  map: HTMLElement;
  legend: HTMLElement;
  panel: HTMLElement;
  history: HTMLElement;
  compare: HTMLElement;
  targetSelect: HTMLSelectElement;
  layerButtons: HTMLElement;
}

export class App {
  readonly state: ViewState;
  readonly map: MapView;
  lastCandidates: RankedCandidate[] = [];
  private inflight = new Map<string, AbortController>();

  constructor(
    private api: ApiClient,
    private el: AppElements,
    initialQuery: string = typeof location !== "undefined" ? location.hash.slice(1) : "",
  ) {
    this.state = ViewState.fromQuery(initialQuery);
    this.map = new MapView(el.map, { width: 800, height: 560 });
    this.map.onClick((p) => void this.whatIf(p.lat, p.lng));
  }

  private supersede(view: string): AbortSignal {
    this.inflight.get(view)?.abort();
    const controller = new AbortController();
    this.inflight.set(view, controller);
    return controller.signal;
  }

  private syncUrl(): void {
    if (typeof history !== "undefined" && typeof location !== "undefined") {
      history.replaceState(null, "", `#${this.state.toQuery()}`);
    }
  }

  async start(): Promise<void> {
    const categories = await this.api.getCategories();
    this.el.targetSelect.replaceChildren();
    for (const row of categories) {
      const option = document.createElement("option");
      option.value = row.category;
      option.textContent = `${row.category} (${verbatim(row.poi_count)})`;
      this.el.targetSelect.appendChild(option);
    }
    if (!this.state.target.name && categories.length > 0) {
      this.state.target = { kind: "category", name: categories[0].category };
    }
    this.el.targetSelect.value = this.state.target.name;
    this.el.targetSelect.addEventListener("change", () => {
      this.state.target = { kind: "category", name: this.el.targetSelect.value };
      void this.refreshLayer();
    });
    this.el.layerButtons.querySelectorAll("button[data-layer]").forEach((button) => {
      button.addEventListener("click", () => {
        const layer = (button as HTMLElement).dataset.layer;
        if (layer === "heatmap" || layer === "centers" || layer === "stores") {
          this.state.layer = layer;
          void this.refreshLayer();
        }
      });
    });
    renderComparison(this.el.compare, this.state.compare);
    await this.refreshLayer();
  }

  async refreshLayer(): Promise<void> {
    this.syncUrl();
    if (this.state.layer === "heatmap") {
      await this.showHeatmap();
    } else {
      await this.showCandidates();
    }
  }

  async showHeatmap(): Promise<void> {
    const signal = this.supersede("layer");
    try {
      const cells = await this.api.getHeatmap(this.state.target, DEFAULT_CELL_M, signal);
      if (cells.length > 0) {
        const lats = cells.map((c) => c.lat);
        const lngs = cells.map((c) => c.lng);
        this.map.fitBounds(
          { lat: Math.min(...lats), lng: Math.min(...lngs) },
          { lat: Math.max(...lats), lng: Math.max(...lngs) },
        );
      }
      this.map.clearLayer("markers");
      renderHeatmap(this.map, cells, DEFAULT_CELL_M, this.el.legend);
    } catch (error) {
      if ((error as Error).name === "AbortError") return;
      showToast(`heatmap unavailable: ${(error as Error).message}`);
    }
  }

  async showCandidates(): Promise<void> {
    const signal = this.supersede("layer");
    try {
      const rows = await this.api.rank(
        this.state.target,
        { kind: this.state.modelKind, seed: this.state.seed },
        this.state.k,
        this.state.seed,
        signal,
      );
      this.lastCandidates = rows;
      if (rows.length > 0) {
        const lats = rows.map((c) => c.center.lat);
        const lngs = rows.map((c) => c.center.lng);
        this.map.fitBounds(
          { lat: Math.min(...lats), lng: Math.min(...lngs) },
          { lat: Math.max(...lats), lng: Math.max(...lngs) },
        );
      }
      this.map.clearLayer("heat");
      renderCandidates(this.map, rows, this.el.panel, (candidate) => this.pinCandidate(candidate));
    } catch (error) {
      if ((error as Error).name === "AbortError") return;
      if (error instanceof ApiError && error.status === 409) {
        renderEmptyCandidates(this.map, this.el.panel, error.detail);
        return;
      }
      showToast(`ranking unavailable: ${(error as Error).message}`);
    }
  }

  async whatIf(lat: number, lng: number): Promise<void> {
    const signal = this.supersede("whatif");
    try {
      const result = await this.api.analyze(lat, lng, this.state.target, signal);
      this.state.lastWhatIf = result;
      renderWhatIfCard(this.el.history, result, (entry) => {
        if (!this.state.addToCompare(entry)) {
          showToast(`comparison holds at most ${MAX_COMPARE} locations`);
          return;
        }
        renderComparison(this.el.compare, this.state.compare);
      });
    } catch (error) {
      if ((error as Error).name === "AbortError") return;
      if (error instanceof ApiError && error.status === 400) {
        renderWhatIfError(this.el.history, error.detail);
        return;
      }
      showToast(`analysis unavailable: ${(error as Error).message}`);
    }
  }

  pinCandidate(candidate: RankedCandidate): void {
    const added = this.state.addToCompare({
      id: candidateId(candidate),
      label: `candidate #${verbatim(candidate.rank)}`,
      features: candidate.features,
      predicted_customers: candidate.predicted_customers,
    });
    if (!added) {
      showToast(`comparison holds at most ${MAX_COMPARE} locations`);
      return;
    }
    renderComparison(this.el.compare, this.state.compare);
  }
}

export function mount(baseUrl: string, root: Document = document): App {
  const el: AppElements = {
    map: root.getElementById("map")!,
    legend: root.getElementById("legend")!,
    panel: root.getElementById("panel")!,
    history: root.getElementById("history")!,
    compare: root.getElementById("compare")!,
    targetSelect: root.getElementById("target") as HTMLSelectElement,
    layerButtons: root.getElementById("layers")!,
  };
  const app = new App(new ApiClient(baseUrl), el);
  void app.start();
  return app;
}

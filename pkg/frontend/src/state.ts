/**
 * View state with deep-linkable URL serialization. Every view is
 * reproducible from (target, model spec, seed); the comparison tray holds at
 * most four candidates.
 */

import type { AnalyzeResult, FeatureSet, TargetRef } from "./api.js";

export type LayerName = "heatmap" | "centers" | "stores";

export const MAX_COMPARE = 4;

export interface CompareEntry {
  id: string;
  label: string;
  features: FeatureSet;
  predicted_customers: number;
}

export class ViewState {
  target: TargetRef = { kind: "category", name: "" };
  layer: LayerName = "heatmap";
  modelKind = "rf";
  seed = 0;
  k = 10;
  compare: CompareEntry[] = [];
  lastWhatIf: AnalyzeResult | null = null;

  addToCompare(entry: CompareEntry): boolean {
    if (this.compare.length >= MAX_COMPARE) return false;
    if (this.compare.some((e) => e.id === entry.id)) return false;
    this.compare.push(entry);
    return true;
  }

  removeFromCompare(id: string): void {
    this.compare = this.compare.filter((e) => e.id !== id);
  }

  toQuery(): string {
    const params = new URLSearchParams();
    if (this.target.name) {
      params.set("kind", this.target.kind);
      params.set("target", this.target.name);
    }
    params.set("layer", this.layer);
    params.set("model", this.modelKind);
    params.set("seed", String(this.seed));
    params.set("k", String(this.k));
    return params.toString();
  }

  static fromQuery(query: string): ViewState {
    const params = new URLSearchParams(query);
    const state = new ViewState();
    const name = params.get("target");
    const kind = params.get("kind");
    if (name) {
      state.target = { kind: kind === "brand" ? "brand" : "category", name };
    }
    const layer = params.get("layer");
    if (layer === "heatmap" || layer === "centers" || layer === "stores") {
      state.layer = layer;
    }
    state.modelKind = params.get("model") ?? "rf";
    const seed = Number(params.get("seed"));
    if (Number.isFinite(seed)) state.seed = seed;
    const k = Number(params.get("k"));
    if (Number.isFinite(k) && k >= 1) state.k = k;
    return state;
  }
}

/**
 * Typed client for the placement service. The UI never recomputes domain
 * math; everything rendered comes verbatim from these responses.
 */

export interface FeatureSet {
  dist_center_m: number;
  traffic_stations: number;
  poi_density: number;
  area_cat_popularity: number;
  competition: number;
  area_popularity: number;
  estate_price: number;
}

export const FEATURE_NAMES: (keyof FeatureSet)[] = [
  "dist_center_m",
  "traffic_stations",
  "poi_density",
  "area_cat_popularity",
  "competition",
  "area_popularity",
  "estate_price",
];

export interface HeatCell {
  lat: number;
  lng: number;
  demand_count: number;
}

export interface CategoryRow {
  category: string;
  poi_count: number;
  brands: string[];
}

export interface RankedCandidate {
  center: { lat: number; lng: number };
  predicted_customers: number;
  features: FeatureSet;
  rank: number;
}

export interface DemandCenter {
  lat: number;
  lng: number;
  member_count: number;
  weight: number;
}

export interface AnalyzeResult {
  lat: number;
  lng: number;
  target: string;
  features: FeatureSet;
  predicted_customers: number;
}

export interface TargetRef {
  kind: "category" | "brand";
  name: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  getCategories(signal?: AbortSignal): Promise<CategoryRow[]> {
    return this.request("/api/categories", { signal });
  }

  getHeatmap(target: TargetRef, cellM: number, signal?: AbortSignal): Promise<HeatCell[]> {
    const params = new URLSearchParams({
      target: target.name,
      kind: target.kind,
      cell_m: String(cellM),
    });
    return this.request(`/api/heatmap?${params}`, { signal });
  }

  getDemandCenters(target: TargetRef, seed: number, signal?: AbortSignal): Promise<DemandCenter[]> {
    return this.request("/api/demand-centers", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ target, seed }),
      signal,
    });
  }

  rank(
    target: TargetRef,
    modelSpec: Record<string, unknown>,
    k: number,
    seed: number,
    signal?: AbortSignal,
  ): Promise<RankedCandidate[]> {
    return this.request("/api/rank", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ target, model_spec: modelSpec, k, seed }),
      signal,
    });
  }

  analyze(lat: number, lng: number, target: TargetRef, signal?: AbortSignal): Promise<AnalyzeResult> {
    const params = new URLSearchParams({
      lat: String(lat),
      lng: String(lng),
      target: target.name,
      kind: target.kind,
    });
    return this.request(`/api/analyze?${params}`, { signal });
  }
}

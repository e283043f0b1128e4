/**
 * Verbatim rendering: a number from an API response is displayed exactly as
 * its JSON value stringifies, never reformatted or recomputed, so every digit
 * on screen can be traced back to a response body.
 */

export function verbatim(value: number | string): string {
  return typeof value === "number" ? String(value) : value;
}

/** Collect the verbatim strings of every number in a parsed JSON document. */
export function collectNumbers(doc: unknown, out: Set<string> = new Set()): Set<string> {
  if (typeof doc === "number") {
    out.add(String(doc));
  } else if (Array.isArray(doc)) {
    for (const item of doc) collectNumbers(item, out);
  } else if (doc !== null && typeof doc === "object") {
    for (const value of Object.values(doc)) collectNumbers(value, out);
  }
  return out;
}

const FEATURE_LABELS: Record<string, string> = {
  dist_center_m: "Distance to city center (m)",
  traffic_stations: "Transport stations in 1 km",
  poi_density: "POIs in 1 km",
  area_cat_popularity: "Area-category popularity",
  competition: "Competition share",
  area_popularity: "Area popularity (visits)",
  estate_price: "Estate price (nearest 5)",
};

export function featureLabel(name: string): string {
  return FEATURE_LABELS[name] ?? name;
}

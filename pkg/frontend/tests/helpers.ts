/** Shared test plumbing: captured fixtures and a fixture-backed fetch. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function fixtureText(name: string): string {
  return readFileSync(join(FIXTURES, name), "utf-8");
}

export function fixture<T>(name: string): T {
  return JSON.parse(fixtureText(name)) as T;
}

export interface Route {
  match: (path: string, init?: RequestInit) => boolean;
  status?: number;
  body: string;
}

/** A fetch look-alike serving captured responses; records every request. */
export function fixtureFetch(routes: Route[]) {
  const calls: { path: string; init?: RequestInit }[] = [];
  const fn = async (input: string, init?: RequestInit): Promise<Response> => {
    calls.push({ path: input, init });
    for (const route of routes) {
      if (route.match(input, init)) {
        return new Response(route.body, {
          status: route.status ?? 200,
          headers: { "content-type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ detail: `no fixture for ${input}` }), { status: 404 });
  };
  return { fn, calls };
}

export function textOf(el: Element | null): string {
  return el?.textContent ?? "";
}

/** All rendered domain numbers: features, predictions, ranks, heat cells. */
export function renderedValues(root: Element): string[] {
  const out: string[] = [];
  root
    .querySelectorAll("[data-field], [data-count], [data-rank], .compare-value, .legend-max")
    .forEach((el) => {
      const text = (el as HTMLElement).dataset?.count ?? el.textContent ?? "";
      if (text.trim()) out.push(text.trim());
    });
  return out;
}

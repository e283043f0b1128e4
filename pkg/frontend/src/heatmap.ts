/**
 * Demand heatmap layer: one element per API cell, opacity scaled to the
 * maximum cell count, which is also the legend's top label.
 */

import type { HeatCell } from "./api.js";
import { verbatim } from "./format.js";
import type { MapView } from "./map.js";

export interface HeatmapRender {
  cellCount: number;
  maxCount: number;
}

export function renderHeatmap(
  map: MapView,
  cells: HeatCell[],
  cellM: number,
  legendHost: HTMLElement,
): HeatmapRender {
  const layer = map.layer("heat");
  layer.replaceChildren();
  legendHost.replaceChildren();

  if (cells.length === 0) {
    const notice = document.createElement("div");
    notice.className = "empty-notice";
    notice.textContent = "no demand for this target";
    layer.appendChild(notice);
    return { cellCount: 0, maxCount: 0 };
  }

  const maxCount = Math.max(...cells.map((c) => c.demand_count));
  const sizePx = map.metersToPx(cellM);
  for (const cell of cells) {
    const el = document.createElement("div");
    el.className = "heat-cell";
    const { x, y } = map.project(cell);
    el.style.position = "absolute";
    el.style.left = `${x - sizePx / 2}px`;
    el.style.top = `${y - sizePx / 2}px`;
    el.style.width = `${sizePx}px`;
    el.style.height = `${sizePx}px`;
    el.style.background = "#d73027";
    el.style.opacity = String(0.15 + 0.85 * (cell.demand_count / maxCount));
    el.dataset.count = verbatim(cell.demand_count);
    el.title = `${verbatim(cell.demand_count)} demand points`;
    layer.appendChild(el);
  }

  const legend = document.createElement("div");
  legend.className = "heat-legend";
  const top = document.createElement("span");
  top.className = "legend-max";
  top.textContent = verbatim(maxCount);
  const zero = document.createElement("span");
  zero.className = "legend-min";
  zero.textContent = "0";
  legend.append(zero, document.createTextNode(" – "), top);
  legendHost.appendChild(legend);
  return { cellCount: cells.length, maxCount };
}

/**
 * Side-by-side candidate comparison: a table of the seven features plus the
 * predicted customers, normalized bars per row (presentation only; the
 * displayed numbers are verbatim API values), and CSV export.
 */

import { FEATURE_NAMES } from "./api.js";
import { featureLabel, verbatim } from "./format.js";
import type { CompareEntry } from "./state.js";

const ROWS: { key: string; pick: (e: CompareEntry) => number }[] = [
  { key: "predicted_customers", pick: (e) => e.predicted_customers },
  ...FEATURE_NAMES.map((name) => ({
    key: name as string,
    pick: (e: CompareEntry) => e.features[name],
  })),
];

export function renderComparison(host: HTMLElement, entries: CompareEntry[]): void {
  host.replaceChildren();
  if (entries.length < 2) {
    const hint = document.createElement("p");
    hint.className = "compare-hint";
    hint.textContent = "pin at least two locations to compare";
    const button = document.createElement("button");
    button.type = "button";
    button.className = "export-csv";
    button.disabled = true;
    button.textContent = "export CSV";
    host.append(hint, button);
    return;
  }

  const table = document.createElement("table");
  table.className = "compare-table";
  const head = document.createElement("tr");
  head.appendChild(document.createElement("th"));
  for (const entry of entries) {
    const th = document.createElement("th");
    th.textContent = entry.label;
    head.appendChild(th);
  }
  table.appendChild(head);

  for (const row of ROWS) {
    const tr = document.createElement("tr");
    tr.dataset.row = row.key;
    const th = document.createElement("th");
    th.textContent = featureLabel(row.key) || row.key;
    tr.appendChild(th);
    const values = entries.map(row.pick);
    const rowMax = Math.max(...values.map((v) => Math.abs(v)), 0);
    for (const value of values) {
      const td = document.createElement("td");
      const bar = document.createElement("div");
      bar.className = "compare-bar";
      const fraction = rowMax > 0 ? Math.abs(value) / rowMax : 0;
      bar.style.width = `${Math.round(100 * fraction)}%`;
      const text = document.createElement("span");
      text.className = "compare-value";
      text.textContent = verbatim(value);
      td.append(bar, text);
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  host.appendChild(table);

  const button = document.createElement("button");
  button.type = "button";
  button.className = "export-csv";
  button.textContent = "export CSV";
  button.addEventListener("click", () => {
    const blob = new Blob([comparisonCsv(entries)], { type: "text/csv" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "comparison.csv";
    link.click();
    URL.revokeObjectURL(link.href);
  });
  host.appendChild(button);
}

function escapeCell(cell: string): string {
  if (/[",\n]/.test(cell)) {
    return `"${cell.replace(/"/g, '""')}"`;
  }
  return cell;
}

export function comparisonCsv(entries: CompareEntry[]): string {
  const lines: string[] = [];
  lines.push(["metric", ...entries.map((e) => escapeCell(e.label))].join(","));
  for (const row of ROWS) {
    lines.push([row.key, ...entries.map((e) => verbatim(row.pick(e)))].join(","));
  }
  return lines.join("\n") + "\n";
}

export function parseCsv(text: string): string[][] {
  const rows: string[][] = [];
  let row: string[] = [];
  let cell = "";
  let inQuotes = false;
  for (let i = 0; i < text.length; i++) {
    const ch = text[i];
    if (inQuotes) {
      if (ch === '"' && text[i + 1] === '"') {
        cell += '"';
        i++;
      } else if (ch === '"') {
        inQuotes = false;
      } else {
        cell += ch;
      }
    } else if (ch === '"') {
      inQuotes = true;
    } else if (ch === ",") {
      row.push(cell);
      cell = "";
    } else if (ch === "\n") {
      row.push(cell);
      rows.push(row);
      row = [];
      cell = "";
    } else {
      cell += ch;
    }
  }
  if (cell.length > 0 || row.length > 0) {
    row.push(cell);
    rows.push(row);
  }
  return rows;
}

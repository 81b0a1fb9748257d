/**
 * Before/after histogram and improvement brackets from the compare
 * payload. Counts are rendered exactly as received; bar heights scale
 * pixels off the largest count, which is presentation only.
 */

import type { CompareHistogram, ComparePayload, FieldComparison } from "./types.js";

const BAR_AREA_PX = 120;

function barColumn(count: number, maxCount: number, cls: string): HTMLElement {
  const bar = document.createElement("div");
  bar.className = `bar ${cls}`;
  const h = maxCount > 0 ? Math.round((count / maxCount) * BAR_AREA_PX) : 0;
  bar.style.height = `${h}px`;
  bar.dataset.count = String(count);
  bar.title = String(count);
  return bar;
}

export function renderHistogram(container: HTMLElement, hist: CompareHistogram): void {
  container.replaceChildren();
  const maxCount = Math.max(1, ...hist.before_counts, ...hist.after_counts);
  const chart = document.createElement("div");
  chart.className = "histogram";
  for (let i = 0; i < hist.before_counts.length; i++) {
    const group = document.createElement("div");
    group.className = "bin";
    group.appendChild(barColumn(hist.before_counts[i], maxCount, "before"));
    group.appendChild(barColumn(hist.after_counts[i], maxCount, "after"));
    const label = document.createElement("span");
    label.className = "bin-count v";
    label.textContent = `${hist.before_counts[i]}/${hist.after_counts[i]}`;
    group.appendChild(label);
    chart.appendChild(group);
  }
  container.appendChild(chart);
  const note = document.createElement("p");
  note.className = "hist-note";
  const bu = document.createElement("span");
  bu.className = "v";
  bu.textContent = String(hist.before_unreachable);
  const au = document.createElement("span");
  au.className = "v";
  au.textContent = String(hist.after_unreachable);
  note.append("unreachable before ", bu, ", after ", au);
  container.appendChild(note);
}

/** Ten improvement brackets; counts come straight from the payload. */
export function renderBrackets(container: HTMLElement, fields: FieldComparison): void {
  container.replaceChildren();
  const table = document.createElement("table");
  table.className = "brackets";
  const head = table.insertRow();
  head.insertCell().textContent = "reduction %";
  head.insertCell().textContent = "cells";
  for (const [bracket, count] of Object.entries(fields.brackets)) {
    const row = table.insertRow();
    row.insertCell().textContent = bracket;
    const cell = row.insertCell();
    cell.className = "v";
    cell.dataset.bracket = bracket;
    cell.textContent = String(count);
  }
  container.appendChild(table);
  const totals = document.createElement("p");
  totals.className = "bracket-totals";
  for (const [name, value] of [
    ["improved", fields.improved],
    ["degraded", fields.degraded],
    ["unchanged", fields.unchanged],
  ] as [string, number][]) {
    const span = document.createElement("span");
    span.className = "v";
    span.dataset.stat = name;
    span.textContent = String(value);
    totals.append(`${name} `, span, "  ");
  }
  container.appendChild(totals);
}

/** Headline numbers for a finished optimization, all payload strings. */
export function renderObjectives(container: HTMLElement, payload: ComparePayload): void {
  container.replaceChildren();
  const dl = document.createElement("dl");
  dl.className = "objectives";
  const rows: [string, string][] = [["objective after", payload.objective]];
  if (payload.before) rows.unshift(["objective before", payload.before.objective]);
  if (payload.reduction_pct !== undefined) {
    rows.push(["reduction %", String(payload.reduction_pct)]);
  }
  rows.push(["method", payload.method]);
  for (const [name, value] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = name;
    const dd = document.createElement("dd");
    dd.className = "v";
    dd.textContent = value;
    dl.append(dt, dd);
  }
  container.appendChild(dl);
}

/**
 * Hexagon choropleth rendered as inline SVG from server-provided
 * polygons. All cell geometry arrives in the payload; this module only
 * maps projected meters to pixels and looks up palette colors. Every
 * number it displays is a payload value passed through String().
 */

import { changeColor, riskColor } from "./color.js";
import { LAYER_FIELDS, type LayerKey } from "./state.js";
import type { RiskCell } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface MapHandlers {
  onCellClick?: (cell: RiskCell) => void;
  onStationClick?: (cell: RiskCell) => void;
}

export interface CompareOverlay {
  /** "q,r" -> percent-change repr string from the compare payload. */
  percentChange: Record<string, string>;
  beforeCells: [number, number][];
  afterCells: [number, number][];
}

interface Extent {
  minX: number;
  minY: number;
  width: number;
  height: number;
}

function extentOf(cells: RiskCell[]): Extent {
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  for (const cell of cells) {
    for (const [x, y] of cell.polygon) {
      if (x < minX) minX = x;
      if (y < minY) minY = y;
      if (x > maxX) maxX = x;
      if (y > maxY) maxY = y;
    }
  }
  return { minX, minY, width: maxX - minX, height: maxY - minY };
}

function el<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

/** y grows north in projected meters but south in SVG, so flip it. */
function toPixel(extent: Extent, x: number, y: number): [number, number] {
  return [x - extent.minX, extent.minY + extent.height - y];
}

/** Payload repr strings use Python spellings for infinities. */
function pctNumber(raw: string): number {
  if (raw === "inf") return 100;
  if (raw === "-inf") return -100;
  const v = Number(raw);
  return Number.isNaN(v) ? 0 : v;
}

function hatchDefs(): SVGDefsElement {
  const defs = el("defs", {});
  const pattern = el("pattern", {
    id: "unreachable-hatch",
    width: "6",
    height: "6",
    patternUnits: "userSpaceOnUse",
    patternTransform: "rotate(45)",
  });
  pattern.appendChild(el("rect", { width: "6", height: "6", fill: "#d8d8d8" }));
  pattern.appendChild(el("line", {
    x1: "0", y1: "0", x2: "0", y2: "6", stroke: "#777", "stroke-width": "2",
  }));
  defs.appendChild(pattern);
  return defs;
}

function legend(stops: string[], leftLabel: string, rightLabel: string): HTMLElement {
  const box = document.createElement("div");
  box.className = "legend";
  const bar = document.createElement("div");
  bar.className = "legend-bar";
  for (const color of stops) {
    const chip = document.createElement("span");
    chip.className = "legend-chip";
    chip.style.background = color;
    bar.appendChild(chip);
  }
  const labels = document.createElement("div");
  labels.className = "legend-labels";
  const lo = document.createElement("span");
  lo.textContent = leftLabel;
  const hi = document.createElement("span");
  hi.textContent = rightLabel;
  labels.append(lo, hi);
  box.append(bar, labels);
  return box;
}

function stationMarker(extent: Extent, cell: RiskCell, cls: string,
                       handlers: MapHandlers): SVGCircleElement {
  const [px, py] = toPixel(extent, cell.center[0], cell.center[1]);
  const dot = el("circle", {
    cx: String(px),
    cy: String(py),
    r: "60",
    class: cls,
  });
  dot.addEventListener("click", (ev) => {
    ev.stopPropagation();
    handlers.onStationClick?.(cell);
  });
  return dot;
}

/**
 * Draw the region as a choropleth of the selected layer on the fixed
 * [0, 1] scale. Unreachable cells get the hatch pattern; station cells
 * get a marker. An empty cell list renders an empty-state message.
 */
export function renderChoropleth(
  container: HTMLElement,
  cells: RiskCell[],
  layer: LayerKey,
  handlers: MapHandlers = {},
): void {
  container.replaceChildren();
  if (cells.length === 0) {
    const msg = document.createElement("p");
    msg.className = "empty-state";
    msg.textContent = "No cells to display. Load a region first.";
    container.appendChild(msg);
    return;
  }
  const extent = extentOf(cells);
  const svg = el("svg", {
    viewBox: `0 0 ${extent.width} ${extent.height}`,
    class: "hexmap",
    role: "img",
  });
  svg.appendChild(hatchDefs());
  const field = LAYER_FIELDS[layer];
  for (const cell of cells) {
    const points = cell.polygon
      .map(([x, y]) => toPixel(extent, x, y).join(","))
      .join(" ");
    const value = cell[field] as number;
    const poly = el("polygon", {
      points,
      fill: cell.reachable ? riskColor(value) : "url(#unreachable-hatch)",
      class: cell.reachable ? "cell" : "cell unreachable",
      "data-q": String(cell.q),
      "data-r": String(cell.r),
      "data-value": String(value),
    });
    const tip = document.createElementNS(SVG_NS, "title");
    tip.textContent = `${layer} ${String(value)}`;
    poly.appendChild(tip);
    poly.addEventListener("click", () => handlers.onCellClick?.(cell));
    svg.appendChild(poly);
  }
  for (const cell of cells) {
    if (cell.station) svg.appendChild(stationMarker(extent, cell, "station", handlers));
  }
  container.appendChild(svg);
  container.appendChild(legend(
    [...Array(11).keys()].map((i) => riskColor(i / 10)), "0", "1"));
}

/**
 * Compare view: cells colored by percent change on a diverging palette
 * centered at 0, with before/after station markers and movement arrows.
 */
export function renderCompareMap(
  container: HTMLElement,
  cells: RiskCell[],
  overlay: CompareOverlay,
): void {
  container.replaceChildren();
  if (cells.length === 0) {
    const msg = document.createElement("p");
    msg.className = "empty-state";
    msg.textContent = "No comparison to display.";
    container.appendChild(msg);
    return;
  }
  const extent = extentOf(cells);
  const byKey = new Map(cells.map((c) => [`${c.q},${c.r}`, c]));
  const svg = el("svg", {
    viewBox: `0 0 ${extent.width} ${extent.height}`,
    class: "hexmap compare",
    role: "img",
  });
  svg.appendChild(hatchDefs());
  for (const cell of cells) {
    const key = `${cell.q},${cell.r}`;
    const raw = overlay.percentChange[key];
    const points = cell.polygon
      .map(([x, y]) => toPixel(extent, x, y).join(","))
      .join(" ");
    const poly = el("polygon", {
      points,
      fill: raw === undefined
        ? "url(#unreachable-hatch)"
        : changeColor(pctNumber(raw)),
      class: "cell",
      "data-q": String(cell.q),
      "data-r": String(cell.r),
    });
    const tip = document.createElementNS(SVG_NS, "title");
    tip.textContent = raw === undefined ? "excluded" : `change % ${raw}`;
    poly.appendChild(tip);
    svg.appendChild(poly);
  }

  const centers = (pairs: [number, number][]) =>
    pairs
      .map(([q, r]) => byKey.get(`${q},${r}`))
      .filter((c): c is RiskCell => c !== undefined)
      .map((c) => toPixel(extent, c.center[0], c.center[1]));
  const before = centers(overlay.beforeCells);
  const after = centers(overlay.afterCells);

  // Arrows pair each vacated position with its nearest new position;
  // pixel-space pairing is layout only, no numbers are displayed.
  const taken = new Set<number>();
  for (const [bx, by] of before) {
    let best = -1;
    let bestD = Infinity;
    after.forEach(([ax, ay], i) => {
      const d = (ax - bx) ** 2 + (ay - by) ** 2;
      if (!taken.has(i) && d < bestD) {
        bestD = d;
        best = i;
      }
    });
    if (best < 0) continue;
    taken.add(best);
    const [ax, ay] = after[best];
    if (ax === bx && ay === by) continue;
    svg.appendChild(el("line", {
      x1: String(bx), y1: String(by), x2: String(ax), y2: String(ay),
      class: "move-arrow",
      "marker-end": "url(#arrowhead)",
    }));
  }
  const defs = el("defs", {});
  const marker = el("marker", {
    id: "arrowhead",
    markerWidth: "8",
    markerHeight: "8",
    refX: "6",
    refY: "3",
    orient: "auto",
  });
  marker.appendChild(el("path", { d: "M0,0 L6,3 L0,6 z", fill: "#222" }));
  defs.appendChild(marker);
  svg.appendChild(defs);

  for (const [bx, by] of before) {
    svg.appendChild(el("circle", {
      cx: String(bx), cy: String(by), r: "60", class: "station before",
    }));
  }
  for (const [ax, ay] of after) {
    svg.appendChild(el("circle", {
      cx: String(ax), cy: String(ay), r: "60", class: "station after",
    }));
  }
  container.appendChild(svg);
  container.appendChild(legend(
    [...Array(11).keys()].map((i) => changeColor(-100 + 20 * i)),
    "-100%", "+100%"));
}

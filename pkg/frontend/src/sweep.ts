/**
 * Marginal-sweep chart: objective per added station, drawn from the
 * sweep payload series with the saturation point marked where the
 * payload says it is. Series strings label the points verbatim.
 */

import type { SweepPayload } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const W = 420;
const H = 180;
const PAD = 28;

export function renderSweep(container: HTMLElement, payload: SweepPayload): void {
  container.replaceChildren();
  const n = payload.deltas.length;
  if (n === 0) {
    const msg = document.createElement("p");
    msg.className = "empty-state";
    msg.textContent = "No sweep data.";
    container.appendChild(msg);
    return;
  }
  const ys = payload.objectives.map(Number);
  const yMax = Math.max(...ys, 1e-12);
  const xAt = (i: number) => PAD + (n === 1 ? 0 : (i * (W - 2 * PAD)) / (n - 1));
  const yAt = (v: number) => H - PAD - (v / yMax) * (H - 2 * PAD);

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${W} ${H}`);
  svg.setAttribute("class", "sweep-chart");

  const line = document.createElementNS(SVG_NS, "polyline");
  line.setAttribute("points",
    ys.map((v, i) => `${xAt(i)},${yAt(v)}`).join(" "));
  line.setAttribute("class", "sweep-line");
  line.setAttribute("fill", "none");
  svg.appendChild(line);

  ys.forEach((v, i) => {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", String(xAt(i)));
    dot.setAttribute("cy", String(yAt(v)));
    dot.setAttribute("r", "3.5");
    dot.setAttribute("class", "sweep-point");
    dot.setAttribute("data-delta", String(payload.deltas[i]));
    dot.setAttribute("data-objective", payload.objectives[i]);
    const tip = document.createElementNS(SVG_NS, "title");
    tip.textContent = `delta ${payload.deltas[i]}: ${payload.objectives[i]}`;
    dot.appendChild(tip);
    svg.appendChild(dot);
  });

  if (payload.saturation_delta !== null) {
    const idx = payload.deltas.indexOf(payload.saturation_delta);
    if (idx >= 0) {
      const x = xAt(idx);
      const mark = document.createElementNS(SVG_NS, "line");
      mark.setAttribute("x1", String(x));
      mark.setAttribute("x2", String(x));
      mark.setAttribute("y1", String(PAD / 2));
      mark.setAttribute("y2", String(H - PAD));
      mark.setAttribute("class", "saturation-mark");
      svg.appendChild(mark);
      const text = document.createElementNS(SVG_NS, "text");
      text.setAttribute("x", String(x + 4));
      text.setAttribute("y", String(PAD));
      text.setAttribute("class", "saturation-label");
      text.textContent = `saturation at +${payload.saturation_delta}`;
      svg.appendChild(text);
    }
  }
  container.appendChild(svg);

  const list = document.createElement("ol");
  list.className = "sweep-values";
  list.start = payload.deltas.length > 0 ? payload.deltas[0] : 0;
  payload.deltas.forEach((delta, i) => {
    const item = document.createElement("li");
    const value = document.createElement("span");
    value.className = "v";
    value.dataset.delta = String(delta);
    value.textContent = payload.objectives[i];
    item.append(`+${delta}: `, value);
    list.appendChild(item);
  });
  container.appendChild(list);
}

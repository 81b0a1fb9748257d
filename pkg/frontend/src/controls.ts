/**
 * Scenario controls: linked weight sliders, presets, and the throttle
 * that keeps mid-drag traffic at or under 4 requests per second.
 */

import { PRESET_WEIGHTS, type ViewState } from "./state.js";
import type { RiskSummary } from "./types.js";

/** 4 requests/s ceiling for slider drags. */
export const SCENARIO_THROTTLE_MS = 250;

/**
 * Leading plus trailing throttle: the first call fires immediately,
 * later calls inside the window collapse into one trailing call with
 * the latest arguments.
 */
export function throttle<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): (...args: A) => void {
  let last = -Infinity;
  let pending: A | null = null;
  let timer: ReturnType<typeof setTimeout> | null = null;

  const flush = () => {
    timer = null;
    if (pending !== null) {
      const args = pending;
      pending = null;
      last = Date.now();
      fn(...args);
    }
  };

  return (...args: A) => {
    const now = Date.now();
    if (now - last >= waitMs && timer === null) {
      last = now;
      fn(...args);
      return;
    }
    pending = args;
    if (timer === null) {
      timer = setTimeout(flush, waitMs - (now - last));
    }
  };
}

export interface ControlCallbacks {
  onWeight: (wFB: number) => void;
  onPreset: (name: string) => void;
  onLayer: (layer: string) => void;
  onOptimize: (kind: "relocate" | "add" | "sweep", delta: number) => void;
  onApplyStations: () => void;
}

const LAYER_CHOICES = ["RI", "FB", "SD", "STTFS", "POP"];

export function renderControls(
  container: HTMLElement,
  state: ViewState,
  callbacks: ControlCallbacks,
): void {
  container.replaceChildren();

  const presets = document.createElement("div");
  presets.className = "preset-row";
  for (const name of Object.keys(PRESET_WEIGHTS)) {
    const btn = document.createElement("button");
    btn.textContent = name;
    btn.dataset.preset = name;
    btn.className = state.scenarioName === name ? "preset active" : "preset";
    btn.addEventListener("click", () => callbacks.onPreset(name));
    presets.appendChild(btn);
  }
  container.appendChild(presets);

  const sliderBox = document.createElement("div");
  sliderBox.className = "slider-box";
  const label = document.createElement("label");
  label.htmlFor = "w-fb";
  label.textContent = "Fire behavior weight";
  const slider = document.createElement("input");
  slider.type = "range";
  slider.id = "w-fb";
  slider.min = "0";
  slider.max = "1";
  slider.step = "0.05";
  slider.value = String(state.weights.FB);
  slider.addEventListener("input", () => callbacks.onWeight(Number(slider.value)));
  const readout = document.createElement("span");
  readout.id = "weight-readout";
  readout.className = "v";
  readout.textContent = `FB ${state.weights.FB} / SD ${state.weights.SD}`;
  sliderBox.append(label, slider, readout);
  container.appendChild(sliderBox);

  const layerBox = document.createElement("div");
  layerBox.className = "layer-row";
  for (const layer of LAYER_CHOICES) {
    const btn = document.createElement("button");
    btn.textContent = layer;
    btn.dataset.layer = layer;
    btn.className = state.layer === layer ? "layer active" : "layer";
    btn.addEventListener("click", () => callbacks.onLayer(layer));
    layerBox.appendChild(btn);
  }
  container.appendChild(layerBox);

  const actions = document.createElement("div");
  actions.className = "action-row";
  const relocate = document.createElement("button");
  relocate.id = "optimize-relocate";
  relocate.textContent = "Relocate stations";
  relocate.addEventListener("click", () => callbacks.onOptimize("relocate", 0));
  const deltaInput = document.createElement("input");
  deltaInput.type = "number";
  deltaInput.id = "delta";
  deltaInput.min = "1";
  deltaInput.value = "1";
  const add = document.createElement("button");
  add.id = "optimize-add";
  add.textContent = "Add stations";
  add.addEventListener("click", () =>
    callbacks.onOptimize("add", Number(deltaInput.value)));
  const sweep = document.createElement("button");
  sweep.id = "optimize-sweep";
  sweep.textContent = "Marginal sweep";
  sweep.addEventListener("click", () =>
    callbacks.onOptimize("sweep", Number(deltaInput.value)));
  const apply = document.createElement("button");
  apply.id = "apply-stations";
  apply.textContent = "Apply station edits";
  apply.disabled = !state.stationsEdited;
  apply.addEventListener("click", () => callbacks.onApplyStations());
  actions.append(relocate, add, deltaInput, sweep, apply);
  container.appendChild(actions);
}

/** Scenario summary; values are payload fields rendered verbatim. */
export function renderSummary(container: HTMLElement, summary: RiskSummary): void {
  container.replaceChildren();
  const rows: [string, number][] = [
    ["mean RI", summary.mean_ri],
    ["max RI", summary.max_ri],
    ["total RI", summary.total_ri],
    ["reachable cells", summary.reachable_cells],
  ];
  const dl = document.createElement("dl");
  dl.className = "summary";
  for (const [name, value] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = name;
    const dd = document.createElement("dd");
    dd.className = "v";
    dd.textContent = String(value);
    dl.append(dt, dd);
  }
  container.appendChild(dl);
}

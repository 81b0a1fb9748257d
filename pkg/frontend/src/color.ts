/**
 * Fixed presentation palettes. Values index into constant ramps; the
 * scale anchors never depend on the data (risk maps always span [0, 1],
 * change maps always span -100%..+100%).
 */

/** Dark-to-light ramp: higher combined risk renders lighter. */
const RISK_RAMP = [
  "#1a1033", "#2d1a4e", "#432868", "#5c3a7d", "#784e8d",
  "#956599", "#b17ea1", "#ca9aa8", "#ddb9b4", "#ecd9c8",
  "#f7f0e2",
];

/** Blue (improved) through white (no change) to red (degraded). */
const DIVERGING_RAMP = [
  "#1f5fa8", "#4a7fbd", "#7aa2d1", "#aac6e3", "#d7e3f1",
  "#f5f5f5",
  "#f3d4cd", "#e8aa9d", "#d97e6f", "#c44f44", "#a8201f",
];

function pick(ramp: string[], t: number): string {
  const clamped = Math.min(1, Math.max(0, t));
  const idx = Math.min(ramp.length - 1, Math.floor(clamped * ramp.length));
  return ramp[idx];
}

/** Color for a model value on the fixed [0, 1] risk scale. */
export function riskColor(value: number): string {
  return pick(RISK_RAMP, value);
}

/** Color for a percent change on the fixed [-100, 100] scale, 0 centered. */
export function changeColor(pct: number): string {
  return pick(DIVERGING_RAMP, (pct + 100) / 200);
}

export function riskLegendStops(): string[] {
  return [...RISK_RAMP];
}

export function changeLegendStops(): string[] {
  return [...DIVERGING_RAMP];
}

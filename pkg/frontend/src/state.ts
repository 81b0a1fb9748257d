/**
 * View state and its pure transitions. No model math happens here: the
 * only arithmetic is the convex-pair linkage the weight sliders are
 * required to maintain (wFB + wSD = 1).
 */

import type { RiskCell } from "./types.js";

export type LayerKey = "RI" | "FB" | "SD" | "STTFS" | "POP";

/** Map a selectable layer to the risk-payload field that carries it. */
export const LAYER_FIELDS: Record<LayerKey, keyof RiskCell> = {
  RI: "ri",
  FB: "fb",
  SD: "sd",
  STTFS: "s",
  POP: "pop",
};

/** Declared preset weight vectors; constants, never derived. */
export const PRESET_WEIGHTS: Record<string, { FB: number; SD: number }> = {
  RI: { FB: 0.5, SD: 0.5 },
  RIF: { FB: 0.75, SD: 0.25 },
  RIS: { FB: 0.25, SD: 0.75 },
};

export interface StationPoint {
  lat: number;
  lon: number;
}

export interface ViewState {
  regionId: string | null;
  scenarioName: string;
  weights: { FB: number; SD: number };
  layer: LayerKey;
  /** Station positions being edited; null until a region payload arrives. */
  stations: StationPoint[] | null;
  stationsEdited: boolean;
  /** Index into stations of a picked-up marker, for click-to-move. */
  movingStation: number | null;
  lastJobId: string | null;
  compareMode: boolean;
}

export function initialState(): ViewState {
  return {
    regionId: null,
    scenarioName: "RI",
    weights: { ...PRESET_WEIGHTS.RI },
    layer: "RI",
    stations: null,
    stationsEdited: false,
    movingStation: null,
    lastJobId: null,
    compareMode: false,
  };
}

/** Round to the slider's resolution so the pair prints cleanly. */
function snap(w: number): number {
  return Math.round(w * 1000) / 1000;
}

/** Linked sliders: setting one weight fixes the other to the complement. */
export function setFbWeight(state: ViewState, wFB: number): ViewState {
  const fb = snap(Math.min(1, Math.max(0, wFB)));
  return {
    ...state,
    scenarioName: "custom",
    weights: { FB: fb, SD: snap(1 - fb) },
  };
}

export function applyPreset(state: ViewState, name: string): ViewState {
  const weights = PRESET_WEIGHTS[name];
  if (!weights) throw new Error(`unknown preset ${name}`);
  return { ...state, scenarioName: name, weights: { ...weights } };
}

/** Body for POST /regions/{id}/scenario; carries the weights explicitly. */
export function scenarioRequest(state: ViewState): object {
  return {
    name: state.scenarioName,
    outcome_weights: { FB: state.weights.FB, SD: state.weights.SD },
  };
}

/** Layer switches must not touch the edited station set. */
export function selectLayer(state: ViewState, layer: LayerKey): ViewState {
  return { ...state, layer };
}

/** Seed the editable station list from a risk payload (server truth). */
export function stationsFromCells(cells: RiskCell[]): StationPoint[] {
  return cells
    .filter((c) => c.station)
    .map((c) => ({ lat: c.center_ll[0], lon: c.center_ll[1] }));
}

export function addStation(state: ViewState, cell: RiskCell): ViewState {
  const stations = [...(state.stations ?? [])];
  stations.push({ lat: cell.center_ll[0], lon: cell.center_ll[1] });
  return { ...state, stations, stationsEdited: true };
}

export function removeStation(state: ViewState, index: number): ViewState {
  const stations = [...(state.stations ?? [])];
  if (index < 0 || index >= stations.length) return state;
  stations.splice(index, 1);
  return {
    ...state,
    stations,
    stationsEdited: true,
    movingStation: null,
  };
}

/** Click a marker to pick it up, click a cell to drop it there. */
export function pickUpStation(state: ViewState, index: number): ViewState {
  if (!state.stations || index < 0 || index >= state.stations.length) return state;
  return { ...state, movingStation: index };
}

export function dropStation(state: ViewState, cell: RiskCell): ViewState {
  if (state.movingStation === null || !state.stations) return state;
  const stations = [...state.stations];
  stations[state.movingStation] = {
    lat: cell.center_ll[0],
    lon: cell.center_ll[1],
  };
  return { ...state, stations, stationsEdited: true, movingStation: null };
}

/** Body for POST /regions/{id}/stations, coordinates passed through. */
export function stationsRequest(state: ViewState): [number, number][] {
  return (state.stations ?? []).map((s) => [s.lat, s.lon]);
}

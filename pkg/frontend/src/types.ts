/**
 * Service payload shapes, verbatim. The client never derives model
 * numbers; every displayed value is read out of one of these payloads.
 */

export interface RegionRow {
  region_id: string;
  name: string;
  cells: number;
  stations: number;
}

export interface RegionSummary {
  name: string;
  cells: number;
  nodes: number;
  edges: number;
  stations: number;
  station_cells: [number, number][];
  candidate_cells: number;
  reachable_cells: number;
  edge_m: number;
  cell_area_km2: number;
  origin: [number, number];
  layers: string[];
  total_population: number;
}

export interface ScenarioDict {
  name: string;
  transforms: Record<string, Record<string, unknown>>;
  feature_weights: Record<string, number>;
  outcome_weights: { FB: number; SD: number };
}

export interface RiskSummary {
  cells: number;
  reachable_cells: number;
  total_ri: number;
  mean_ri: number;
  max_ri: number;
  mean_base: number;
}

/** One hexagon; centers/polygons are projected meters, center_ll is [lat, lon]. */
export interface RiskCell {
  q: number;
  r: number;
  center: [number, number];
  center_ll: [number, number];
  polygon: [number, number][];
  base: number;
  s: number;
  ri: number;
  fb: number;
  sd: number;
  pop: number;
  reachable: boolean;
  station: boolean;
}

export interface RiskPayload {
  scenario: ScenarioDict;
  summary: RiskSummary;
  edge_m: number;
  cells: RiskCell[];
}

export interface ScenarioResponse {
  scenario: ScenarioDict;
  risk_summary: RiskSummary;
}

export interface StationsResponse {
  stations: number;
  station_cells: [number, number][];
}

export type JobKind = "relocate" | "add" | "sweep";
export type JobStatus = "queued" | "running" | "done" | "error";

export interface JobRecord {
  job_id: string;
  region_id: string;
  kind: JobKind;
  status: JobStatus;
  result?: Record<string, unknown>;
  error?: string | null;
}

export interface CompareHistogram {
  bin_edges: number[];
  before_counts: number[];
  after_counts: number[];
  before_unreachable: number;
  after_unreachable: number;
}

export interface FieldComparison {
  cells: number;
  excluded_unreachable: number;
  improved: number;
  degraded: number;
  unchanged: number;
  brackets: Record<string, number>;
  percent_change: Record<string, string>;
  current: RiskSummary;
  optimized: RiskSummary;
}

/** GET /regions/{id}/compare?job= ; objective values are repr strings. */
export interface ComparePayload {
  objective_kind: string;
  open_cells: [number, number][];
  objective: string;
  objective_internal: string;
  method: string;
  uncovered_cells: number;
  assignment: Record<string, [number, number]>;
  before?: {
    open_cells: [number, number][];
    objective: string;
    objective_internal: string;
  };
  reduction_pct?: number;
  histogram: CompareHistogram;
  per_cell: Record<string, { before: string; after: string }>;
  fields: FieldComparison;
}

/** GET /regions/{id}/marginal?job= ; numeric series are repr strings. */
export interface SweepPayload {
  deltas: number[];
  objectives: string[];
  honest_objectives: string[];
  marginal_gains: string[];
  saturation_delta: number | null;
  eps_used: string;
  open_sets: [number, number][][];
}

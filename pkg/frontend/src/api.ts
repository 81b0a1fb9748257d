/**
 * Thin typed wrapper over fetch. Scenario posts are cancellable so a
 * newer slider position can abort a superseded request.
 */

import type {
  ComparePayload,
  JobKind,
  JobRecord,
  RegionRow,
  RegionSummary,
  RiskPayload,
  ScenarioResponse,
  StationsResponse,
  SweepPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const detail = (body as any).error ?? (body as any).detail ?? resp.statusText;
    throw new ApiError(String(detail), resp.status);
  }
  return body as T;
}

export function listRegions(): Promise<{ regions: RegionRow[] }> {
  return request("/regions");
}

export function createRegion(payload: object): Promise<{ region_id: string; summary: RegionSummary }> {
  return request("/regions", { method: "POST", body: JSON.stringify(payload) });
}

export function getRisk(regionId: string): Promise<RiskPayload> {
  return request(`/regions/${regionId}/risk`);
}

export function postScenario(
  regionId: string,
  payload: object,
  signal?: AbortSignal,
): Promise<ScenarioResponse> {
  return request(`/regions/${regionId}/scenario`, {
    method: "POST",
    body: JSON.stringify(payload),
    signal,
  });
}

export function postStations(
  regionId: string,
  stations: [number, number][],
): Promise<StationsResponse> {
  return request(`/regions/${regionId}/stations`, {
    method: "POST",
    body: JSON.stringify({ stations }),
  });
}

export function submitJob(
  regionId: string,
  kind: JobKind,
  params: object = {},
): Promise<{ job_id: string; status: string }> {
  return request(`/regions/${regionId}/jobs`, {
    method: "POST",
    body: JSON.stringify({ kind, ...params }),
  });
}

export function getJob(jobId: string): Promise<JobRecord> {
  return request(`/jobs/${jobId}`);
}

export function getCompare(regionId: string, jobId: string): Promise<ComparePayload> {
  return request(`/regions/${regionId}/compare?job=${jobId}`);
}

export function getMarginal(regionId: string, jobId: string): Promise<SweepPayload> {
  return request(`/regions/${regionId}/marginal?job=${jobId}`);
}

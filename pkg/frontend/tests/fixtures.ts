/**
 * Canned service payloads and a fetch interceptor. Values are chosen
 * with distinctive decimal expansions so verbatim-rendering checks
 * cannot pass by accident.
 */

import { vi } from "vitest";
import type {
  ComparePayload,
  RiskCell,
  RiskPayload,
  SweepPayload,
} from "../src/types.js";

const HEX = [
  [0, 500], [433, 250], [433, -250], [0, -500], [-433, -250], [-433, 250],
] as const;

function hexCell(
  q: number,
  values: Partial<RiskCell> & { ri: number },
): RiskCell {
  const cx = q * 1000;
  return {
    q,
    r: 0,
    center: [cx, 0],
    center_ll: [37.0 + q * 0.001, -120.0 + q * 0.002],
    polygon: HEX.map(([dx, dy]) => [cx + dx, dy] as [number, number]),
    base: 0.5,
    s: 0.5,
    fb: 0.41,
    sd: 0.59,
    pop: 0.33,
    reachable: true,
    station: false,
    ...values,
  };
}

export function riskPayload(): RiskPayload {
  return {
    scenario: {
      name: "RI",
      transforms: {},
      feature_weights: { ROS: 0.5, FI: 0.5, POP: 0.5, MHV: 0.5 },
      outcome_weights: { FB: 0.5, SD: 0.5 },
    },
    summary: {
      cells: 5,
      reachable_cells: 4,
      total_ri: 1.2936675309,
      mean_ri: 0.3234168827,
      max_ri: 0.8119401,
      mean_base: 0.51382,
    },
    edge_m: 500,
    cells: [
      hexCell(0, { ri: 0.1372619, station: true }),
      hexCell(1, { ri: 0.0, fb: 0.0, sd: 0.0, pop: 0.0 }),
      hexCell(2, { ri: 0.8119401, fb: 0.92, sd: 0.71 }),
      hexCell(3, { ri: 0.3444655309, station: true }),
      hexCell(4, { ri: 1.0, reachable: false }),
    ],
  };
}

export function comparePayload(): ComparePayload {
  return {
    objective_kind: "avg",
    open_cells: [[2, 0], [3, 0]],
    objective: "0.0718253971",
    objective_internal: "0.0718253971",
    method: "exact",
    uncovered_cells: 0,
    assignment: { "0,0": [2, 0], "1,0": [2, 0], "2,0": [2, 0], "3,0": [3, 0] },
    before: {
      open_cells: [[0, 0], [3, 0]],
      objective: "0.1436507942",
      objective_internal: "0.1436507942",
    },
    reduction_pct: 50.0,
    histogram: {
      bin_edges: [0.0, 0.25, 0.5, 0.75, 1.0],
      before_counts: [1, 2, 0, 1],
      after_counts: [3, 1, 0, 0],
      before_unreachable: 1,
      after_unreachable: 1,
    },
    per_cell: {
      "0,0": { before: "0.1436507942", after: "0.2057" },
      "2,0": { before: "0.4", after: "0.011" },
    },
    fields: {
      cells: 4,
      excluded_unreachable: 1,
      improved: 2,
      degraded: 1,
      unchanged: 1,
      brackets: {
        "0-10": 1, "10-20": 0, "20-30": 0, "30-40": 1, "40-50": 0,
        "50-60": 0, "60-70": 0, "70-80": 0, "80-90": 0, "90-100": 1,
      },
      percent_change: { "0,0": "-35.5", "1,0": "0.0", "2,0": "-97.25", "3,0": "12.5" },
      current: {
        cells: 5, reachable_cells: 4, total_ri: 1.2936675309,
        mean_ri: 0.3234168827, max_ri: 0.8119401, mean_base: 0.51382,
      },
      optimized: {
        cells: 5, reachable_cells: 4, total_ri: 0.8351,
        mean_ri: 0.208775, max_ri: 0.61, mean_base: 0.51382,
      },
    },
  };
}

export function sweepPayload(): SweepPayload {
  return {
    deltas: [0, 1, 2, 3],
    objectives: ["0.5", "0.16666666666666666", "0.08333333333333333", "0.08"],
    honest_objectives: ["0.5", "0.16666666666666666", "0.08333333333333333", "0.08"],
    marginal_gains: ["0.0", "0.3333333333333333", "0.08333333333333333", "0.0033"],
    saturation_delta: 3,
    eps_used: "0.005",
    open_sets: [[[0, 0]], [[0, 0], [2, 0]], [[0, 0], [2, 0], [4, 0]],
                [[0, 0], [1, 0], [2, 0], [4, 0]]],
  };
}

export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
  signal: AbortSignal | null;
}

/**
 * Install a fetch mock that answers from a routing table and records
 * every request. Keys are "METHOD path" with exact match first, then
 * prefix match.
 */
export function interceptFetch(
  routes: Record<string, unknown | ((body: unknown) => unknown | Promise<unknown>)>,
): RecordedRequest[] {
  const recorded: RecordedRequest[] = [];
  vi.stubGlobal("fetch", vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const path = String(input);
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    recorded.push({ method, path, body, signal: init?.signal ?? null });
    const exact = `${method} ${path}`;
    let handler = routes[exact];
    if (handler === undefined) {
      const key = Object.keys(routes).find(
        (k) => k.startsWith(`${method} `) && path.startsWith(k.slice(method.length + 1)),
      );
      if (key !== undefined) handler = routes[key];
    }
    if (handler === undefined) {
      return new Response(JSON.stringify({ error: `no route for ${exact}` }), {
        status: 404,
        headers: { "content-type": "application/json" },
      });
    }
    const payload = typeof handler === "function" ? await handler(body) : handler;
    if (init?.signal?.aborted) {
      throw new DOMException("The operation was aborted.", "AbortError");
    }
    return new Response(JSON.stringify(payload), {
      status: 200,
      headers: { "content-type": "application/json" },
    });
  }));
  return recorded;
}

/** Every numeric-looking string reachable in a payload, for verbatim checks. */
export function payloadValueStrings(payload: unknown): Set<string> {
  const found = new Set<string>();
  const walk = (node: unknown): void => {
    if (typeof node === "number") {
      found.add(String(node));
    } else if (typeof node === "string") {
      if (node !== "" && !Number.isNaN(Number(node))) found.add(node);
    } else if (Array.isArray(node)) {
      node.forEach(walk);
    } else if (node && typeof node === "object") {
      Object.values(node).forEach(walk);
    }
  };
  walk(payload);
  return found;
}

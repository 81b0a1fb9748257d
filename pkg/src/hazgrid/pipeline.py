"""Region assembly: bundle -> grid -> layers -> travel -> risk -> siting.

``RegionModel.build`` tessellates a bundle at a chosen hexagon edge
length, aggregates every input layer onto the cells, snaps stations to
the street network, and precomputes the cell-to-cell travel matrix over
road-accessible (node-bearing) cells. Everything the service and the CLI
expose is a thin call into this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InstanceError, LayerError
from .hexgrid import CellId, HexGrid, LayerGrid, aggregate_raster
from .ingest import RegionBundle
from .optimizer import (
    ObjectiveSpec,
    SitingInstance,
    SitingResult,
    SolveConfig,
    SweepResult,
    evaluate_open,
    marginal_sweep,
    solve,
    solve_addition,
    solve_relocation,
)
from .riskmodel import RiskField, ScenarioSpec, compute_risk
from .streetnet import (
    UNREACHABLE_MS,
    StreetNetwork,
    TravelField,
    cell_travel_seconds,
    street_length_per_cell,
)

DEFAULT_EDGE_M = 533.7  # hexagon edge giving ~0.74 km^2 cells


@dataclass
class RegionModel:
    bundle: RegionBundle
    grid: HexGrid
    layers: LayerGrid
    network: StreetNetwork
    station_nodes: List[int] = field(default_factory=list)   # snapped node ids
    station_cells: List[CellId] = field(default_factory=list)
    candidate_cells: List[CellId] = field(default_factory=list)
    cell_members: Dict[CellId, List[int]] = field(default_factory=dict)
    rep_node: Dict[CellId, int] = field(default_factory=dict)
    sttfs_field: Optional[TravelField] = None
    _travel_matrix: Optional[np.ndarray] = None

    # -- construction -------------------------------------------------------

    @classmethod
    def build(cls, bundle: RegionBundle, edge_m: float = DEFAULT_EDGE_M) -> "RegionModel":
        network = StreetNetwork.from_bundle(bundle)
        lats = [network.lats]
        lons = [network.lons]
        for raster in bundle.rasters.values():
            glats, glons = raster.cell_centers()
            mask = raster.valid_mask()
            lats.append(glats[mask])
            lons.append(np.asarray(glons)[mask])
        for pts in bundle.point_sets.values():
            if pts:
                lats.append(np.array([p.lat for p in pts]))
                lons.append(np.array([p.lon for p in pts]))
        all_lats = np.concatenate(lats)
        all_lons = np.concatenate(lons)
        origin = (float(network.lats.mean()), float(network.lons.mean()))
        grid = HexGrid.covering_points(all_lats, all_lons, edge_m, origin=origin)
        layers = LayerGrid(grid)

        for name, raster in sorted(bundle.rasters.items()):
            mode = "sum" if name == "POP" else "mean"
            layers.set_layer(name, aggregate_raster(grid, raster, mode=mode))
        layers.set_layer("STREET_M", street_length_per_cell(network, grid))

        model = cls(bundle=bundle, grid=grid, layers=layers, network=network)
        model._index_cells()
        model._snap_stations()
        model._compute_sttfs()
        return model

    def _index_cells(self):
        cells = self.network.node_cells(self.grid)
        members: Dict[CellId, List[int]] = {}
        for i in range(len(self.network.node_ids)):
            cell = CellId(int(cells[i, 0]), int(cells[i, 1]))
            members.setdefault(cell, []).append(i)
        self.cell_members = members
        self.candidate_cells = sorted(members)
        # Representative node: nearest to the cell center, smallest id on ties.
        for cell, idxs in members.items():
            cx, cy = self.grid.cell_center_xy(cell)
            nx, ny = self.grid.project(self.network.lats[idxs], self.network.lons[idxs])
            d2 = (np.asarray(nx) - cx) ** 2 + (np.asarray(ny) - cy) ** 2
            d2 = np.atleast_1d(d2)
            best = None
            for k, i in enumerate(idxs):
                key = (float(d2[k]), int(self.network.node_ids[i]))
                if best is None or key < best[0]:
                    best = (key, i)
            self.rep_node[cell] = best[1]

    def _snap_stations(self):
        pts = self.bundle.point_sets.get("stations", [])
        self.station_nodes = [self.network.nearest_node(self.grid, p.lat, p.lon) for p in pts]
        cells = []
        node_cells = self.network.node_cells(self.grid)
        for nid in self.station_nodes:
            idx = self.network.index_of(nid)
            cells.append(CellId(int(node_cells[idx, 0]), int(node_cells[idx, 1])))
        self.station_cells = cells

    def _compute_sttfs(self):
        origins = [(k, nid) for k, nid in enumerate(self.station_nodes)]
        if origins:
            self.sttfs_field = self.network.multi_source_dijkstra(origins)
            per_cell = cell_travel_seconds(self.network, self.grid, self.sttfs_field)
            seconds = {cell: sec for cell, (sec, _) in per_cell.items()}
        else:
            self.sttfs_field = None
            seconds = {}
        self.layers.set_layer("STTFS", seconds, default=math.inf)

    # -- basic derived quantities -------------------------------------------

    def existing_station_cells(self) -> Tuple[CellId, ...]:
        return tuple(sorted(set(self.station_cells)))

    def travel_seconds_layer(self) -> np.ndarray:
        return self.layers.layer("STTFS")

    def reachable_mask(self) -> np.ndarray:
        """Cells reachable by road from at least one station (all
        node-bearing cells when no stations exist)."""
        node_bearing = np.array([c in self.cell_members for c in self.layers.cell_order])
        if not self.station_nodes:
            return node_bearing
        return node_bearing & np.isfinite(self.travel_seconds_layer())

    def density_per_km2(self) -> np.ndarray:
        if not self.layers.has_layer("POP"):
            raise LayerError("region has no POP layer")
        return self.layers.layer("POP") / self.grid.cell_area_km2()

    def total_population(self) -> float:
        return float(self.layers.layer("POP").sum())

    def risk_field(self, scenario: ScenarioSpec) -> RiskField:
        return compute_risk(self.layers, scenario, self.travel_seconds_layer(),
                            reachable=self.reachable_mask())

    def sttfs_for_stations(self, cells: Sequence[CellId]) -> np.ndarray:
        """Travel seconds per cell from stations placed at the given cells,
        aligned to ``layers.cell_order`` (+inf where unreached)."""
        opened = sorted(set(CellId(*c) for c in cells))
        if not opened:
            return np.full(len(self.layers), math.inf)
        origins = []
        for k, c in enumerate(opened):
            node_idx = self.rep_node.get(c)
            if node_idx is None:
                raise InstanceError(f"station cell {tuple(c)} has no road node")
            origins.append((k, int(self.network.node_ids[node_idx])))
        fld = self.network.multi_source_dijkstra(origins)
        per_cell = cell_travel_seconds(self.network, self.grid, fld)
        seconds = {cell: sec for cell, (sec, _) in per_cell.items()}
        return np.array([seconds.get(c, math.inf) for c in self.layers.cell_order])

    def risk_field_for_stations(self, scenario: ScenarioSpec,
                                cells: Sequence[CellId]) -> RiskField:
        """Risk field as it would stand with stations at the given cells."""
        opened = list(cells)
        seconds = self.sttfs_for_stations(opened)
        node_bearing = np.array([c in self.cell_members
                                 for c in self.layers.cell_order])
        reach = node_bearing & np.isfinite(seconds) if opened else node_bearing
        return compute_risk(self.layers, scenario, seconds, reachable=reach)

    def summary(self) -> dict:
        reach = self.reachable_mask()
        return {
            "name": self.bundle.name,
            "cells": len(self.layers),
            "nodes": int(len(self.network.node_ids)),
            "edges": int(self.network.n_edges),
            "stations": len(self.station_nodes),
            "station_cells": [[c.q, c.r] for c in sorted(set(self.station_cells))],
            "candidate_cells": len(self.candidate_cells),
            "reachable_cells": int(reach.sum()),
            "edge_m": self.grid.edge_m,
            "cell_area_km2": self.grid.cell_area_km2(),
            "origin": [self.grid.origin_lat, self.grid.origin_lon],
            "layers": sorted(self.layers.layers),
            "total_population": self.total_population(),
        }

    # -- travel matrix and siting instances ----------------------------------

    def cell_travel_ms(self) -> np.ndarray:
        """Exact travel (int ms) from each candidate cell to every candidate
        cell: representative node to nearest member node."""
        if self._travel_matrix is not None:
            return self._travel_matrix
        reps = [int(self.network.node_ids[self.rep_node[c]]) for c in self.candidate_cells]
        dist = self.network.travel_ms_from(reps)  # float64, exact ints + inf
        k = len(self.candidate_cells)
        out = np.full((k, k), UNREACHABLE_MS, dtype=np.int64)
        member_idx = [np.array(self.cell_members[c], dtype=np.int64)
                      for c in self.candidate_cells]
        for j in range(k):
            cols = dist[:, member_idx[j]].min(axis=1)
            finite = np.isfinite(cols)
            out[finite, j] = np.round(cols[finite]).astype(np.int64)
        self._travel_matrix = out
        return out

    def siting_instance(self, scenario: ScenarioSpec,
                        weight_by: str = "uniform") -> SitingInstance:
        """Instance over road-accessible cells with risk-based costs.

        ``base`` is the static risk (hazard/exposure mix) of each demand
        cell under the scenario; travel enters through the scenario's
        travel-discount transform.
        """
        risk = self.risk_field(scenario)
        index = {c: i for i, c in enumerate(risk.cell_order)}
        demand = self.candidate_cells
        base = np.array([risk.base[index[c]] for c in demand])
        weights = self._demand_weights(demand, weight_by)
        return SitingInstance(
            station_cells=list(self.candidate_cells),
            demand_cells=list(demand),
            base=base,
            weights=weights,
            travel_ms=self.cell_travel_ms(),
            s_transform=scenario.transforms["STTFS"],
            existing_cells=self.existing_station_cells(),
        )

    def distance_instance(self, weight_by: str = "pop") -> SitingInstance:
        """Instance whose cost is raw travel seconds (for distance curves)."""
        demand = self.candidate_cells
        return SitingInstance(
            station_cells=list(self.candidate_cells),
            demand_cells=list(demand),
            base=np.ones(len(demand)),
            weights=self._demand_weights(demand, weight_by),
            travel_ms=self.cell_travel_ms(),
            s_transform=None,
            existing_cells=self.existing_station_cells(),
        )

    def _demand_weights(self, demand: Sequence[CellId], weight_by: str) -> np.ndarray:
        if weight_by == "uniform":
            return np.ones(len(demand))
        if weight_by == "pop":
            pop = self.layers.cell_values("POP")
            w = np.array([max(pop.get(c, 0.0), 0.0) for c in demand])
            if w.sum() <= 0:
                return np.ones(len(demand))
            return w
        raise InstanceError(f"unknown demand weighting {weight_by!r}")

    # -- facility analyses ----------------------------------------------------

    def facility_counts(self, open_cells: Sequence[CellId]) -> np.ndarray:
        """Stations per cell aligned to ``layers.cell_order``."""
        counts = np.zeros(len(self.layers), dtype=np.float64)
        index = {c: i for i, c in enumerate(self.layers.cell_order)}
        for c in open_cells:
            cid = CellId(*c)
            if cid not in index:
                raise InstanceError(f"open cell {cid} is not in the grid")
            counts[index[cid]] += 1.0
        return counts

    def _curve_for_counts(self, inst: SitingInstance, n_values: Sequence[int],
                          config: SolveConfig):
        # Free placement: the curve asks what N optimally sited stations
        # achieve, so existing stations do not constrain the solve.
        free = SitingInstance(
            station_cells=list(inst.station_cells),
            demand_cells=list(inst.demand_cells),
            base=inst.base.copy(),
            weights=inst.weights.copy(),
            travel_ms=inst.travel_ms.copy(),
            s_transform=inst.s_transform,
            existing_cells=(),
        )
        means: List[float] = []
        opens: List[List[CellId]] = []
        warm: List[List[CellId]] = []
        spec = ObjectiveSpec(kind="avg")
        for n in n_values:
            res = solve(free, int(n), spec, config, warm_starts=warm)
            means.append(res.objective_internal)
            opens.append(list(res.open_cells))
            warm = [list(res.open_cells)]
        return list(n_values), means, opens

    def mean_distance_for_counts(self, n_values: Sequence[int],
                                 config: SolveConfig = SolveConfig(),
                                 weight_by: str = "pop"):
        """Population-weighted mean travel seconds for optimal placements
        of each facility count. Returns (n_values, means, open_sets)."""
        return self._curve_for_counts(self.distance_instance(weight_by=weight_by),
                                      n_values, config)

    def mean_risk_for_counts(self, scenario: ScenarioSpec, n_values: Sequence[int],
                             config: SolveConfig = SolveConfig(),
                             weight_by: str = "uniform"):
        """Mean risk index for optimal placements of each facility count.

        Unlike travel time, the risk index mixes hazard intensity into the
        cost, so these curves depend on the hazard pattern and do not
        reduce to a population functional."""
        return self._curve_for_counts(self.siting_instance(scenario, weight_by=weight_by),
                                      n_values, config)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def optimization_report(model: RegionModel, instance: SitingInstance,
                        result: SitingResult) -> dict:
    """Side-by-side of the incumbent configuration and a solver result."""
    spec = result.objective_spec
    existing = instance.existing_cells or model.existing_station_cells()
    before = None
    if existing:
        before = evaluate_open(instance, list(existing), spec)
    payload = {
        "objective_kind": spec.kind,
        "open_cells": [[c.q, c.r] for c in result.open_cells],
        "objective": repr(result.objective),
        "objective_internal": repr(result.objective_internal),
        "method": result.method,
        "uncovered_cells": len(result.uncovered),
        "assignment": {f"{j.q},{j.r}": [i.q, i.r] for j, i in result.assignment.items()},
    }
    if before is not None:
        payload["before"] = {
            "open_cells": [[c.q, c.r] for c in before.open_cells],
            "objective": repr(before.objective),
            "objective_internal": repr(before.objective_internal),
        }
        if math.isfinite(before.objective_internal) and before.objective_internal > 0:
            payload["reduction_pct"] = (
                100.0 * (before.objective_internal - result.objective_internal)
                / before.objective_internal
            )
    return payload


def compare_histogram(before: Dict[CellId, float], after: Dict[CellId, float],
                      n_bins: int = 20) -> dict:
    """Shared-bin histogram of per-cell costs for two configurations.

    Infinite costs are excluded from the bins and reported separately.
    """
    b_vals = np.array([v for v in before.values() if math.isfinite(v)])
    a_vals = np.array([v for v in after.values() if math.isfinite(v)])
    top = max(b_vals.max() if b_vals.size else 0.0,
              a_vals.max() if a_vals.size else 0.0)
    if top <= 0:
        top = 1.0
    edges = np.linspace(0.0, top, n_bins + 1)
    b_counts, _ = np.histogram(b_vals, bins=edges)
    a_counts, _ = np.histogram(a_vals, bins=edges)
    return {
        "bin_edges": [float(e) for e in edges],
        "before_counts": [int(c) for c in b_counts],
        "after_counts": [int(c) for c in a_counts],
        "before_unreachable": int(sum(1 for v in before.values() if not math.isfinite(v))),
        "after_unreachable": int(sum(1 for v in after.values() if not math.isfinite(v))),
    }


def compare_report(model: RegionModel, instance: SitingInstance,
                   result: SitingResult, n_bins: int = 20) -> dict:
    spec = result.objective_spec
    existing = instance.existing_cells or model.existing_station_cells()
    if not existing:
        raise InstanceError("no existing stations to compare against")
    before = evaluate_open(instance, list(existing), spec)
    report = optimization_report(model, instance, result)
    report["histogram"] = compare_histogram(before.per_cell_cost, result.per_cell_cost,
                                            n_bins=n_bins)
    report["per_cell"] = {
        f"{c.q},{c.r}": {
            "before": repr(before.per_cell_cost[c]),
            "after": repr(result.per_cell_cost[c]),
        }
        for c in sorted(before.per_cell_cost)
    }
    return report


def sweep_report(sweep: SweepResult) -> dict:
    return {
        "deltas": sweep.deltas,
        "objectives": [repr(v) for v in sweep.objectives],
        "honest_objectives": [repr(v) for v in sweep.honest_objectives],
        "marginal_gains": [repr(v) for v in sweep.marginal_gains],
        "saturation_delta": sweep.saturation_delta,
        "eps_used": repr(sweep.eps_used),
        "open_sets": [[[c.q, c.r] for c in cells] for cells in sweep.open_sets],
    }


def run_relocation(model: RegionModel, scenario: ScenarioSpec,
                   spec: ObjectiveSpec = ObjectiveSpec(),
                   config: SolveConfig = SolveConfig(),
                   weight_by: str = "uniform"):
    instance = model.siting_instance(scenario, weight_by=weight_by)
    result = solve_relocation(instance, spec, config)
    return instance, result


def run_addition(model: RegionModel, scenario: ScenarioSpec, delta: int,
                 spec: ObjectiveSpec = ObjectiveSpec(),
                 config: SolveConfig = SolveConfig(),
                 weight_by: str = "uniform"):
    instance = model.siting_instance(scenario, weight_by=weight_by)
    result = solve_addition(instance, delta, spec, config)
    return instance, result


def run_sweep(model: RegionModel, scenario: ScenarioSpec, max_delta: int,
              spec: ObjectiveSpec = ObjectiveSpec(),
              config: SolveConfig = SolveConfig(),
              eps: Optional[float] = None,
              weight_by: str = "uniform"):
    instance = model.siting_instance(scenario, weight_by=weight_by)
    sweep = marginal_sweep(instance, max_delta, spec, config, eps=eps)
    return instance, sweep

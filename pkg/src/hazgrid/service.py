"""HTTP service: regions, scenarios, and polled optimization jobs.

Regions persist under the directory named by ``HAZGRID_DATA_DIR`` (or a
constructor argument). Optimization runs as jobs on a per-region FIFO
worker thread; clients poll ``GET /jobs/{id}``. All objective values in
payloads are decimal strings produced by ``repr``, so clients can echo
them back bit-exactly.
"""

from __future__ import annotations

import io
import json
import os
import queue
import re
import tempfile
import threading
from typing import Dict, Optional

from fastapi import Body, FastAPI, HTTPException

from .errors import HazGridError
from .hexgrid import CellId
from .ingest import (
    Point,
    RegionBundle,
    SynthSpec,
    load_bundle,
    read_ascii_grid,
    read_network,
    read_points_csv,
    save_bundle,
    synth_region,
)
from .optimizer import ObjectiveSpec, SolveConfig
from .pipeline import (
    DEFAULT_EDGE_M,
    RegionModel,
    compare_report,
    optimization_report,
    run_addition,
    run_relocation,
    run_sweep,
    sweep_report,
)
from .riskmodel import ScenarioSpec, compare_fields, preset_scenario

DEFAULT_DATA_DIR = "hazgrid_data"


class RegionEntry:
    def __init__(self, region_id: str, model: RegionModel, scenario: ScenarioSpec,
                 edge_m: float):
        self.region_id = region_id
        self.model = model
        self.scenario = scenario
        self.edge_m = edge_m
        self.jobs: "queue.Queue" = queue.Queue()
        self.worker: Optional[threading.Thread] = None


class Store:
    """All service state: regions on disk + jobs in memory."""

    def __init__(self, data_dir: Optional[str] = None):
        self.data_dir = data_dir or os.environ.get("HAZGRID_DATA_DIR", DEFAULT_DATA_DIR)
        os.makedirs(self.data_dir, exist_ok=True)
        self.lock = threading.Lock()
        self.regions: Dict[str, RegionEntry] = {}
        self.job_records: Dict[str, dict] = {}
        self._job_counter = 0
        self._load_existing()

    def _load_existing(self):
        for name in sorted(os.listdir(self.data_dir)):
            path = os.path.join(self.data_dir, name)
            meta_path = os.path.join(path, "meta.json")
            bundle_path = os.path.join(path, "bundle")
            if not (os.path.isdir(path) and os.path.exists(meta_path)
                    and os.path.isdir(bundle_path)):
                continue
            with open(meta_path) as fh:
                meta = json.load(fh)
            bundle = load_bundle(bundle_path)
            model = RegionModel.build(bundle, edge_m=float(meta.get("edge_m", DEFAULT_EDGE_M)))
            scenario = ScenarioSpec.from_dict(meta.get("scenario") or {"name": "RI"})
            self.regions[name] = RegionEntry(name, model, scenario,
                                             float(meta.get("edge_m", DEFAULT_EDGE_M)))

    def next_region_id(self) -> str:
        taken = set(self.regions)
        n = 1
        while f"r{n}" in taken:
            n += 1
        return f"r{n}"

    def next_job_id(self) -> str:
        with self.lock:
            self._job_counter += 1
            return f"j{self._job_counter}"

    def persist_region(self, entry: RegionEntry):
        path = os.path.join(self.data_dir, entry.region_id)
        os.makedirs(path, exist_ok=True)
        save_bundle(entry.model.bundle, os.path.join(path, "bundle"))
        with open(os.path.join(path, "meta.json"), "w") as fh:
            json.dump({"edge_m": entry.edge_m, "scenario": entry.scenario.to_dict()},
                      fh, sort_keys=True, indent=2)

    def get_region(self, region_id: str) -> RegionEntry:
        entry = self.regions.get(region_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown region {region_id!r}")
        return entry

    def ensure_worker(self, entry: RegionEntry):
        if entry.worker is None or not entry.worker.is_alive():
            entry.worker = threading.Thread(
                target=self._worker_loop, args=(entry,), daemon=True
            )
            entry.worker.start()

    def _worker_loop(self, entry: RegionEntry):
        while True:
            job_id = entry.jobs.get()
            record = self.job_records.get(job_id)
            if record is None:
                continue
            with self.lock:
                record["status"] = "running"
            try:
                result = self._run_job(entry, record)
                with self.lock:
                    record["result"] = result
                    record["status"] = "done"
            except Exception as exc:  # job errors are reported, not raised
                with self.lock:
                    record["status"] = "error"
                    record["error"] = str(exc)

    def _run_job(self, entry: RegionEntry, record: dict) -> dict:
        params = record["params"]
        spec = _objective_from(params.get("objective"))
        config = _config_from(params.get("config"))
        weight_by = params.get("weight_by", "uniform")
        kind = record["kind"]
        model = entry.model
        scenario = entry.scenario
        if kind == "relocate":
            instance, result = run_relocation(model, scenario, spec, config, weight_by)
            compare = compare_report(model, instance, result)
            compare["fields"] = compare_fields(
                model.risk_field(scenario),
                model.risk_field_for_stations(scenario, result.open_cells))
            return {
                "optimization": optimization_report(model, instance, result),
                "compare": compare,
            }
        if kind == "add":
            delta = int(params.get("delta", 1))
            instance, result = run_addition(model, scenario, delta, spec, config, weight_by)
            compare = compare_report(model, instance, result)
            compare["fields"] = compare_fields(
                model.risk_field(scenario),
                model.risk_field_for_stations(scenario, result.open_cells))
            return {
                "delta": delta,
                "optimization": optimization_report(model, instance, result),
                "compare": compare,
            }
        if kind == "sweep":
            max_delta = int(params.get("max_delta", 10))
            eps = params.get("eps")
            instance, sweep = run_sweep(model, scenario, max_delta, spec, config,
                                        eps=None if eps is None else float(eps),
                                        weight_by=weight_by)
            return {"sweep": sweep_report(sweep)}
        raise HazGridError(f"unknown job kind {kind!r}")


def _objective_from(raw) -> ObjectiveSpec:
    raw = raw or {}
    extra = set(raw) - {"kind", "alpha_avg", "alpha_max", "enforce_utilization"}
    if extra:
        raise HazGridError(f"unknown objective fields {sorted(extra)}")
    return ObjectiveSpec(
        kind=raw.get("kind", "avg"),
        alpha_avg=float(raw.get("alpha_avg", 0.5)),
        alpha_max=float(raw.get("alpha_max", 0.5)),
        enforce_utilization=bool(raw.get("enforce_utilization", False)),
    )


def _config_from(raw) -> SolveConfig:
    raw = raw or {}
    allowed = {"method", "multi_start", "seed", "max_swaps", "time_limit_s"}
    extra = set(raw) - allowed
    if extra:
        raise HazGridError(f"unknown config fields {sorted(extra)}")
    return SolveConfig(
        method=raw.get("method", "auto"),
        multi_start=int(raw.get("multi_start", 8)),
        seed=int(raw.get("seed", 0)),
        max_swaps=int(raw.get("max_swaps", 400)),
        time_limit_s=float(raw.get("time_limit_s", 3600.0)),
    )


def _bundle_from_payload(payload: dict) -> tuple:
    """(bundle, edge_m) from a region-creation request."""
    edge_m = float(payload.get("edge_m", DEFAULT_EDGE_M))
    sources = [k for k in ("synth", "bundle_dir", "inline") if payload.get(k)]
    if len(sources) != 1:
        raise HazGridError("provide exactly one of synth, bundle_dir, inline")
    if payload.get("synth"):
        raw = dict(payload["synth"])
        seed = int(raw.pop("seed", 0))
        n = int(raw.pop("n", 12))
        m = int(raw.pop("m", 12))
        spec_fields = {f for f in SynthSpec.__dataclass_fields__}
        extra = set(raw) - spec_fields
        if extra:
            raise HazGridError(f"unknown synth fields {sorted(extra)}")
        bundle = synth_region(seed, n, m, SynthSpec(**raw) if raw else None)
    elif payload.get("bundle_dir"):
        bundle = load_bundle(payload["bundle_dir"])
    else:
        inline = payload["inline"]
        required = {"nodes_csv", "edges_csv"}
        if not required <= set(inline):
            raise HazGridError("inline region requires nodes_csv and edges_csv")
        with tempfile.TemporaryDirectory() as tmp:
            nodes_path = os.path.join(tmp, "nodes.csv")
            edges_path = os.path.join(tmp, "edges.csv")
            with open(nodes_path, "w") as fh:
                fh.write(inline["nodes_csv"])
            with open(edges_path, "w") as fh:
                fh.write(inline["edges_csv"])
            bundle = read_network(nodes_path, edges_path,
                                  name=str(payload.get("name", "inline")))
            for rname, text in (inline.get("rasters") or {}).items():
                rpath = os.path.join(tmp, "r.asc")
                with open(rpath, "w") as fh:
                    fh.write(text)
                bundle.rasters[str(rname)] = read_ascii_grid(rpath)
            if inline.get("stations_csv"):
                spath = os.path.join(tmp, "stations.csv")
                with open(spath, "w") as fh:
                    fh.write(inline["stations_csv"])
                bundle.point_sets["stations"] = read_points_csv(spath)
    if payload.get("name"):
        bundle.name = str(payload["name"])
    return bundle, edge_m


def _risk_payload(entry: RegionEntry) -> dict:
    model = entry.model
    risk = model.risk_field(entry.scenario)
    grid = model.grid
    station_set = set(model.existing_station_cells())
    fb = risk.components["FB"]
    sd = risk.components["SD"]
    pop = risk.components["n_POP"]
    cells = []
    for i, cell in enumerate(risk.cell_order):
        cx, cy = grid.cell_center_xy(cell)
        lat, lon = grid.unproject(cx, cy)
        cells.append({
            "q": cell.q,
            "r": cell.r,
            "center": [cx, cy],
            "center_ll": [lat, lon],
            "polygon": [[x, y] for x, y in grid.cell_polygon_xy(cell)],
            "base": float(risk.base[i]),
            "s": float(risk.s[i]),
            "ri": float(risk.ri[i]),
            "fb": float(fb[i]),
            "sd": float(sd[i]),
            "pop": float(pop[i]),
            "reachable": bool(risk.reachable[i]),
            "station": cell in station_set,
        })
    return {
        "scenario": entry.scenario.to_dict(),
        "summary": risk.summary(),
        "edge_m": grid.edge_m,
        "cells": cells,
    }


def create_app(data_dir: Optional[str] = None,
               ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="hazgrid", docs_url=None, redoc_url=None)
    store = Store(data_dir)
    app.state.store = store

    @app.exception_handler(HazGridError)
    async def _domain_error(request, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/regions")
    def list_regions():
        return {
            "regions": [
                {"region_id": rid, "name": e.model.bundle.name,
                 "cells": len(e.model.layers), "stations": len(e.model.station_nodes)}
                for rid, e in sorted(store.regions.items())
            ]
        }

    @app.post("/regions")
    def create_region(payload: dict = Body(...)):
        bundle, edge_m = _bundle_from_payload(payload)
        model = RegionModel.build(bundle, edge_m=edge_m)
        scenario = ScenarioSpec.from_dict(payload["scenario"]) \
            if payload.get("scenario") else preset_scenario("RI")
        with store.lock:
            region_id = store.next_region_id()
            entry = RegionEntry(region_id, model, scenario, edge_m)
            store.regions[region_id] = entry
        store.persist_region(entry)
        return {"region_id": region_id, "summary": model.summary()}

    @app.get("/regions/{region_id}")
    def get_region(region_id: str):
        entry = store.get_region(region_id)
        return {
            "region_id": region_id,
            "summary": entry.model.summary(),
            "scenario": entry.scenario.to_dict(),
        }

    @app.get("/regions/{region_id}/risk")
    def get_risk(region_id: str):
        entry = store.get_region(region_id)
        return _risk_payload(entry)

    @app.post("/regions/{region_id}/scenario")
    def set_scenario(region_id: str, payload: dict = Body(...)):
        entry = store.get_region(region_id)
        if "preset" in payload:
            extra = set(payload) - {"preset"}
            if extra:
                raise HazGridError("preset cannot be combined with other fields")
            scenario = preset_scenario(str(payload["preset"]))
        else:
            scenario = ScenarioSpec.from_dict(payload)
        entry.scenario = scenario
        store.persist_region(entry)
        risk = entry.model.risk_field(scenario)
        return {"scenario": scenario.to_dict(), "risk_summary": risk.summary()}

    @app.post("/regions/{region_id}/stations")
    def set_stations(region_id: str, payload: dict = Body(...)):
        entry = store.get_region(region_id)
        pts = payload.get("stations")
        if not isinstance(pts, list) or not pts:
            raise HazGridError("stations must be a non-empty list of [lat, lon] pairs")
        points = []
        for item in pts:
            if not (isinstance(item, (list, tuple)) and len(item) == 2):
                raise HazGridError(f"bad station entry {item!r}")
            points.append(Point(float(item[0]), float(item[1]), None))
        entry.model.bundle.point_sets["stations"] = points
        entry.model._snap_stations()
        entry.model._compute_sttfs()
        store.persist_region(entry)
        return {
            "stations": len(points),
            "station_cells": [[c.q, c.r] for c in sorted(set(entry.model.station_cells))],
        }

    @app.post("/regions/{region_id}/jobs")
    def submit_job(region_id: str, payload: dict = Body(...)):
        entry = store.get_region(region_id)
        kind = payload.get("kind")
        if kind not in ("relocate", "add", "sweep"):
            raise HazGridError("job kind must be relocate, add, or sweep")
        # Fail fast on malformed specs before queueing.
        _objective_from(payload.get("objective"))
        _config_from(payload.get("config"))
        job_id = store.next_job_id()
        record = {
            "job_id": job_id,
            "region_id": region_id,
            "kind": kind,
            "status": "queued",
            "params": payload,
        }
        with store.lock:
            store.job_records[job_id] = record
        entry.jobs.put(job_id)
        store.ensure_worker(entry)
        return {"job_id": job_id, "status": "queued"}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        with store.lock:
            record = store.job_records.get(job_id)
            if record is None:
                raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
            out = {k: v for k, v in record.items() if k != "params"}
        return out

    @app.get("/regions/{region_id}/compare")
    def get_compare(region_id: str, job: str):
        record = _finished_job(store, region_id, job)
        if record["kind"] not in ("relocate", "add"):
            raise HazGridError(f"job {job!r} is a {record['kind']} job, not an optimization")
        return record["result"]["compare"]

    @app.get("/regions/{region_id}/marginal")
    def get_marginal(region_id: str, job: str):
        record = _finished_job(store, region_id, job)
        if record["kind"] != "sweep":
            raise HazGridError(f"job {job!r} is not a sweep job")
        return record["result"]["sweep"]

    # API routes are registered first, so the catch-all UI mount only
    # sees paths no endpoint claimed
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _finished_job(store: Store, region_id: str, job_id: str) -> dict:
    store.get_region(region_id)
    with store.lock:
        record = store.job_records.get(job_id)
    if record is None or record["region_id"] != region_id:
        raise HTTPException(status_code=404,
                            detail=f"unknown job {job_id!r} for region {region_id!r}")
    if record["status"] == "error":
        raise HazGridError(f"job {job_id} failed: {record.get('error')}")
    if record["status"] != "done":
        raise HTTPException(status_code=409,
                            detail=f"job {job_id} is {record['status']}")
    return record


def serve(host: str = "127.0.0.1", port: int = 8000,
          data_dir: Optional[str] = None,
          ui_dir: Optional[str] = None):  # pragma: no cover - thin wrapper
    import uvicorn

    uvicorn.run(create_app(data_dir, ui_dir=ui_dir), host=host, port=port,
                log_level="warning")

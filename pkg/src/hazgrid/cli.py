"""Command-line interface.

Every file-producing command also writes ``<out>.manifest.json``: the
command, its arguments, the input checksum, and output digests. The
manifest carries no timestamps, so re-running a command byte-identically
reproduces both the outputs and the manifest.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import Optional


from . import __version__
from .errors import HazGridError
from .ingest import (
    RegionBundle,
    SynthSpec,
    bundle_checksum,
    load_bundle,
    read_ascii_grid,
    read_geojson_polygons,
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
from .riskmodel import ScenarioSpec, preset_scenario
from .scaling import bin_densities, continuum_capacity, fit_beta, fit_power_law


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        args.func(args)
        return 0
    except HazGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hazgrid",
                                     description="hexagonal risk grids and station siting")
    parser.add_argument("--version", action="version", version=f"hazgrid {__version__}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth", help="generate a deterministic synthetic region")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=12, help="nodes along x")
    p.add_argument("--m", type=int, default=12, help="nodes along y")
    p.add_argument("--population", type=float, default=None)
    p.add_argument("--stations", type=int, default=None)
    p.add_argument("--spacing-m", type=float, default=None)
    p.add_argument("--speed-kmh", type=float, default=None)
    p.add_argument("--speed-jitter", type=float, default=None)
    p.add_argument("--out", required=True, help="bundle directory to write")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="assemble or validate a region bundle")
    p.add_argument("--bundle", help="existing bundle directory to load")
    p.add_argument("--nodes", help="nodes.csv path")
    p.add_argument("--edges", help="edges.csv path")
    p.add_argument("--raster", action="append", default=[],
                   metavar="NAME=PATH", help="ASCII grid layer (repeatable)")
    p.add_argument("--stations", help="stations CSV path")
    p.add_argument("--polygons", action="append", default=[],
                   metavar="NAME=PATH", help="GeoJSON polygon set (repeatable)")
    p.add_argument("--name", default="region")
    p.add_argument("--out", required=True, help="canonical bundle directory to write")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("tessellate", help="aggregate bundle layers onto hexagons")
    p.add_argument("--bundle", required=True)
    p.add_argument("--edge-m", type=float, default=DEFAULT_EDGE_M)
    p.add_argument("--out", required=True, help="layer CSV to write")
    p.add_argument("--geojson", help="optional GeoJSON output path")
    p.set_defaults(func=_cmd_tessellate)

    p = sub.add_parser("risk", help="score per-cell risk for a scenario")
    p.add_argument("--bundle", required=True)
    p.add_argument("--edge-m", type=float, default=DEFAULT_EDGE_M)
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--preset", help="preset name (RI, RIF, RIS)")
    p.add_argument("--out", required=True, help="risk CSV to write")
    p.set_defaults(func=_cmd_risk)

    p = sub.add_parser("optimize", help="relocate or add stations")
    p.add_argument("--bundle", required=True)
    p.add_argument("--edge-m", type=float, default=DEFAULT_EDGE_M)
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--preset", help="preset name (RI, RIF, RIS)")
    p.add_argument("--mode", choices=["relocate", "add"], default="relocate")
    p.add_argument("--delta", type=int, default=1, help="stations to add (add mode)")
    p.add_argument("--objective", choices=["avg", "max", "weighted"], default="avg")
    p.add_argument("--alpha-avg", type=float, default=0.5)
    p.add_argument("--alpha-max", type=float, default=0.5)
    p.add_argument("--enforce-utilization", action="store_true")
    p.add_argument("--weight-by", choices=["uniform", "pop"], default="uniform")
    p.add_argument("--method", choices=["auto", "exact", "heuristic", "brute"],
                   default="auto")
    p.add_argument("--multi-start", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit-s", type=float, default=3600.0)
    p.add_argument("--out", required=True, help="result JSON to write")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("sweep", help="marginal value of added stations")
    p.add_argument("--bundle", required=True)
    p.add_argument("--edge-m", type=float, default=DEFAULT_EDGE_M)
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--preset", help="preset name (RI, RIF, RIS)")
    p.add_argument("--max-delta", type=int, default=10)
    p.add_argument("--eps", type=float, default=None,
                   help="saturation threshold (default 1%% of the base objective)")
    p.add_argument("--objective", choices=["avg", "max", "weighted"], default="avg")
    p.add_argument("--weight-by", choices=["uniform", "pop"], default="uniform")
    p.add_argument("--method", choices=["auto", "exact", "heuristic", "brute"],
                   default="auto")
    p.add_argument("--multi-start", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit-s", type=float, default=3600.0)
    p.add_argument("--out", required=True, help="sweep JSON to write")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("scaling", help="distance curves and density exponents")
    p.add_argument("--bundle", required=True)
    p.add_argument("--edge-m", type=float, default=DEFAULT_EDGE_M)
    p.add_argument("--counts", default="10,20,30,40,50,60",
                   help="comma-separated facility counts")
    p.add_argument("--coarse-edge-m", type=float, default=None,
                   help="coarse-hex edge for density binning (default 4.5x grid edge)")
    p.add_argument("--multi-start", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="scaling JSON to write")
    p.set_defaults(func=_cmd_scaling)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir", default=None,
                   help="overrides HAZGRID_DATA_DIR")
    p.add_argument("--ui", default=None,
                   help="directory with a built browser UI to serve at /")
    p.set_defaults(func=_cmd_serve)

    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _load_scenario(args) -> ScenarioSpec:
    if getattr(args, "scenario", None) and getattr(args, "preset", None):
        raise HazGridError("give either --scenario or --preset, not both")
    if getattr(args, "preset", None):
        return preset_scenario(args.preset)
    if getattr(args, "scenario", None):
        with open(args.scenario) as fh:
            return ScenarioSpec.from_json(fh.read())
    return preset_scenario("RI")


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(args, bundle: Optional[RegionBundle], outputs):
    """Deterministic run manifest next to the primary output."""
    primary = args.out
    arguments = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func",) and v is not None
    }
    manifest = {
        "tool": "hazgrid",
        "version": __version__,
        "command": args.command,
        "arguments": arguments,
        "input_checksum": bundle_checksum(bundle) if bundle is not None else None,
        "outputs": {os.path.basename(p): _sha256_file(p) for p in sorted(outputs)},
    }
    path = primary + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _config_from_args(args) -> SolveConfig:
    return SolveConfig(
        method=getattr(args, "method", "auto"),
        multi_start=getattr(args, "multi_start", 8),
        seed=getattr(args, "seed", 0),
        time_limit_s=getattr(args, "time_limit_s", 3600.0),
    )


def _objective_from_args(args) -> ObjectiveSpec:
    return ObjectiveSpec(
        kind=args.objective,
        alpha_avg=getattr(args, "alpha_avg", 0.5),
        alpha_max=getattr(args, "alpha_max", 0.5),
        enforce_utilization=getattr(args, "enforce_utilization", False),
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_synth(args):
    overrides = {}
    if args.population is not None:
        overrides["total_population"] = args.population
    if args.stations is not None:
        overrides["n_stations"] = args.stations
    if args.spacing_m is not None:
        overrides["spacing_m"] = args.spacing_m
    if args.speed_kmh is not None:
        overrides["speed_kmh"] = args.speed_kmh
    if args.speed_jitter is not None:
        overrides["speed_jitter"] = args.speed_jitter
    spec = SynthSpec(**overrides) if overrides else None
    bundle = synth_region(args.seed, args.n, args.m, spec)
    save_bundle(bundle, args.out)
    print(f"{bundle.name}: {len(bundle.nodes)} nodes, {len(bundle.edges)} edges, "
          f"checksum {bundle_checksum(bundle)}")


def _cmd_ingest(args):
    if args.bundle:
        bundle = load_bundle(args.bundle)
        if args.name != "region":
            bundle.name = args.name
    else:
        if not (args.nodes and args.edges):
            raise HazGridError("ingest needs --bundle or both --nodes and --edges")
        bundle = read_network(args.nodes, args.edges, name=args.name)
        for spec in args.raster:
            name, _, path = spec.partition("=")
            if not path:
                raise HazGridError(f"--raster expects NAME=PATH, got {spec!r}")
            bundle.rasters[name] = read_ascii_grid(path)
        for spec in args.polygons:
            name, _, path = spec.partition("=")
            if not path:
                raise HazGridError(f"--polygons expects NAME=PATH, got {spec!r}")
            bundle.polygon_sets[name] = read_geojson_polygons(path)
        if args.stations:
            bundle.point_sets["stations"] = read_points_csv(args.stations)
    bundle.validate()
    save_bundle(bundle, args.out)
    print(f"{bundle.name}: {len(bundle.nodes)} nodes, {len(bundle.edges)} edges, "
          f"checksum {bundle_checksum(bundle)}")


def _cmd_tessellate(args):
    bundle = load_bundle(args.bundle)
    model = RegionModel.build(bundle, edge_m=args.edge_m)
    model.layers.to_csv(args.out)
    outputs = [args.out]
    if args.geojson:
        model.layers.to_geojson_file(args.geojson)
        outputs.append(args.geojson)
    _write_manifest(args, bundle, outputs)
    print(f"{len(model.layers)} cells, edge {args.edge_m} m, "
          f"area {model.grid.cell_area_km2():.6f} km^2")


def _cmd_risk(args):
    bundle = load_bundle(args.bundle)
    scenario = _load_scenario(args)
    model = RegionModel.build(bundle, edge_m=args.edge_m)
    risk = model.risk_field(scenario)
    risk.to_csv(args.out)
    _write_manifest(args, bundle, [args.out])
    summary = risk.summary()
    print(f"{summary['cells']} cells, {summary['reachable_cells']} reachable, "
          f"mean RI {summary['mean_ri']:.6f}, max RI {summary['max_ri']:.6f}")


def _cmd_optimize(args):
    bundle = load_bundle(args.bundle)
    scenario = _load_scenario(args)
    model = RegionModel.build(bundle, edge_m=args.edge_m)
    spec = _objective_from_args(args)
    config = _config_from_args(args)
    if args.mode == "relocate":
        instance, result = run_relocation(model, scenario, spec, config, args.weight_by)
    else:
        instance, result = run_addition(model, scenario, args.delta, spec, config,
                                        args.weight_by)
    payload = optimization_report(model, instance, result)
    if instance.existing_cells or model.existing_station_cells():
        payload["compare"] = compare_report(model, instance, result)
    _write_json(args.out, payload)
    _write_manifest(args, bundle, [args.out])
    print(f"{args.mode}: objective {payload['objective']} "
          f"({result.method}, {len(result.open_cells)} stations)")


def _cmd_sweep(args):
    bundle = load_bundle(args.bundle)
    scenario = _load_scenario(args)
    model = RegionModel.build(bundle, edge_m=args.edge_m)
    spec = _objective_from_args(args)
    config = _config_from_args(args)
    instance, sweep = run_sweep(model, scenario, args.max_delta, spec, config,
                                eps=args.eps, weight_by=args.weight_by)
    payload = sweep_report(sweep)
    _write_json(args.out, payload)
    _write_manifest(args, bundle, [args.out])
    sat = sweep.saturation_delta
    print(f"sweep to +{args.max_delta}: saturation at "
          f"{'none' if sat is None else f'+{sat}'}")


def _cmd_scaling(args):
    bundle = load_bundle(args.bundle)
    model = RegionModel.build(bundle, edge_m=args.edge_m)
    counts = [int(tok) for tok in args.counts.split(",") if tok.strip()]
    if not counts:
        raise HazGridError("no facility counts given")
    config = SolveConfig(multi_start=args.multi_start, seed=args.seed)
    ns, means, opens = model.mean_distance_for_counts(counts, config=config)
    density = model.density_per_km2()
    pooled = [cell for cells in opens for cell in cells]
    coarse_edge = args.coarse_edge_m or 4.5 * model.grid.edge_m
    bins = bin_densities(model.layers, pooled, coarse_edge)
    beta = fit_beta(bins)
    capacity = continuum_capacity(density, model.grid.cell_area_km2())
    population = model.total_population()
    law = fit_power_law(ns, means)
    payload = {
        "counts": ns,
        "mean_seconds": [repr(v) for v in means],
        "per_capita": [repr(n / population) for n in ns],
        "beta": {"exponent": beta.exponent, "r_squared": beta.r_squared,
                 "n_points": beta.n_points, "coarse_edge_m": coarse_edge,
                 "bins_excluded": bins.excluded},
        "count_exponent": {"exponent": law.exponent, "r_squared": law.r_squared},
        "capacity": capacity,
        "population": population,
        "open_sets": [[[c.q, c.r] for c in cells] for cells in opens],
    }
    _write_json(args.out, payload)
    _write_manifest(args, bundle, [args.out])
    print(f"beta {beta.exponent:.4f} (r^2 {beta.r_squared:.4f}), "
          f"L-exponent {law.exponent:.4f}")


def _cmd_serve(args):
    from .service import serve

    serve(host=args.host, port=args.port, data_dir=args.data_dir,
          ui_dir=args.ui)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

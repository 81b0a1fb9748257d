"""hazgrid: hexagonal hazard grids, risk scoring, and station siting."""

__version__ = "0.1.0"

from .errors import (
    AlignmentError,
    BudgetError,
    CoordinateRangeError,
    FitError,
    GeometryError,
    HazGridError,
    InfeasibleError,
    InstanceError,
    LayerError,
    ParseError,
    ProjectionError,
    ReferentialError,
    ScenarioSpecError,
)
from .hexgrid import (
    CellId,
    HexGrid,
    LayerGrid,
    aggregate_points,
    aggregate_polygons,
    aggregate_polylines,
    aggregate_raster,
)
from .ingest import (
    AsciiGrid,
    Edge,
    Node,
    Point,
    PolygonFeature,
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
from .optimizer import (
    ObjectiveSpec,
    SitingInstance,
    SitingResult,
    SolveConfig,
    SweepResult,
    brute_force,
    evaluate_open,
    marginal_sweep,
    replace_existing,
    solve,
    solve_addition,
    solve_chain,
    solve_exact,
    solve_heuristic,
    solve_relocation,
)
from .pipeline import (
    DEFAULT_EDGE_M,
    RegionModel,
    run_addition,
    run_relocation,
    run_sweep,
)
from .riskmodel import (
    RiskField,
    ScenarioSpec,
    TransformSpec,
    compare_fields,
    compute_risk,
    preset_scenario,
)
from .scaling import (
    DensityBin,
    DensityBins,
    DistanceCurve,
    PowerLawFit,
    bin_densities,
    collapse_deviation,
    continuum_capacity,
    fit_beta,
    fit_power_law,
    predicted_mean_distance,
    saturation_point,
)
from .streetnet import StreetNetwork, TravelField, cell_travel_seconds

__all__ = [
    "AlignmentError", "AsciiGrid", "BudgetError", "CellId",
    "CoordinateRangeError", "DEFAULT_EDGE_M", "DensityBin", "DensityBins",
    "DistanceCurve", "Edge",
    "FitError", "GeometryError", "HazGridError", "HexGrid",
    "InfeasibleError", "InstanceError", "LayerError", "LayerGrid",
    "Node", "ObjectiveSpec", "ParseError", "Point", "PolygonFeature",
    "PowerLawFit", "ProjectionError", "ReferentialError", "RegionBundle",
    "RegionModel", "RiskField", "ScenarioSpec", "ScenarioSpecError",
    "SitingInstance", "SitingResult", "SolveConfig", "StreetNetwork",
    "SweepResult", "SynthSpec", "TransformSpec", "TravelField",
    "aggregate_points", "aggregate_polygons", "aggregate_polylines",
    "aggregate_raster", "bin_densities", "brute_force", "bundle_checksum",
    "cell_travel_seconds", "collapse_deviation", "compare_fields", "compute_risk",
    "continuum_capacity", "evaluate_open", "fit_beta", "fit_power_law",
    "load_bundle",
    "marginal_sweep", "predicted_mean_distance", "preset_scenario",
    "read_ascii_grid", "read_geojson_polygons", "read_network",
    "read_points_csv", "replace_existing", "run_addition", "run_relocation",
    "run_sweep", "saturation_point", "save_bundle", "solve", "solve_addition",
    "solve_chain", "solve_exact", "solve_heuristic", "solve_relocation",
    "synth_region",
]

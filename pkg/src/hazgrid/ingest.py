"""Region input parsing, synthesis, and canonical serialization.

A region arrives as plain files (CSV street network, ESRI-style ASCII
rasters, GeoJSON polygons, CSV point sets) and is held in memory as a
:class:`RegionBundle`. ``synth_region`` generates deterministic synthetic
regions for tests and scaling experiments.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    CoordinateRangeError,
    GeometryError,
    ParseError,
    ReferentialError,
)

EARTH_RADIUS_M = 6371008.8

# Legal default speeds by road class, applied when an edge row carries a
# length but no travel time.
DEFAULT_SPEED_KMH = {
    "motorway": 100.0,
    "primary": 60.0,
    "residential": 30.0,
    "service": 15.0,
}


class Node(NamedTuple):
    node_id: int
    lat: float
    lon: float


class Edge(NamedTuple):
    src: int
    dst: int
    travel_seconds: float
    length_m: Optional[float] = None


class Point(NamedTuple):
    lat: float
    lon: float
    value: Optional[float] = None


@dataclass
class AsciiGrid:
    """ESRI-style ASCII raster: header plus row-major values (row 0 on top)."""

    ncols: int
    nrows: int
    xllcorner: float
    yllcorner: float
    cellsize: float
    nodata: float
    values: np.ndarray  # shape (nrows, ncols), float64

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim == 1:
            self.values = self.values.reshape(self.nrows, self.ncols)
        if self.values.shape != (self.nrows, self.ncols):
            raise ParseError(
                f"expected {self.ncols * self.nrows} values, got {self.values.size}"
            )
        if self.cellsize <= 0:
            raise ParseError("cellsize must be positive")

    def valid_mask(self) -> np.ndarray:
        mask = self.values != self.nodata
        return mask & np.isfinite(self.values)

    def cell_centers(self):
        """Return (lats, lons) of every raster cell center, shape (nrows, ncols)."""
        cols = np.arange(self.ncols)
        rows = np.arange(self.nrows)
        lons = self.xllcorner + (cols + 0.5) * self.cellsize
        lats = self.yllcorner + (self.nrows - rows - 0.5) * self.cellsize
        return np.meshgrid(lats, lons, indexing="ij")[0], np.broadcast_to(
            lons, (self.nrows, self.ncols)
        )

    def __eq__(self, other):
        if not isinstance(other, AsciiGrid):
            return NotImplemented
        return (
            (self.ncols, self.nrows, self.xllcorner, self.yllcorner, self.cellsize, self.nodata)
            == (other.ncols, other.nrows, other.xllcorner, other.yllcorner, other.cellsize, other.nodata)
            and np.array_equal(self.values, other.values)
        )


@dataclass
class PolygonFeature:
    """One GeoJSON feature: one or more rings-with-holes plus attributes.

    ``parts`` is a list of (exterior, holes) where each ring is a closed
    list of (lat, lon) vertices (first == last).
    """

    feature_id: str
    parts: list
    properties: dict = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, PolygonFeature):
            return NotImplemented
        return (
            self.feature_id == other.feature_id
            and self.parts == other.parts
            and self.properties == other.properties
        )


@dataclass
class RegionBundle:
    """In-memory region inputs: street graph, rasters, points, polygons."""

    name: str
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    rasters: dict = field(default_factory=dict)
    point_sets: dict = field(default_factory=dict)
    polygon_sets: dict = field(default_factory=dict)

    def validate(self):
        ids = [n.node_id for n in self.nodes]
        if len(ids) != len(set(ids)):
            raise ParseError("duplicate node ids in bundle")
        known = set(ids)
        for e in self.edges:
            if e.src not in known or e.dst not in known:
                raise ReferentialError(
                    f"edge ({e.src},{e.dst}) references a node that does not exist"
                )
            if e.travel_seconds < 0:
                raise ParseError(f"edge ({e.src},{e.dst}) has negative travel time")
        return self

    def merge(self, other: "RegionBundle") -> "RegionBundle":
        """Combine two fragments (later entries win on name clashes)."""
        return RegionBundle(
            name=self.name or other.name,
            nodes=self.nodes + other.nodes,
            edges=self.edges + other.edges,
            rasters={**self.rasters, **other.rasters},
            point_sets={**self.point_sets, **other.point_sets},
            polygon_sets={**self.polygon_sets, **other.polygon_sets},
        )


def _check_latlon(lat, lon, line=None):
    if not (-90.0 <= lat <= 90.0):
        raise CoordinateRangeError(f"latitude {lat} outside [-90, 90]" + (f" (line {line})" if line else ""))
    if not (-180.0 <= lon <= 180.0):
        raise CoordinateRangeError(f"longitude {lon} outside [-180, 180]" + (f" (line {line})" if line else ""))


# ---------------------------------------------------------------------------
# Readers
# ---------------------------------------------------------------------------

def read_network(nodes_file, edges_file, name="") -> RegionBundle:
    """Parse ``nodes.csv`` + ``edges.csv`` into a graph-only bundle.

    Edge rows missing ``travel_seconds`` fall back to ``length_m`` at the
    legal default speed for their road class. ``oneway=0`` emits the
    reverse edge as well.
    """
    nodes = []
    seen = set()
    with open(nodes_file, newline="") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames, ["node_id", "lat", "lon"], nodes_file)
        for lineno, row in enumerate(reader, start=2):
            try:
                nid = int(row["node_id"])
                lat = float(row["lat"])
                lon = float(row["lon"])
            except (TypeError, ValueError) as exc:
                raise ParseError(f"bad node row {row}: {exc}", line=lineno) from None
            _check_latlon(lat, lon, line=lineno)
            if nid in seen:
                raise ParseError(f"duplicate node id {nid}", line=lineno)
            seen.add(nid)
            nodes.append(Node(nid, lat, lon))

    edges = []
    with open(edges_file, newline="") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames, ["from", "to"], edges_file)
        for lineno, row in enumerate(reader, start=2):
            try:
                src = int(row["from"])
                dst = int(row["to"])
            except (TypeError, ValueError) as exc:
                raise ParseError(f"bad edge row {row}: {exc}", line=lineno) from None
            if src not in seen or dst not in seen:
                missing = src if src not in seen else dst
                raise ReferentialError(
                    f"edge line {lineno} references unknown node {missing}"
                )
            length = _opt_float(row.get("length_m"))
            seconds = _opt_float(row.get("travel_seconds"))
            if seconds is None:
                road_class = (row.get("class") or "").strip()
                if length is None or road_class not in DEFAULT_SPEED_KMH:
                    raise ParseError(
                        "edge has neither travel_seconds nor a usable "
                        f"length_m/class pair (class={road_class!r})",
                        line=lineno,
                    )
                seconds = length * 3.6 / DEFAULT_SPEED_KMH[road_class]
            if seconds < 0:
                raise ParseError(f"negative travel_seconds {seconds}", line=lineno)
            edges.append(Edge(src, dst, seconds, length))
            oneway = (row.get("oneway") or "1").strip() or "1"
            if oneway not in ("0", "1"):
                raise ParseError(f"oneway must be 0 or 1, got {oneway!r}", line=lineno)
            if oneway == "0":
                edges.append(Edge(dst, src, seconds, length))

    return RegionBundle(name=name, nodes=nodes, edges=edges).validate()


def _require_columns(fieldnames, required, path):
    missing = [c for c in required if not fieldnames or c not in fieldnames]
    if missing:
        raise ParseError(f"{path}: missing columns {missing}", line=1)


def _opt_float(raw):
    if raw is None or str(raw).strip() == "":
        return None
    return float(raw)


_ASC_KEYS = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata"}


def read_ascii_grid(path) -> AsciiGrid:
    """Parse an ESRI-style ASCII grid (six header keys, then row-major values)."""
    header = {}
    values = []
    with open(path) as fh:
        lineno = 0
        for raw in fh:
            lineno += 1
            parts = raw.split()
            if not parts:
                continue
            key = parts[0].lower()
            if key == "nodata_value":
                key = "nodata"
            if key in _ASC_KEYS and len(parts) == 2 and key not in header:
                header[key] = parts[1]
                continue
            try:
                values.extend(float(tok) for tok in parts)
            except ValueError as exc:
                raise ParseError(f"bad raster value: {exc}", line=lineno) from None
    missing = _ASC_KEYS - header.keys()
    if missing:
        raise ParseError(f"{path}: missing header keys {sorted(missing)}", line=1)
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    if len(values) != ncols * nrows:
        raise ParseError(
            f"{path}: expected {ncols * nrows} values, got {len(values)}"
        )
    return AsciiGrid(
        ncols=ncols,
        nrows=nrows,
        xllcorner=float(header["xllcorner"]),
        yllcorner=float(header["yllcorner"]),
        cellsize=float(header["cellsize"]),
        nodata=float(header["nodata"]),
        values=np.array(values, dtype=np.float64).reshape(nrows, ncols),
    )


def read_points_csv(path) -> list:
    """Parse a ``lat,lon[,value]`` CSV. Duplicates are preserved in file order."""
    points = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames, ["lat", "lon"], path)
        for lineno, row in enumerate(reader, start=2):
            try:
                lat = float(row["lat"])
                lon = float(row["lon"])
            except (TypeError, ValueError) as exc:
                raise ParseError(f"bad point row: {exc}", line=lineno) from None
            _check_latlon(lat, lon, line=lineno)
            points.append(Point(lat, lon, _opt_float(row.get("value"))))
    return points


def read_geojson_polygons(path) -> list:
    """Parse an RFC 7946 FeatureCollection of Polygon/MultiPolygon features."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise ParseError(f"{path}: expected a FeatureCollection")
    features = []
    for i, feat in enumerate(doc.get("features", [])):
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        coords = geom.get("coordinates", [])
        if gtype == "Polygon":
            polys = [coords]
        elif gtype == "MultiPolygon":
            polys = coords
        else:
            raise ParseError(f"feature {i}: unsupported geometry type {gtype!r}")
        parts = []
        for poly in polys:
            rings = [_ring_latlon(ring, i) for ring in poly]
            if not rings:
                raise GeometryError(f"feature {i}: polygon with no rings")
            parts.append((rings[0], rings[1:]))
        fid = str(feat.get("id", i))
        features.append(PolygonFeature(fid, parts, dict(feat.get("properties") or {})))
    return features


def _ring_latlon(ring, feature_index):
    if len(ring) < 4:
        raise GeometryError(f"feature {feature_index}: ring with fewer than 4 positions")
    if ring[0] != ring[-1]:
        raise GeometryError(f"feature {feature_index}: ring is not closed")
    return [(float(lat), float(lon)) for lon, lat, *_ in ring]


# ---------------------------------------------------------------------------
# Synthetic regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthSpec:
    """Parameters for deterministic synthetic regions.

    Blob and hazard-field shapes are drawn in coordinates relative to the
    region bounding box, so two specs differing only in (n, m) and
    ``total_population`` produce homothetic regions.
    """

    spacing_m: float = 400.0
    total_population: float = 50_000.0
    n_blobs: int = 3
    pop_floor: float = 0.02          # uniform share of total population
    pop_peak_ratio: float = 150.0    # blob peak density over floor density
    n_hazard_bumps: int = 4
    speed_kmh: float = 40.0
    speed_jitter: float = 0.0        # relative perturbation of edge times
    n_stations: int = 12
    ros_max_kmh: float = 9.0
    fi_max_kwh: float = 4.1
    mhv_scale: float = 750_000.0
    origin_lat: float = 37.0
    origin_lon: float = -120.0
    raster_oversample: int = 1


def synth_region(seed: int, n: int, m: int, spec: SynthSpec | None = None) -> RegionBundle:
    """Generate a deterministic n x m lattice region.

    The street network is a bidirectional grid (``2*(2nm - n - m)`` directed
    edges). POP is a mixture of Gaussian blobs normalized to the requested
    total; ROS/FI are smooth random bump fields capped at the configured
    maxima; stations are lattice nodes drawn from the same stream.
    """
    if n < 2 or m < 2:
        raise ValueError("synthetic regions need n >= 2 and m >= 2")
    spec = spec or SynthSpec()
    rng = np.random.default_rng(seed)

    # Relative-coordinate draws come first so they are independent of (n, m).
    blobs = [
        (rng.uniform(0.18, 0.82), rng.uniform(0.18, 0.82), rng.uniform(0.07, 0.20), rng.uniform(0.5, 1.0))
        for _ in range(spec.n_blobs)
    ]
    ros_bumps = _draw_bumps(rng, spec.n_hazard_bumps)
    fi_bumps = _draw_bumps(rng, spec.n_hazard_bumps)
    ros_level = rng.uniform(0.6, 1.0)
    fi_level = rng.uniform(0.6, 1.0)
    station_uv = rng.uniform(0.05, 0.95, size=(spec.n_stations, 2))

    # Node lattice in local meters, then into degrees around the origin.
    coslat = math.cos(math.radians(spec.origin_lat))
    dlat = spec.spacing_m / EARTH_RADIUS_M * 180.0 / math.pi
    dlon = spec.spacing_m / (EARTH_RADIUS_M * coslat) * 180.0 / math.pi
    nodes = []
    for j in range(m):
        for i in range(n):
            nodes.append(Node(j * n + i, spec.origin_lat + j * dlat, spec.origin_lon + i * dlon))

    base_seconds = spec.spacing_m * 3.6 / spec.speed_kmh
    edges = []
    for j in range(m):
        for i in range(n):
            nid = j * n + i
            if i + 1 < n:
                secs = base_seconds * _jitter(rng, spec.speed_jitter)
                edges.append(Edge(nid, nid + 1, secs, spec.spacing_m))
                edges.append(Edge(nid + 1, nid, secs, spec.spacing_m))
            if j + 1 < m:
                secs = base_seconds * _jitter(rng, spec.speed_jitter)
                edges.append(Edge(nid, nid + n, secs, spec.spacing_m))
                edges.append(Edge(nid + n, nid, secs, spec.spacing_m))

    # Raster bbox covers the lattice plus half a spacing on every side.
    lat_min = spec.origin_lat - 0.5 * dlat
    lat_max = spec.origin_lat + (m - 0.5) * dlat
    lon_min = spec.origin_lon - 0.5 * dlon
    lon_max = spec.origin_lon + (n - 0.5) * dlon
    k = max(1, int(spec.raster_oversample))
    nrows, ncols = m * k, n * k
    cell_lat = (lat_max - lat_min) / nrows
    cell_lon = (lon_max - lon_min) / ncols
    cellsize = min(cell_lat, cell_lon)
    # Recompute counts so square cells still cover the bbox.
    nrows = int(math.ceil((lat_max - lat_min) / cellsize))
    ncols = int(math.ceil((lon_max - lon_min) / cellsize))

    uu, vv = _relative_grid(nrows, ncols, lat_min, lon_min, cellsize, lat_min, lat_max, lon_min, lon_max)

    pop = _blob_field(uu, vv, blobs)
    pop = spec.pop_floor / max(pop.size, 1) + (1.0 - spec.pop_floor) * pop / pop.sum()
    # Keep the floor genuinely flat: floor mass spread uniformly, blob mass on top.
    pop = pop * spec.total_population / pop.sum()

    ros = _bump_field(uu, vv, ros_bumps)
    ros = ros / ros.max() * spec.ros_max_kmh * ros_level if ros.max() > 0 else ros
    fi = _bump_field(uu, vv, fi_bumps)
    fi = fi / fi.max() * spec.fi_max_kwh * fi_level if fi.max() > 0 else fi

    pop_norm = pop / pop.max() if pop.max() > 0 else pop
    mhv = spec.mhv_scale * (0.25 + 0.75 * np.sqrt(pop_norm))

    def _grid(values):
        return AsciiGrid(
            ncols=ncols,
            nrows=nrows,
            xllcorner=lon_min,
            yllcorner=lat_min,
            cellsize=cellsize,
            nodata=-9999.0,
            values=values,
        )

    stations = []
    for u, v in station_uv:
        i = int(round(u * (n - 1)))
        j = int(round(v * (m - 1)))
        node = nodes[j * n + i]
        stations.append(Point(node.lat, node.lon, None))

    bundle = RegionBundle(
        name=f"synth-{seed}-{n}x{m}",
        nodes=nodes,
        edges=edges,
        rasters={"POP": _grid(pop), "MHV": _grid(mhv), "ROS": _grid(ros), "FI": _grid(fi)},
        point_sets={"stations": stations},
    )
    return bundle.validate()


def _draw_bumps(rng, count):
    return [
        (rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.08, 0.30), rng.uniform(0.3, 1.0))
        for _ in range(count)
    ]


def _jitter(rng, amount):
    if amount <= 0:
        return 1.0
    return 1.0 + rng.uniform(-amount, amount)


def _relative_grid(nrows, ncols, yll, xll, cellsize, lat_min, lat_max, lon_min, lon_max):
    rows = np.arange(nrows)
    cols = np.arange(ncols)
    lats = yll + (nrows - rows - 0.5) * cellsize
    lons = xll + (cols + 0.5) * cellsize
    vv = (lats - lat_min) / (lat_max - lat_min)
    uu = (lons - lon_min) / (lon_max - lon_min)
    return np.meshgrid(uu, vv, indexing="xy")[0], np.tile(vv[:, None], (1, ncols))


def _blob_field(uu, vv, blobs):
    out = np.zeros_like(uu)
    for cu, cv, sigma, amp in blobs:
        out += amp * np.exp(-((uu - cu) ** 2 + (vv - cv) ** 2) / (2 * sigma**2))
    return out


def _bump_field(uu, vv, bumps):
    out = np.zeros_like(uu)
    for cu, cv, sigma, amp in bumps:
        out += amp * np.exp(-((uu - cu) ** 2 + (vv - cv) ** 2) / (2 * sigma**2))
    return out


# ---------------------------------------------------------------------------
# Canonical serialization (round-trip identity, checksums)
# ---------------------------------------------------------------------------

def write_network(bundle: RegionBundle, nodes_file, edges_file):
    with open(nodes_file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "lat", "lon"])
        for nd in bundle.nodes:
            w.writerow([nd.node_id, repr(nd.lat), repr(nd.lon)])
    with open(edges_file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["from", "to", "travel_seconds", "length_m", "class", "oneway"])
        for e in bundle.edges:
            w.writerow([e.src, e.dst, repr(e.travel_seconds),
                        "" if e.length_m is None else repr(e.length_m), "", "1"])


def write_ascii_grid(grid: AsciiGrid, path):
    with open(path, "w") as fh:
        fh.write(f"ncols {grid.ncols}\n")
        fh.write(f"nrows {grid.nrows}\n")
        fh.write(f"xllcorner {grid.xllcorner!r}\n")
        fh.write(f"yllcorner {grid.yllcorner!r}\n")
        fh.write(f"cellsize {grid.cellsize!r}\n")
        fh.write(f"nodata {grid.nodata!r}\n")
        for row in grid.values:
            fh.write(" ".join(repr(v) for v in row.tolist()) + "\n")


def write_points_csv(points: Sequence[Point], path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lat", "lon", "value"])
        for p in points:
            w.writerow([repr(p.lat), repr(p.lon), "" if p.value is None else repr(p.value)])


def write_geojson_polygons(features: Sequence[PolygonFeature], path):
    doc = {"type": "FeatureCollection", "features": []}
    for feat in features:
        coords = [
            [[[lon, lat] for lat, lon in ring] for ring in [exterior] + list(holes)]
            for exterior, holes in feat.parts
        ]
        if len(coords) == 1:
            geometry = {"type": "Polygon", "coordinates": coords[0]}
        else:
            geometry = {"type": "MultiPolygon", "coordinates": coords}
        doc["features"].append(
            {"type": "Feature", "id": feat.feature_id, "geometry": geometry,
             "properties": feat.properties}
        )
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))


def save_bundle(bundle: RegionBundle, directory):
    """Write a bundle as its canonical on-disk layout (deterministic bytes)."""
    os.makedirs(directory, exist_ok=True)
    write_network(bundle, os.path.join(directory, "nodes.csv"), os.path.join(directory, "edges.csv"))
    manifest = {
        "name": bundle.name,
        "rasters": sorted(bundle.rasters),
        "point_sets": sorted(bundle.point_sets),
        "polygon_sets": sorted(bundle.polygon_sets),
    }
    for sub in ("rasters", "points", "polygons"):
        os.makedirs(os.path.join(directory, sub), exist_ok=True)
    for name in sorted(bundle.rasters):
        write_ascii_grid(bundle.rasters[name], os.path.join(directory, "rasters", f"{name}.asc"))
    for name in sorted(bundle.point_sets):
        write_points_csv(bundle.point_sets[name], os.path.join(directory, "points", f"{name}.csv"))
    for name in sorted(bundle.polygon_sets):
        write_geojson_polygons(bundle.polygon_sets[name], os.path.join(directory, "polygons", f"{name}.geojson"))
    with open(os.path.join(directory, "bundle.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)


def load_bundle(directory) -> RegionBundle:
    with open(os.path.join(directory, "bundle.json")) as fh:
        manifest = json.load(fh)
    bundle = read_network(
        os.path.join(directory, "nodes.csv"),
        os.path.join(directory, "edges.csv"),
        name=manifest["name"],
    )
    for name in manifest["rasters"]:
        bundle.rasters[name] = read_ascii_grid(os.path.join(directory, "rasters", f"{name}.asc"))
    for name in manifest["point_sets"]:
        bundle.point_sets[name] = read_points_csv(os.path.join(directory, "points", f"{name}.csv"))
    for name in manifest["polygon_sets"]:
        bundle.polygon_sets[name] = read_geojson_polygons(os.path.join(directory, "polygons", f"{name}.geojson"))
    return bundle.validate()


def bundle_checksum(bundle: RegionBundle) -> str:
    """SHA-256 over the canonical serialization (order-stable, repr floats)."""
    h = hashlib.sha256()
    buf = io.StringIO()
    buf.write(bundle.name + "\n")
    for nd in bundle.nodes:
        buf.write(f"N,{nd.node_id},{nd.lat!r},{nd.lon!r}\n")
    for e in bundle.edges:
        buf.write(f"E,{e.src},{e.dst},{e.travel_seconds!r},{'' if e.length_m is None else repr(e.length_m)}\n")
    for name in sorted(bundle.rasters):
        g = bundle.rasters[name]
        buf.write(f"R,{name},{g.ncols},{g.nrows},{g.xllcorner!r},{g.yllcorner!r},{g.cellsize!r},{g.nodata!r}\n")
    for name in sorted(bundle.point_sets):
        for p in bundle.point_sets[name]:
            buf.write(f"P,{name},{p.lat!r},{p.lon!r},{'' if p.value is None else repr(p.value)}\n")
    for name in sorted(bundle.polygon_sets):
        for feat in bundle.polygon_sets[name]:
            buf.write(f"G,{name},{feat.feature_id},{json.dumps(feat.parts)},{json.dumps(feat.properties, sort_keys=True)}\n")
    h.update(buf.getvalue().encode())
    for name in sorted(bundle.rasters):
        h.update(bundle.rasters[name].values.tobytes())
    return h.hexdigest()

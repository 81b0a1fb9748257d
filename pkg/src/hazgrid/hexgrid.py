"""Planar hexagonal tessellation and zonal aggregation.

Cells are pointy-top hexagons addressed by axial (q, r) integer
coordinates on a local tangent plane. The plane is an equirectangular
projection anchored at a region centroid; it is only trusted within
500 km of the anchor.

Aggregators map point sets, rasters, polylines, and polygons onto the
cell set. Polyline length is attributed by exact cell-walk traversal
(every meter of every segment lands in exactly one cell), polygon area
by half-plane clipping, so both conserve totals to float precision.
"""

from __future__ import annotations

import csv
import json
import math
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import GeometryError, LayerError, ProjectionError
from .ingest import EARTH_RADIUS_M, AsciiGrid, Point, PolygonFeature

SQRT3 = math.sqrt(3.0)
MAX_PLANAR_RANGE_M = 500_000.0


class CellId(NamedTuple):
    """Axial hexagon address. Tuple ordering doubles as the tie-break order."""

    q: int
    r: int


AXIAL_NEIGHBORS = (
    CellId(1, 0), CellId(1, -1), CellId(0, -1),
    CellId(-1, 0), CellId(-1, 1), CellId(0, 1),
)


class HexGrid:
    """A set of hexagonal cells over a local planar frame.

    ``origin_lat``/``origin_lon`` anchor the projection; ``edge_m`` is the
    hexagon edge (circumradius) in meters.
    """

    def __init__(self, origin_lat: float, origin_lon: float, edge_m: float,
                 cells: Optional[Iterable[CellId]] = None):
        if edge_m <= 0:
            raise GeometryError("hexagon edge length must be positive")
        if not (-90.0 <= origin_lat <= 90.0) or not (-180.0 <= origin_lon <= 180.0):
            raise ProjectionError("grid origin outside lat/lon range")
        self.origin_lat = float(origin_lat)
        self.origin_lon = float(origin_lon)
        self.edge_m = float(edge_m)
        self._coslat = math.cos(math.radians(self.origin_lat))
        if self._coslat <= 1e-9:
            raise ProjectionError("grid origin too close to a pole")
        self.cells: set[CellId] = set(CellId(*c) for c in cells) if cells else set()

    # -- projection ---------------------------------------------------------

    def project(self, lat, lon):
        """Lat/lon degrees to local meters. Vectorizes over numpy arrays."""
        lat = np.asarray(lat, dtype=np.float64)
        lon = np.asarray(lon, dtype=np.float64)
        x = np.radians(lon - self.origin_lon) * EARTH_RADIUS_M * self._coslat
        y = np.radians(lat - self.origin_lat) * EARTH_RADIUS_M
        dist = np.hypot(x, y)
        if np.any(dist > MAX_PLANAR_RANGE_M):
            worst = float(np.max(dist))
            raise ProjectionError(
                f"point {worst / 1000.0:.1f} km from grid origin exceeds the "
                f"{MAX_PLANAR_RANGE_M / 1000.0:.0f} km planar validity range"
            )
        if x.ndim == 0:
            return float(x), float(y)
        return x, y

    def unproject(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        lat = self.origin_lat + np.degrees(y / EARTH_RADIUS_M)
        lon = self.origin_lon + np.degrees(x / (EARTH_RADIUS_M * self._coslat))
        if lat.ndim == 0:
            return float(lat), float(lon)
        return lat, lon

    # -- axial geometry -----------------------------------------------------

    def cell_center_xy(self, cell: CellId) -> Tuple[float, float]:
        e = self.edge_m
        return e * SQRT3 * (cell.q + cell.r / 2.0), e * 1.5 * cell.r

    def cell_centers_xy(self, cells: Sequence[CellId]):
        arr = np.asarray(cells, dtype=np.float64).reshape(-1, 2)
        q, r = arr[:, 0], arr[:, 1]
        return self.edge_m * SQRT3 * (q + r / 2.0), self.edge_m * 1.5 * r

    def cell_center(self, cell: CellId) -> Tuple[float, float]:
        """Center as (lat, lon)."""
        return self.unproject(*self.cell_center_xy(cell))

    def cell_of_xy(self, x, y):
        """Planar point(s) to containing cell via cube rounding."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        qf = (SQRT3 / 3.0 * x - y / 3.0) / self.edge_m
        rf = (2.0 / 3.0 * y) / self.edge_m
        sf = -qf - rf
        q = np.rint(qf)
        r = np.rint(rf)
        s = np.rint(sf)
        dq = np.abs(q - qf)
        dr = np.abs(r - rf)
        ds = np.abs(s - sf)
        fix_q = (dq > dr) & (dq > ds)
        fix_r = ~fix_q & (dr > ds)
        q = np.where(fix_q, -r - s, q)
        r = np.where(fix_r, -q - s, r)
        if q.ndim == 0:
            return CellId(int(q), int(r))
        return q.astype(np.int64), r.astype(np.int64)

    def cell_of(self, lat: float, lon: float) -> CellId:
        return self.cell_of_xy(*self.project(lat, lon))

    def cell_polygon_xy(self, cell: CellId) -> List[Tuple[float, float]]:
        """Six corners counterclockwise, starting at angle -30 degrees."""
        cx, cy = self.cell_center_xy(cell)
        corners = []
        for k in range(6):
            ang = math.radians(60.0 * k - 30.0)
            corners.append((cx + self.edge_m * math.cos(ang), cy + self.edge_m * math.sin(ang)))
        return corners

    def cell_polygon(self, cell: CellId) -> List[Tuple[float, float]]:
        """Six corners as (lat, lon), counterclockwise, not closed."""
        return [self.unproject(x, y) for x, y in self.cell_polygon_xy(cell)]

    def neighbors(self, cell: CellId) -> List[CellId]:
        """The (up to six) adjacent cells present in this grid."""
        out = []
        for d in AXIAL_NEIGHBORS:
            cand = CellId(cell.q + d.q, cell.r + d.r)
            if cand in self.cells:
                out.append(cand)
        return out

    def cell_area_km2(self) -> float:
        return 1.5 * SQRT3 * self.edge_m**2 * 1e-6

    # -- constructors -------------------------------------------------------

    @classmethod
    def covering_points(cls, lats, lons, edge_m: float,
                        origin: Optional[Tuple[float, float]] = None) -> "HexGrid":
        """Grid whose cell set is exactly the cells containing the points.

        The projection anchors at the point centroid unless ``origin`` is
        given explicitly.
        """
        lats = np.asarray(lats, dtype=np.float64)
        lons = np.asarray(lons, dtype=np.float64)
        if lats.size == 0:
            raise GeometryError("cannot build a grid over zero points")
        if origin is None:
            origin = (float(lats.mean()), float(lons.mean()))
        grid = cls(origin[0], origin[1], edge_m)
        x, y = grid.project(lats, lons)
        q, r = grid.cell_of_xy(np.atleast_1d(x), np.atleast_1d(y))
        grid.cells = set(CellId(int(a), int(b)) for a, b in zip(q, r))
        return grid

    def extend_to_connected(self) -> "HexGrid":
        """Add cells so that the cell set is edge-connected (fills gaps on
        shortest axial paths toward the dominant component)."""
        if not self.cells:
            return self
        comps = self._components()
        comps.sort(key=lambda c: (-len(c), sorted(c)[0]))
        main = set(comps[0])
        for comp in comps[1:]:
            src = min(comp)
            dst = min(main, key=lambda c: (_hex_distance(c, src), c))
            for step in _axial_line(src, dst):
                main.add(step)
            main.update(comp)
        self.cells = main
        return self

    def _components(self):
        seen = set()
        comps = []
        for start in sorted(self.cells):
            if start in seen:
                continue
            stack = [start]
            comp = []
            seen.add(start)
            while stack:
                cur = stack.pop()
                comp.append(cur)
                for nb in self.neighbors(cur):
                    if nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
            comps.append(comp)
        return comps


def _hex_distance(a: CellId, b: CellId) -> int:
    dq = a.q - b.q
    dr = a.r - b.r
    return (abs(dq) + abs(dr) + abs(dq + dr)) // 2


def _axial_line(a: CellId, b: CellId) -> List[CellId]:
    n = _hex_distance(a, b)
    if n == 0:
        return [a]
    out = []
    for i in range(n + 1):
        t = i / n
        qf = a.q + (b.q - a.q) * t
        rf = a.r + (b.r - a.r) * t
        sf = -qf - rf
        q, r, s = round(qf), round(rf), round(sf)
        dq, dr, ds = abs(q - qf), abs(r - rf), abs(s - sf)
        if dq > dr and dq > ds:
            q = -r - s
        elif dr > ds:
            r = -q - s
        out.append(CellId(int(q), int(r)))
    return out


# ---------------------------------------------------------------------------
# Layer container
# ---------------------------------------------------------------------------

class LayerGrid:
    """A HexGrid plus named per-cell value arrays sharing one cell order.

    Cell order is the sorted (q, r) order; every layer is a float64 array
    aligned to it.
    """

    def __init__(self, grid: HexGrid):
        self.grid = grid
        self.cell_order: List[CellId] = sorted(grid.cells)
        self.index: Dict[CellId, int] = {c: i for i, c in enumerate(self.cell_order)}
        self.layers: Dict[str, np.ndarray] = {}
        self.stats: Dict[str, dict] = {}

    def __len__(self):
        return len(self.cell_order)

    def set_layer(self, name: str, values, default: float = 0.0, strict: bool = False):
        """Install a layer from a mapping or aligned array.

        Mapping keys outside the grid are an error when ``strict``; cells
        with no entry take ``default``.
        """
        if isinstance(values, dict):
            arr = np.full(len(self.cell_order), default, dtype=np.float64)
            for cell, val in values.items():
                cid = CellId(*cell)
                idx = self.index.get(cid)
                if idx is None:
                    if strict:
                        raise LayerError(f"layer {name!r} addresses cell {cid} outside the grid")
                    continue
                arr[idx] = val
        else:
            arr = np.asarray(values, dtype=np.float64)
            if arr.shape != (len(self.cell_order),):
                raise LayerError(
                    f"layer {name!r} has {arr.size} values for {len(self.cell_order)} cells"
                )
            arr = arr.copy()
        if name == "POP" and np.any(arr < 0):
            raise LayerError("POP layer must be non-negative")
        self.layers[name] = arr
        return arr

    def layer(self, name: str) -> np.ndarray:
        if name not in self.layers:
            raise LayerError(f"unknown layer {name!r}")
        return self.layers[name]

    def has_layer(self, name: str) -> bool:
        return name in self.layers

    def cell_values(self, name: str) -> Dict[CellId, float]:
        arr = self.layer(name)
        return {c: float(arr[i]) for i, c in enumerate(self.cell_order)}

    def to_csv(self, path, layer_names: Optional[Sequence[str]] = None):
        names = list(layer_names) if layer_names else sorted(self.layers)
        for nm in names:
            self.layer(nm)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["q", "r"] + names)
            for i, cell in enumerate(self.cell_order):
                w.writerow([cell.q, cell.r] + [repr(float(self.layers[nm][i])) for nm in names])

    def to_geojson(self, layer_names: Optional[Sequence[str]] = None) -> dict:
        """FeatureCollection of hexagon polygons with layer properties."""
        names = list(layer_names) if layer_names else sorted(self.layers)
        feats = []
        for i, cell in enumerate(self.cell_order):
            ring = [[lon, lat] for lat, lon in self.grid.cell_polygon(cell)]
            ring.append(ring[0])
            props = {"q": cell.q, "r": cell.r}
            for nm in names:
                props[nm] = float(self.layers[nm][i])
            feats.append({
                "type": "Feature",
                "id": f"{cell.q},{cell.r}",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": props,
            })
        return {"type": "FeatureCollection", "features": feats}

    def to_geojson_file(self, path, layer_names: Optional[Sequence[str]] = None):
        with open(path, "w") as fh:
            json.dump(self.to_geojson(layer_names), fh, sort_keys=True)


def read_layer_csv(path) -> Dict[str, Dict[CellId, float]]:
    """Read a ``q,r,layer...`` CSV back into per-layer cell mappings."""
    out: Dict[str, Dict[CellId, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = [c for c in (reader.fieldnames or []) if c not in ("q", "r")]
        for nm in names:
            out[nm] = {}
        for row in reader:
            cell = CellId(int(row["q"]), int(row["r"]))
            for nm in names:
                out[nm][cell] = float(row[nm])
    return out


# ---------------------------------------------------------------------------
# Aggregators
# ---------------------------------------------------------------------------

def aggregate_points(grid: HexGrid, points: Sequence[Point],
                     use_values: bool = False) -> Dict[CellId, float]:
    """Count points (or sum their values) per cell. Duplicates all count."""
    out: Dict[CellId, float] = {}
    for p in points:
        cell = grid.cell_of(p.lat, p.lon)
        if use_values:
            if p.value is None:
                raise LayerError("point has no value to sum")
            out[cell] = out.get(cell, 0.0) + p.value
        else:
            out[cell] = out.get(cell, 0.0) + 1.0
    return out


_RASTER_MODES = ("mean", "sum", "std", "median", "mode", "min", "max")


def aggregate_raster(grid: HexGrid, raster: AsciiGrid, mode: str = "mean"):
    """Zonal statistic of raster cells per hexagon, by center containment.

    ``mode='proportions'`` returns {value: {cell: fraction}} where each
    cell's fractions sum to one; scalar modes return {cell: stat}. Mode
    ties resolve to the smallest value.
    """
    if mode != "proportions" and mode not in _RASTER_MODES:
        raise LayerError(f"unknown raster aggregation mode {mode!r}")
    mask = raster.valid_mask()
    if not np.any(mask):
        raise LayerError("raster has no valid cells")
    lats, lons = raster.cell_centers()
    lats = lats[mask]
    lons = np.asarray(lons)[mask]
    vals = raster.values[mask]
    x, y = grid.project(lats, lons)
    q, r = grid.cell_of_xy(np.atleast_1d(x), np.atleast_1d(y))

    keys = np.stack([q, r], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    cells = [CellId(int(a), int(b)) for a, b in uniq]
    if grid.cells and not any(c in grid.cells for c in cells):
        raise LayerError("raster does not overlap the grid")

    if mode == "proportions":
        out: Dict[float, Dict[CellId, float]] = {}
        counts = np.bincount(inverse, minlength=len(cells)).astype(np.float64)
        for value in np.unique(vals):
            sel = vals == value
            per_cell = np.bincount(inverse[sel], minlength=len(cells)).astype(np.float64)
            frac = per_cell / counts
            out[float(value)] = {
                cells[i]: float(frac[i]) for i in range(len(cells)) if per_cell[i] > 0
            }
        return out

    out_scalar: Dict[CellId, float] = {}
    if mode == "sum":
        sums = np.bincount(inverse, weights=vals, minlength=len(cells))
        return {cells[i]: float(sums[i]) for i in range(len(cells))}
    if mode == "mean":
        sums = np.bincount(inverse, weights=vals, minlength=len(cells))
        counts = np.bincount(inverse, minlength=len(cells))
        return {cells[i]: float(sums[i] / counts[i]) for i in range(len(cells))}

    order = np.argsort(inverse, kind="stable")
    sorted_vals = vals[order]
    sorted_inv = inverse[order]
    bounds = np.searchsorted(sorted_inv, np.arange(len(cells) + 1))
    for i in range(len(cells)):
        group = sorted_vals[bounds[i]:bounds[i + 1]]
        if mode == "min":
            stat = group.min()
        elif mode == "max":
            stat = group.max()
        elif mode == "median":
            stat = np.median(group)
        elif mode == "std":
            stat = group.std()
        else:  # mode statistic; ties take the smallest value
            values, counts = np.unique(group, return_counts=True)
            stat = values[np.argmax(counts)]
        out_scalar[cells[i]] = float(stat)
    return out_scalar


def aggregate_polylines(grid: HexGrid, lines: Sequence[Sequence[Tuple[float, float]]]
                        ) -> Dict[CellId, float]:
    """Total polyline length (meters) per cell by exact traversal.

    Each segment is walked cell to cell using the exit point through the
    current hexagon's boundary, so the per-cell lengths sum to the exact
    planar length of the input.
    """
    out: Dict[CellId, float] = {}
    for line in lines:
        if len(line) < 2:
            continue
        pts = [grid.project(lat, lon) for lat, lon in line]
        for (ax, ay), (bx, by) in zip(pts[:-1], pts[1:]):
            for cell, length in _walk_segment(grid, ax, ay, bx, by):
                out[cell] = out.get(cell, 0.0) + length
    return out


def _walk_segment(grid: HexGrid, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    seg_len = math.hypot(dx, dy)
    if seg_len == 0.0:
        return
    t = 0.0
    cell = grid.cell_of_xy(ax, ay)
    # Unit normals of the six half-planes bounding a pointy-top hexagon;
    # the inradius bounds u . (P - center).
    normals = [(math.cos(math.radians(60.0 * k)), math.sin(math.radians(60.0 * k)))
               for k in range(6)]
    inradius = grid.edge_m * SQRT3 / 2.0
    max_steps = int(seg_len / inradius) * 4 + 16
    for _ in range(max_steps):
        cx, cy = grid.cell_center_xy(cell)
        t_out = 1.0
        for ux, uy in normals:
            denom = ux * dx + uy * dy
            if denom <= 0.0:
                continue
            # u . (A + t d - C) = inradius  =>  exit through this face
            t_face = (inradius - (ux * (ax - cx) + uy * (ay - cy))) / denom
            if t_face < t_out:
                t_out = t_face
        t_out = min(max(t_out, t), 1.0)
        if t_out > t:
            yield cell, (t_out - t) * seg_len
        if t_out >= 1.0:
            return
        probe = min(t_out + 1e-9, 1.0)
        nxt = grid.cell_of_xy(ax + dx * probe, ay + dy * probe)
        if nxt == cell:
            # Numerical stall on a corner: nudge forward without attribution.
            probe = min(t_out + 1e-7, 1.0)
            nxt = grid.cell_of_xy(ax + dx * probe, ay + dy * probe)
        cell = nxt
        t = t_out
    raise GeometryError("segment traversal failed to terminate")


def aggregate_polygons(grid: HexGrid, features: Sequence[PolygonFeature],
                       value_attr: Optional[str] = None) -> Dict[CellId, float]:
    """Intersection area (m^2) per cell, or areal interpolation of an attribute.

    With ``value_attr``, each feature spreads ``attr * (overlap / polygon
    area)`` over the cells it touches; holes subtract.
    """
    out: Dict[CellId, float] = {}
    for feat in features:
        areas: Dict[CellId, float] = {}
        total = 0.0
        for exterior, holes in feat.parts:
            total += _ring_overlap(grid, exterior, areas, +1.0)
            for hole in holes:
                total += _ring_overlap(grid, hole, areas, -1.0)
        if value_attr is not None:
            if value_attr not in feat.properties:
                raise LayerError(f"feature {feat.feature_id} lacks attribute {value_attr!r}")
            if total <= 0.0:
                raise GeometryError(
                    f"feature {feat.feature_id} has zero area; cannot spread {value_attr!r}"
                )
            val = float(feat.properties[value_attr])
            for cell, a in areas.items():
                out[cell] = out.get(cell, 0.0) + val * (a / total)
        else:
            for cell, a in areas.items():
                out[cell] = out.get(cell, 0.0) + a
    return {c: v for c, v in out.items() if v != 0.0}


def _ring_overlap(grid: HexGrid, ring, areas: Dict[CellId, float], sign: float) -> float:
    pts = [grid.project(lat, lon) for lat, lon in ring]
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts = pts[:-1]
    if len(pts) < 3:
        raise GeometryError("ring with fewer than 3 distinct vertices")
    ring_area = abs(_shoelace(pts))
    if ring_area == 0.0:
        return 0.0
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    for cell in _bbox_cells(grid, min(xs), min(ys), max(xs), max(ys)):
        clipped = _clip_to_hex(grid, cell, pts)
        if len(clipped) >= 3:
            a = abs(_shoelace(clipped))
            if a > 0.0:
                areas[cell] = areas.get(cell, 0.0) + sign * a
    return sign * ring_area


def _shoelace(pts) -> float:
    area = 0.0
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return 0.5 * area


def _bbox_cells(grid: HexGrid, xmin, ymin, xmax, ymax):
    e = grid.edge_m
    r_lo = int(math.floor(ymin / (1.5 * e))) - 1
    r_hi = int(math.ceil(ymax / (1.5 * e))) + 1
    for r in range(r_lo, r_hi + 1):
        q_lo = int(math.floor(xmin / (SQRT3 * e) - r / 2.0)) - 1
        q_hi = int(math.ceil(xmax / (SQRT3 * e) - r / 2.0)) + 1
        for q in range(q_lo, q_hi + 1):
            yield CellId(q, r)


def _clip_to_hex(grid: HexGrid, cell: CellId, pts):
    """Sutherland-Hodgman clip of a ring against the hexagon's six half-planes."""
    cx, cy = grid.cell_center_xy(cell)
    inradius = grid.edge_m * SQRT3 / 2.0
    poly = pts
    for k in range(6):
        ux = math.cos(math.radians(60.0 * k))
        uy = math.sin(math.radians(60.0 * k))
        if not poly:
            return poly
        new_poly = []
        prev = poly[-1]
        prev_d = ux * (prev[0] - cx) + uy * (prev[1] - cy) - inradius
        for cur in poly:
            cur_d = ux * (cur[0] - cx) + uy * (cur[1] - cy) - inradius
            if cur_d <= 0.0:
                if prev_d > 0.0:
                    new_poly.append(_plane_cross(prev, cur, prev_d, cur_d))
                new_poly.append(cur)
            elif prev_d <= 0.0:
                new_poly.append(_plane_cross(prev, cur, prev_d, cur_d))
            prev, prev_d = cur, cur_d
        poly = new_poly
    return poly


def _plane_cross(p1, p2, d1, d2):
    t = d1 / (d1 - d2)
    return (p1[0] + t * (p2[0] - p1[0]), p1[1] + t * (p2[1] - p1[1]))

import json
import math

import numpy as np
import pytest

from hazgrid.errors import (
    CoordinateRangeError,
    GeometryError,
    ParseError,
    ReferentialError,
)
from hazgrid.ingest import (
    AsciiGrid,
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
    write_ascii_grid,
)


def write(path, text):
    path.write_text(text)
    return str(path)


class TestReadNetwork:
    def test_two_nodes_one_edge(self, tmp_path):
        nodes = write(tmp_path / "n.csv", "node_id,lat,lon\n1,37.0,-120.0\n2,37.001,-120.0\n")
        edges = write(tmp_path / "e.csv", "from,to,travel_seconds\n1,2,60\n")
        bundle = read_network(nodes, edges)
        assert len(bundle.nodes) == 2
        assert len(bundle.edges) == 1
        assert bundle.edges[0].travel_seconds == 60.0

    def test_default_speed_residential(self, tmp_path):
        # 500 m at 30 km/h is exactly one minute
        nodes = write(tmp_path / "n.csv", "node_id,lat,lon\n1,37.0,-120.0\n2,37.001,-120.0\n")
        edges = write(tmp_path / "e.csv",
                      "from,to,travel_seconds,length_m,class\n1,2,,500,residential\n")
        bundle = read_network(nodes, edges)
        assert bundle.edges[0].travel_seconds == 60.0

    def test_oneway_zero_emits_reverse(self, tmp_path):
        nodes = write(tmp_path / "n.csv", "node_id,lat,lon\n1,37.0,-120.0\n2,37.001,-120.0\n")
        edges = write(tmp_path / "e.csv",
                      "from,to,travel_seconds,oneway\n1,2,45,0\n")
        bundle = read_network(nodes, edges)
        pairs = {(e.src, e.dst) for e in bundle.edges}
        assert pairs == {(1, 2), (2, 1)}

    def test_dangling_endpoint(self, tmp_path):
        nodes = write(tmp_path / "n.csv", "node_id,lat,lon\n1,37.0,-120.0\n")
        edges = write(tmp_path / "e.csv", "from,to,travel_seconds\n1,99,5\n")
        with pytest.raises(ReferentialError, match="99"):
            read_network(nodes, edges)

    def test_malformed_row_reports_line(self, tmp_path):
        nodes = write(tmp_path / "n.csv",
                      "node_id,lat,lon\n1,37.0,-120.0\nnope,37.0,-120.0\n")
        edges = write(tmp_path / "e.csv", "from,to,travel_seconds\n")
        with pytest.raises(ParseError, match="line 3"):
            read_network(nodes, edges)

    def test_lat_out_of_range(self, tmp_path):
        nodes = write(tmp_path / "n.csv", "node_id,lat,lon\n1,123.0,-120.0\n")
        edges = write(tmp_path / "e.csv", "from,to,travel_seconds\n")
        with pytest.raises(CoordinateRangeError):
            read_network(nodes, edges)

    def test_duplicate_node_id(self, tmp_path):
        nodes = write(tmp_path / "n.csv",
                      "node_id,lat,lon\n1,37.0,-120.0\n1,37.1,-120.0\n")
        edges = write(tmp_path / "e.csv", "from,to,travel_seconds\n")
        with pytest.raises(ParseError, match="duplicate"):
            read_network(nodes, edges)

    def test_negative_seconds(self, tmp_path):
        nodes = write(tmp_path / "n.csv", "node_id,lat,lon\n1,37.0,-120.0\n2,37.001,-120.0\n")
        edges = write(tmp_path / "e.csv", "from,to,travel_seconds\n1,2,-4\n")
        with pytest.raises(ParseError, match="negative"):
            read_network(nodes, edges)


class TestAsciiGrid:
    def test_small_grid(self, tmp_path):
        text = ("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
                "NODATA_value -9999\n1 2\n3 4\n")
        grid = read_ascii_grid(write(tmp_path / "g.asc", text))
        assert grid.ncols == 2 and grid.nrows == 2
        assert grid.values.ravel().tolist() == [1.0, 2.0, 3.0, 4.0]

    def test_all_nodata(self, tmp_path):
        text = ("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
                "NODATA_value -1\n-1 -1\n")
        grid = read_ascii_grid(write(tmp_path / "g.asc", text))
        assert not grid.valid_mask().any()

    def test_value_count_mismatch(self, tmp_path):
        text = ("ncols 3\nnrows 3\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
                "NODATA_value -1\n1 2 3 4 5 6 7 8\n")
        with pytest.raises(ParseError):
            read_ascii_grid(write(tmp_path / "g.asc", text))

    def test_write_read_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        grid = AsciiGrid(ncols=4, nrows=3, xllcorner=-120.0, yllcorner=37.0,
                         cellsize=0.01, nodata=-9999.0,
                         values=rng.random(12).tolist())
        write_ascii_grid(grid, tmp_path / "g.asc")
        assert read_ascii_grid(tmp_path / "g.asc") == grid


class TestReadPoints:
    def test_order_and_duplicates(self, tmp_path):
        path = write(tmp_path / "p.csv",
                     "lat,lon\n37.0,-120.0\n37.5,-120.5\n37.0,-120.0\n")
        pts = read_points_csv(path)
        assert len(pts) == 3
        assert pts[0].lat == pts[2].lat and pts[0].lon == pts[2].lon

    def test_value_column(self, tmp_path):
        path = write(tmp_path / "p.csv", "lat,lon,value\n37.0,-120.0,8.5\n")
        pts = read_points_csv(path)
        assert pts[0].value == 8.5

    def test_range_error(self, tmp_path):
        path = write(tmp_path / "p.csv", "lat,lon\n37.0,-980.0\n")
        with pytest.raises(CoordinateRangeError):
            read_points_csv(path)


class TestReadPolygons:
    def test_polygon_and_multipolygon(self, tmp_path):
        doc = {"type": "FeatureCollection", "features": [
            {"type": "Feature", "properties": {"AREA": 2.0},
             "geometry": {"type": "Polygon", "coordinates": [
                 [[-120.0, 37.0], [-119.9, 37.0], [-119.9, 37.1],
                  [-120.0, 37.1], [-120.0, 37.0]]]}},
            {"type": "Feature", "properties": {},
             "geometry": {"type": "MultiPolygon", "coordinates": [
                 [[[-120.3, 37.0], [-120.2, 37.0], [-120.2, 37.1],
                   [-120.3, 37.0]]],
                 [[[-120.5, 37.0], [-120.4, 37.0], [-120.4, 37.1],
                   [-120.5, 37.0]]]]}},
        ]}
        path = write(tmp_path / "p.geojson", json.dumps(doc))
        feats = read_geojson_polygons(path)
        assert len(feats) == 2
        assert feats[0].properties["AREA"] == 2.0
        assert len(feats[1].parts) == 2

    def test_unclosed_ring(self, tmp_path):
        doc = {"type": "FeatureCollection", "features": [
            {"type": "Feature", "properties": {},
             "geometry": {"type": "Polygon", "coordinates": [
                 [[-120.0, 37.0], [-119.9, 37.0], [-119.9, 37.1],
                  [-120.0, 37.1]]]}},
        ]}
        with pytest.raises(GeometryError):
            read_geojson_polygons(write(tmp_path / "p.geojson", json.dumps(doc)))


class TestSynthRegion:
    def test_structure(self):
        spec = SynthSpec(n_stations=5)
        bundle = synth_region(seed=1, n=8, m=6, spec=spec)
        assert len(bundle.nodes) == 48
        # rectangular lattice, both directions per interior adjacency
        assert len(bundle.edges) == 2 * (2 * 8 * 6 - 8 - 6)
        assert len(bundle.point_sets["stations"]) == 5
        for name in ("POP", "MHV", "ROS", "FI"):
            assert name in bundle.rasters

    def test_population_total_exact(self):
        spec = SynthSpec(total_population=12_345.0)
        bundle = synth_region(seed=2, n=7, m=7, spec=spec)
        assert math.isclose(float(bundle.rasters["POP"].values.sum()), 12_345.0,
                            rel_tol=0, abs_tol=1e-6)

    def test_deterministic(self):
        a = synth_region(seed=9, n=6, m=5)
        b = synth_region(seed=9, n=6, m=5)
        assert bundle_checksum(a) == bundle_checksum(b)
        c = synth_region(seed=10, n=6, m=5)
        assert bundle_checksum(a) != bundle_checksum(c)

    def test_stations_on_nodes(self):
        bundle = synth_region(seed=4, n=6, m=6, spec=SynthSpec(n_stations=3))
        coords = {(n.lat, n.lon) for n in bundle.nodes}
        for p in bundle.point_sets["stations"]:
            assert (p.lat, p.lon) in coords

    def test_relative_draws_scale_with_size(self):
        # same seed, doubled lattice: blob pattern stays put in relative
        # coordinates, so the population-weighted centroid (as a fraction
        # of the bounding box) must match closely
        def rel_centroid(bundle):
            grid = bundle.rasters["POP"]
            vals = np.asarray(grid.values).reshape(grid.nrows, grid.ncols)
            ys, xs = np.mgrid[0:grid.nrows, 0:grid.ncols]
            w = vals / vals.sum()
            return (float((xs * w).sum()) / grid.ncols,
                    float((ys * w).sum()) / grid.nrows)

        a = rel_centroid(synth_region(seed=11, n=20, m=20))
        b = rel_centroid(synth_region(seed=11, n=40, m=40))
        assert abs(a[0] - b[0]) < 0.02 and abs(a[1] - b[1]) < 0.02


class TestBundleIO:
    def test_save_load_round_trip(self, tmp_path, small_bundle):
        save_bundle(small_bundle, tmp_path / "bundle")
        loaded = load_bundle(tmp_path / "bundle")
        assert bundle_checksum(loaded) == bundle_checksum(small_bundle)

    def test_validate_rejects_dangling_edge(self, small_bundle):
        from hazgrid.ingest import Edge
        broken = RegionBundle(
            name="x",
            nodes=list(small_bundle.nodes),
            edges=list(small_bundle.edges) + [Edge(10**9, 0, 1.0, None)],
            rasters=dict(small_bundle.rasters),
            point_sets=dict(small_bundle.point_sets),
            polygon_sets=dict(small_bundle.polygon_sets),
        )
        with pytest.raises(ReferentialError):
            broken.validate()

"""Command line: end-to-end runs, exit codes, run manifests."""

import json
import math

import pytest

from hazgrid.cli import main
from hazgrid.hexgrid import EARTH_RADIUS_M
from hazgrid.ingest import load_bundle
from hazgrid.pipeline import RegionModel
from hazgrid.riskmodel import preset_scenario, read_risk_csv

LAT = 37.0
LON = -121.0


def line_bundle_files(root):
    """Three road nodes 500 m apart, 60 s per hop, one station on the end.

    With a 250 m hex edge each node lands in its own cell, so the region
    reduces to the analytic three-cell line instance.
    """
    dlon = math.degrees(500.0 / (EARTH_RADIUS_M * math.cos(math.radians(LAT))))
    nodes = root / "nodes.csv"
    nodes.write_text(
        "node_id,lat,lon\n"
        f"1,{LAT!r},{LON - dlon!r}\n"
        f"2,{LAT!r},{LON!r}\n"
        f"3,{LAT!r},{LON + dlon!r}\n"
    )
    edges = root / "edges.csv"
    edges.write_text("from,to,travel_seconds,oneway\n1,2,60,0\n2,3,60,0\n")
    stations = root / "stations.csv"
    stations.write_text(f"lat,lon\n{LAT!r},{LON - dlon!r}\n")
    # single-pixel rasters centered on the middle node; values are
    # irrelevant because the scenario pins every feature transform to 1
    raster = root / "flat.asc"
    raster.write_text(
        "ncols 1\nnrows 1\n"
        f"xllcorner {LON - 0.0005!r}\nyllcorner {LAT - 0.0005!r}\n"
        "cellsize 0.001\nNODATA_value -9999\n5.0\n"
    )
    scenario = root / "unit.json"
    flat = {"kind": "piecewise", "knots": [[0.0, 1.0], [1.0, 1.0]]}
    scenario.write_text(json.dumps({
        "name": "unit",
        "transforms": {
            "ROS": flat, "FI": flat, "POP": flat, "MHV": flat,
            "STTFS": {"kind": "linear_capped", "cap": 120.0},
        },
    }))
    return nodes, edges, stations, raster, scenario


@pytest.fixture()
def line_bundle_dir(tmp_path):
    nodes, edges, stations, raster, scenario = line_bundle_files(tmp_path)
    out = tmp_path / "bundle"
    rc = main([
        "ingest", "--nodes", str(nodes), "--edges", str(edges),
        "--stations", str(stations), "--name", "line",
        "--raster", f"ROS={raster}", "--raster", f"FI={raster}",
        "--raster", f"POP={raster}", "--raster", f"MHV={raster}",
        "--out", str(out),
    ])
    assert rc == 0
    return out, scenario


class TestLineRegion:
    def test_optimize_relocate_hits_the_analytic_optimum(self, tmp_path,
                                                         line_bundle_dir):
        bundle_dir, scenario = line_bundle_dir
        out = tmp_path / "opt.json"
        rc = main([
            "optimize", "--bundle", str(bundle_dir), "--edge-m", "250",
            "--scenario", str(scenario), "--mode", "relocate",
            "--out", str(out),
        ])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert float(payload["objective"]) == 1.0 / 3.0
        assert payload["open_cells"] == [[0, 0]]  # the middle node's cell
        assert float(payload["before"]["objective"]) == 0.5
        assert payload["reduction_pct"] == pytest.approx(100.0 / 3.0)
        assert "histogram" in payload["compare"]

    def test_risk_csv_matches_library(self, tmp_path, line_bundle_dir):
        bundle_dir, scenario = line_bundle_dir
        out = tmp_path / "risk.csv"
        rc = main([
            "risk", "--bundle", str(bundle_dir), "--edge-m", "250",
            "--scenario", str(scenario), "--out", str(out),
        ])
        assert rc == 0
        rows = read_risk_csv(out)
        model = RegionModel.build(load_bundle(str(bundle_dir)), edge_m=250.0)
        assert set(rows) == set(model.layers.cell_order)
        # station on the end cell: s values are exactly 0, 0.5, 1.0
        node_cells = sorted(model.cell_members)
        s_by_cell = {c: rows[c]["s"] for c in node_cells}
        assert sorted(s_by_cell.values()) == [0.0, 0.5, 1.0]
        for c in node_cells:
            assert rows[c]["base"] == 1.0
            assert rows[c]["ri"] == rows[c]["s"]


class TestManifest:
    def test_rerun_is_byte_identical(self, tmp_path, line_bundle_dir):
        bundle_dir, scenario = line_bundle_dir
        out = tmp_path / "risk.csv"
        args = ["risk", "--bundle", str(bundle_dir), "--edge-m", "250",
                "--scenario", str(scenario), "--out", str(out)]
        assert main(args) == 0
        manifest_path = tmp_path / "risk.csv.manifest.json"
        first_manifest = manifest_path.read_bytes()
        first_output = out.read_bytes()
        assert main(args) == 0
        assert manifest_path.read_bytes() == first_manifest
        assert out.read_bytes() == first_output

    def test_manifest_records_inputs_and_outputs(self, tmp_path, line_bundle_dir):
        bundle_dir, scenario = line_bundle_dir
        out = tmp_path / "opt.json"
        main(["optimize", "--bundle", str(bundle_dir), "--edge-m", "250",
              "--scenario", str(scenario), "--out", str(out)])
        manifest = json.loads((tmp_path / "opt.json.manifest.json").read_text())
        assert manifest["command"] == "optimize"
        assert manifest["arguments"]["edge_m"] == 250.0
        assert manifest["input_checksum"]
        assert "opt.json" in manifest["outputs"]
        assert len(manifest["outputs"]["opt.json"]) == 64  # sha256 hex


class TestSynthPipeline:
    def test_synth_tessellate_sweep(self, tmp_path):
        bundle = tmp_path / "bundle"
        rc = main(["synth", "--seed", "3", "--n", "10", "--m", "10",
                   "--stations", "4", "--out", str(bundle)])
        assert rc == 0

        layers_csv = tmp_path / "layers.csv"
        geojson = tmp_path / "cells.geojson"
        rc = main(["tessellate", "--bundle", str(bundle),
                   "--out", str(layers_csv), "--geojson", str(geojson)])
        assert rc == 0
        assert layers_csv.exists()
        doc = json.loads(geojson.read_text())
        assert doc["type"] == "FeatureCollection"

        sweep_out = tmp_path / "sweep.json"
        rc = main(["sweep", "--bundle", str(bundle), "--preset", "RI",
                   "--max-delta", "2", "--multi-start", "2",
                   "--out", str(sweep_out)])
        assert rc == 0
        payload = json.loads(sweep_out.read_text())
        assert payload["deltas"] == [0, 1, 2]
        objs = [float(v) for v in payload["objectives"]]
        assert all(b <= a + 1e-9 for a, b in zip(objs, objs[1:]))

    def test_scaling_subcommand(self, tmp_path):
        bundle = tmp_path / "bundle"
        main(["synth", "--seed", "3", "--n", "14", "--m", "14",
              "--stations", "4", "--out", str(bundle)])
        out = tmp_path / "scaling.json"
        rc = main(["scaling", "--bundle", str(bundle), "--counts", "3,4,6",
                   "--multi-start", "1", "--coarse-edge-m", "900",
                   "--out", str(out)])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["counts"] == [3, 4, 6]
        assert len(payload["open_sets"][2]) == 6
        assert math.isfinite(payload["beta"]["exponent"])
        assert payload["beta"]["coarse_edge_m"] == 900.0
        means = [float(v) for v in payload["mean_seconds"]]
        assert all(b <= a + 1e-9 for a, b in zip(means, means[1:]))


class TestExitCodes:
    def test_no_command_prints_help(self, capsys):
        assert main([]) == 2
        assert "usage" in capsys.readouterr().out.lower()

    def test_domain_errors_return_one(self, tmp_path, capsys):
        bundle = tmp_path / "bundle"
        main(["synth", "--seed", "1", "--n", "6", "--m", "6",
              "--stations", "0", "--out", str(bundle)])
        rc = main(["risk", "--bundle", str(bundle), "--preset", "RIX",
                   "--out", str(tmp_path / "x.csv")])
        assert rc == 1
        assert "error" in capsys.readouterr().err
        # relocate with no stations is a domain error, not a crash
        rc = main(["optimize", "--bundle", str(bundle), "--preset", "RI",
                   "--mode", "relocate", "--out", str(tmp_path / "y.json")])
        assert rc == 1

    def test_missing_bundle_returns_one(self, tmp_path, capsys):
        rc = main(["risk", "--bundle", str(tmp_path / "nope"), "--preset", "RI",
                   "--out", str(tmp_path / "x.csv")])
        assert rc == 1
        capsys.readouterr()

    def test_bad_flags_exit_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["optimize", "--bogus-flag"])
        assert exc.value.code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "hazgrid" in capsys.readouterr().out

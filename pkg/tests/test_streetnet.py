import csv
import math

import numpy as np
import pytest

from hazgrid.errors import ReferentialError
from hazgrid.hexgrid import HexGrid
from hazgrid.streetnet import (
    UNREACHABLE_MS,
    StreetNetwork,
    cell_travel_seconds,
    network_components,
    street_length_per_cell,
)
from helpers import floyd_warshall_ms, make_network, random_digraph

ORIGIN = (37.0, -120.0)


class TestShortestPaths:
    def test_matches_floyd_warshall(self):
        # multi-source field must equal the min over the source rows of an
        # independently computed all-pairs matrix, exactly
        rng = np.random.default_rng(12)
        for _ in range(30):
            n, edges = random_digraph(rng, max_nodes=60)
            net = make_network(n, edges)
            dist = floyd_warshall_ms(n, edges)
            k = int(rng.integers(1, min(n, 5) + 1))
            sources = sorted(rng.choice(n, size=k, replace=False).tolist())
            field = net.multi_source_dijkstra([(s, s) for s in sources])
            want = dist[sources, :].min(axis=0)
            got = field.travel_ms.astype(np.float64)
            got[field.travel_ms == UNREACHABLE_MS] = np.inf
            assert np.array_equal(got, want)

    def test_travel_ms_from_matches_field(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            n, edges = random_digraph(rng, max_nodes=40)
            net = make_network(n, edges)
            sources = sorted(rng.choice(n, size=min(n, 3), replace=False).tolist())
            rows = net.travel_ms_from(sources)
            for row, s in zip(rows, sources):
                field = net.multi_source_dijkstra([(s, s)])
                want = field.travel_ms.astype(np.float64)
                want[field.travel_ms == UNREACHABLE_MS] = np.inf
                assert np.array_equal(row, want)

    def test_origin_tie_smallest_id(self):
        # two origins at equal distance: the smaller origin id labels the node
        net = make_network(3, [(0, 2, 100), (1, 2, 100)])
        field = net.multi_source_dijkstra([(10, 0), (7, 1)])
        assert field.origin_id[net.index_of(2)] == 7
        field2 = net.multi_source_dijkstra([(7, 0), (10, 1)])
        assert field2.origin_id[net.index_of(2)] == 7

    def test_unreachable_inf(self):
        net = make_network(3, [(0, 1, 50)])
        field = net.multi_source_dijkstra([(0, 0)])
        secs = field.seconds()
        assert math.isinf(secs[net.index_of(2)])
        assert field.origin_id[net.index_of(2)] == -1
        assert not field.reachable()[net.index_of(2)]

    def test_adding_origin_never_increases(self):
        rng = np.random.default_rng(14)
        n, edges = random_digraph(rng, max_nodes=50)
        net = make_network(n, edges)
        one = net.multi_source_dijkstra([(0, 0)])
        two = net.multi_source_dijkstra([(0, 0), (1, int(n // 2))])
        assert np.all(two.travel_ms <= one.travel_ms)

    def test_directionality(self):
        net = make_network(2, [(0, 1, 80)])
        fwd = net.multi_source_dijkstra([(0, 0)])
        back = net.multi_source_dijkstra([(1, 1)])
        assert fwd.travel_ms[net.index_of(1)] == 80
        assert back.travel_ms[net.index_of(0)] == UNREACHABLE_MS


class TestNetworkStructure:
    def test_parallel_edges_keep_fastest(self):
        net = make_network(2, [(0, 1, 50), (0, 1, 30), (0, 1, 90)])
        assert net.n_edges == 1
        field = net.multi_source_dijkstra([(0, 0)])
        assert field.travel_ms[net.index_of(1)] == 30

    def test_unknown_node(self):
        net = make_network(2, [(0, 1, 10)])
        with pytest.raises(ReferentialError):
            net.index_of(5)

    def test_nearest_node_tie(self):
        grid = HexGrid(ORIGIN[0], ORIGIN[1], 500.0)
        lats = [ORIGIN[0] + 0.001, ORIGIN[0] - 0.001]
        net = StreetNetwork([4, 2], lats, [ORIGIN[1], ORIGIN[1]],
                            [], [], [])
        assert net.nearest_node(grid, ORIGIN[0], ORIGIN[1]) == 2

    def test_components(self):
        net = make_network(5, [(0, 1, 10), (1, 2, 10), (3, 4, 10)])
        comps = network_components(net)
        assert sorted(len(c) for c in comps) == [2, 3]

    def test_field_csv(self, tmp_path):
        net = make_network(3, [(0, 1, 1500)])
        field = net.multi_source_dijkstra([(0, 0)])
        field.to_csv(tmp_path / "f.csv")
        rows = list(csv.DictReader(open(tmp_path / "f.csv")))
        byid = {int(r["node_id"]): r for r in rows}
        assert byid[1]["seconds"] == "1.5"
        assert byid[2]["seconds"] == "inf" and byid[2]["origin_id"] == ""


class TestCellCollapse:
    def test_cell_travel_picks_lexicographic_min(self):
        # both nodes in one cell: the faster label wins; origin breaks ties
        grid = HexGrid(ORIGIN[0], ORIGIN[1], 2000.0)
        lats = [ORIGIN[0], ORIGIN[0] + 0.0001]
        lons = [ORIGIN[1], ORIGIN[1] + 0.0001]
        net = StreetNetwork([0, 1], lats, lons, [], [], [])
        field = net.multi_source_dijkstra([(3, 0), (2, 1)])
        per_cell = cell_travel_seconds(net, grid, field)
        cell = grid.cell_of(*ORIGIN)
        assert per_cell[cell] == (0.0, 2)

    def test_street_length_conserved(self):
        rng = np.random.default_rng(15)
        grid = HexGrid(ORIGIN[0], ORIGIN[1], 400.0)
        n = 12
        edges = []
        for _ in range(20):
            a, b = rng.integers(0, n, size=2)
            if a != b:
                edges.append((int(a), int(b), int(rng.integers(1, 10_000))))
        lengths = rng.uniform(50, 900, size=len(edges))
        net = make_network(n, edges, seed=16, lengths=lengths)
        shares = street_length_per_cell(net, grid)
        want = sum(l for (_, _, l) in net.undirected_edges())
        assert sum(shares.values()) == pytest.approx(want, rel=1e-9)

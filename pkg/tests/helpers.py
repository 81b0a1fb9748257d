"""Shared randomized-fixture builders and independent oracles."""

import numpy as np

from hazgrid.hexgrid import CellId
from hazgrid.optimizer import SitingInstance
from hazgrid.riskmodel import TransformSpec

UNREACH = np.iinfo(np.int64).max


def random_instance(rng, n_cells=None, n_existing=0, p_unreachable=0.0,
                    s_transform="linear_capped"):
    """A random siting instance over a single row of cells.

    Travel times are random positive integers (ms); with probability
    ``p_unreachable`` an off-diagonal pair is severed. Diagonal is zero.
    """
    n = int(n_cells if n_cells is not None else rng.integers(3, 13))
    cells = [CellId(int(i), 0) for i in range(n)]
    travel = rng.integers(1_000, 600_000, size=(n, n)).astype(np.int64)
    np.fill_diagonal(travel, 0)
    if p_unreachable > 0:
        cut = rng.random((n, n)) < p_unreachable
        np.fill_diagonal(cut, False)
        travel[cut] = UNREACH
    base = rng.random(n)
    weights = rng.random(n) + 0.05
    if s_transform == "linear_capped":
        tf = TransformSpec(kind="linear_capped", cap=600.0)
    elif s_transform is None:
        tf = None
    else:
        tf = s_transform
    existing = tuple(cells[i] for i in sorted(
        rng.choice(n, size=min(n_existing, n), replace=False))) if n_existing else ()
    return SitingInstance(
        station_cells=list(cells),
        demand_cells=list(cells),
        base=base,
        weights=weights,
        travel_ms=travel,
        s_transform=tf,
        existing_cells=existing,
    )


def floyd_warshall_ms(n_nodes, edges):
    """All-pairs shortest travel (int ms) by min-plus matrix relaxation.

    ``edges`` is a list of (src_idx, dst_idx, ms). Off-path entries stay
    at the unreachable sentinel. Exact integer arithmetic throughout.
    """
    big = float("inf")
    dist = np.full((n_nodes, n_nodes), big, dtype=np.float64)
    np.fill_diagonal(dist, 0.0)
    for s, d, ms in edges:
        if ms < dist[s, d]:
            dist[s, d] = ms
    for k in range(n_nodes):
        via = dist[:, k][:, None] + dist[k, :][None, :]
        np.minimum(dist, via, out=dist)
    return dist


def random_digraph(rng, max_nodes=200):
    """Random sparse digraph: (n_nodes, [(src, dst, ms)])."""
    n = int(rng.integers(2, max_nodes + 1))
    m = int(rng.integers(1, 4 * n))
    src = rng.integers(0, n, size=m)
    dst = rng.integers(0, n, size=m)
    ms = rng.integers(1, 100_000, size=m)
    edges = [(int(s), int(d), int(w)) for s, d, w in zip(src, dst, ms) if s != d]
    return n, edges


def make_network(n_nodes, edges, spread=0.01, seed=0, lengths=None,
                 origin=(37.0, -120.0)):
    """StreetNetwork with the given edge list and jittered node positions."""
    from hazgrid.streetnet import StreetNetwork

    rng = np.random.default_rng(seed)
    lats = origin[0] + rng.uniform(-spread, spread, size=n_nodes)
    lons = origin[1] + rng.uniform(-spread, spread, size=n_nodes)
    src = [e[0] for e in edges]
    dst = [e[1] for e in edges]
    ms = [e[2] for e in edges]
    return StreetNetwork(np.arange(n_nodes), lats, lons, src, dst, ms,
                         edge_length_m=lengths)

"""Street network representation and travel-time fields.

Edge weights are held as integer milliseconds (``round(seconds * 1000)``)
so shortest-path sums, comparisons, and tie-breaks are exact. The
multi-source search carries (distance, origin) labels lexicographically,
which makes the assignment of every node to its nearest origin
deterministic: equal distances resolve to the smallest origin id.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .errors import ReferentialError
from .hexgrid import CellId, HexGrid
from .ingest import RegionBundle

UNREACHABLE_MS = np.iinfo(np.int64).max


class StreetNetwork:
    """Directed graph over geolocated nodes with integer-ms edge weights."""

    def __init__(self, node_ids, lats, lons, edge_src, edge_dst, edge_ms,
                 edge_length_m=None):
        self.node_ids = np.asarray(node_ids, dtype=np.int64)
        order = np.argsort(self.node_ids, kind="stable")
        self.node_ids = self.node_ids[order]
        self.lats = np.asarray(lats, dtype=np.float64)[order]
        self.lons = np.asarray(lons, dtype=np.float64)[order]
        self._index = {int(nid): i for i, nid in enumerate(self.node_ids)}
        if len(self._index) != len(self.node_ids):
            raise ReferentialError("duplicate node ids in network")

        n = len(self.node_ids)
        src_idx = np.array([self._index[int(s)] for s in edge_src], dtype=np.int64)
        dst_idx = np.array([self._index[int(d)] for d in edge_dst], dtype=np.int64)
        ms = np.asarray(edge_ms, dtype=np.int64)
        lengths = (np.asarray(edge_length_m, dtype=np.float64)
                   if edge_length_m is not None else np.full(len(ms), np.nan))

        # Parallel edges collapse to the fastest one; keeps the CSR form
        # (which would sum duplicates) equivalent to the edge list.
        eorder = np.lexsort((ms, dst_idx, src_idx))
        src_idx, dst_idx, ms, lengths = (
            src_idx[eorder], dst_idx[eorder], ms[eorder], lengths[eorder]
        )
        if len(ms):
            keep = np.ones(len(ms), dtype=bool)
            keep[1:] = (np.diff(src_idx) != 0) | (np.diff(dst_idx) != 0)
            src_idx, dst_idx, ms, lengths = (
                src_idx[keep], dst_idx[keep], ms[keep], lengths[keep]
            )
        self.edge_src = src_idx
        self.edge_dst = dst_idx
        self.edge_ms = ms
        self.edge_length_m = lengths
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.indptr, self.edge_src + 1, 1)
        self.indptr = np.cumsum(self.indptr)

    @classmethod
    def from_bundle(cls, bundle: RegionBundle) -> "StreetNetwork":
        node_ids = [nd.node_id for nd in bundle.nodes]
        lats = [nd.lat for nd in bundle.nodes]
        lons = [nd.lon for nd in bundle.nodes]
        src = [e.src for e in bundle.edges]
        dst = [e.dst for e in bundle.edges]
        ms = [int(round(e.travel_seconds * 1000.0)) for e in bundle.edges]
        lengths = [e.length_m if e.length_m is not None else np.nan for e in bundle.edges]
        return cls(node_ids, lats, lons, src, dst, ms, lengths)

    def __len__(self):
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edge_ms)

    def index_of(self, node_id: int) -> int:
        try:
            return self._index[int(node_id)]
        except KeyError:
            raise ReferentialError(f"unknown node id {node_id}") from None

    # -- snapping -----------------------------------------------------------

    def nearest_node(self, grid: HexGrid, lat: float, lon: float) -> int:
        """Snap a point to the nearest node in planar meters.

        Distance ties resolve to the smallest node id.
        """
        x, y = grid.project(lat, lon)
        nx, ny = grid.project(self.lats, self.lons)
        d2 = (np.asarray(nx) - x) ** 2 + (np.asarray(ny) - y) ** 2
        best = d2.min()
        return int(self.node_ids[d2 == best].min())

    def nearest_nodes(self, grid: HexGrid, points) -> List[int]:
        return [self.nearest_node(grid, p.lat, p.lon) for p in points]

    # -- shortest paths -----------------------------------------------------

    def multi_source_dijkstra(self, origins: Sequence[Tuple[int, int]]) -> "TravelField":
        """Label every node with (travel_ms, origin_id) from the closest origin.

        ``origins`` is a sequence of (origin_id, node_id). Labels compare
        lexicographically, so among equidistant origins the smallest
        origin id wins everywhere it ties.
        """
        n = len(self.node_ids)
        dist = np.full(n, UNREACHABLE_MS, dtype=np.int64)
        orig = np.full(n, -1, dtype=np.int64)
        heap: List[Tuple[int, int, int]] = []
        for origin_id, node_id in origins:
            idx = self.index_of(node_id)
            label = (0, int(origin_id))
            if label < (dist[idx], orig[idx]) or dist[idx] == UNREACHABLE_MS:
                dist[idx] = 0
                orig[idx] = origin_id
                heapq.heappush(heap, (0, int(origin_id), idx))
        indptr, dsts, ws = self.indptr, self.edge_dst, self.edge_ms
        while heap:
            d, o, idx = heapq.heappop(heap)
            if d != dist[idx] or o != orig[idx]:
                continue
            for k in range(indptr[idx], indptr[idx + 1]):
                j = int(dsts[k])
                nd = d + int(ws[k])
                if nd < dist[j] or (nd == dist[j] and o < orig[j]):
                    dist[j] = nd
                    orig[j] = o
                    heapq.heappush(heap, (nd, o, j))
        return TravelField(self.node_ids.copy(), dist, orig)

    def travel_ms_from(self, source_node_ids: Sequence[int]) -> np.ndarray:
        """Bulk one-to-all travel times, one row per source, in milliseconds.

        Uses the compiled sparse-graph search; values are exact because
        every weight and sum is an integer below 2**53. Unreachable
        entries are +inf.
        """
        n = len(self.node_ids)
        graph = csr_matrix(
            (self.edge_ms.astype(np.float64), self.edge_dst, self.indptr), shape=(n, n)
        )
        idx = np.array([self.index_of(s) for s in source_node_ids], dtype=np.int64)
        if len(idx) == 0:
            return np.full((0, n), np.inf)
        return _csgraph_dijkstra(graph, directed=True, indices=idx)

    # -- cell mapping -------------------------------------------------------

    def node_cells(self, grid: HexGrid) -> np.ndarray:
        """Cell of every node, as an (n, 2) array of (q, r)."""
        x, y = grid.project(self.lats, self.lons)
        q, r = grid.cell_of_xy(np.atleast_1d(x), np.atleast_1d(y))
        return np.stack([q, r], axis=1)

    def edge_polylines(self) -> List[List[Tuple[float, float]]]:
        """Each undirected edge once, as a two-vertex (lat, lon) polyline."""
        seen = set()
        lines = []
        for k in range(len(self.edge_ms)):
            a, b = int(self.edge_src[k]), int(self.edge_dst[k])
            key = (a, b) if a <= b else (b, a)
            if key in seen:
                continue
            seen.add(key)
            lines.append([(self.lats[a], self.lons[a]), (self.lats[b], self.lons[b])])
        return lines

    def undirected_edges(self) -> List[Tuple[int, int, float]]:
        """(node_index_a, node_index_b, length_m) per undirected edge; the
        length falls back to NaN when absent in the input."""
        seen = {}
        for k in range(len(self.edge_ms)):
            a, b = int(self.edge_src[k]), int(self.edge_dst[k])
            key = (a, b) if a <= b else (b, a)
            if key not in seen:
                seen[key] = float(self.edge_length_m[k])
        return [(a, b, l) for (a, b), l in sorted(seen.items())]


@dataclass
class TravelField:
    """Per-node shortest travel time and the origin that provides it."""

    node_ids: np.ndarray
    travel_ms: np.ndarray   # int64, UNREACHABLE_MS when no origin reaches the node
    origin_id: np.ndarray   # int64, -1 when unreachable

    def seconds(self) -> np.ndarray:
        out = self.travel_ms.astype(np.float64) / 1000.0
        out[self.travel_ms == UNREACHABLE_MS] = np.inf
        return out

    def reachable(self) -> np.ndarray:
        return self.travel_ms != UNREACHABLE_MS

    def to_csv(self, path):
        secs = self.seconds()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node_id", "seconds", "origin_id"])
            for i, nid in enumerate(self.node_ids):
                if self.travel_ms[i] == UNREACHABLE_MS:
                    w.writerow([int(nid), "inf", ""])
                else:
                    w.writerow([int(nid), repr(float(secs[i])), int(self.origin_id[i])])


def cell_travel_seconds(network: StreetNetwork, grid: HexGrid,
                        field: TravelField) -> Dict[CellId, Tuple[float, int]]:
    """Collapse a node travel field to cells.

    A cell's time is the minimum over its nodes; the reported origin is
    the lexicographically smallest (travel_ms, origin_id) among nodes
    achieving that minimum. Cells with no node do not appear.
    """
    cells = network.node_cells(grid)
    best: Dict[CellId, Tuple[int, int]] = {}
    for i in range(len(network.node_ids)):
        cell = CellId(int(cells[i, 0]), int(cells[i, 1]))
        label = (int(field.travel_ms[i]), int(field.origin_id[i]))
        cur = best.get(cell)
        if cur is None or label < cur:
            best[cell] = label
    out: Dict[CellId, Tuple[float, int]] = {}
    for cell, (ms, origin) in best.items():
        if ms == UNREACHABLE_MS:
            out[cell] = (math.inf, -1)
        else:
            out[cell] = (ms / 1000.0, origin)
    return out


def street_length_per_cell(network: StreetNetwork, grid: HexGrid) -> Dict[CellId, float]:
    """Street length (meters) per cell.

    Each undirected edge is split across the cells its straight segment
    traverses; when the edge carries an explicit length it is spread in
    the same proportions, so totals match the stated lengths exactly.
    """
    from .hexgrid import _walk_segment  # shared exact traversal

    out: Dict[CellId, float] = {}
    for a, b, length_m in network.undirected_edges():
        ax, ay = grid.project(network.lats[a], network.lons[a])
        bx, by = grid.project(network.lats[b], network.lons[b])
        parts = list(_walk_segment(grid, ax, ay, bx, by))
        planar = sum(p[1] for p in parts)
        if planar == 0.0:
            continue
        scale = (length_m / planar) if math.isfinite(length_m) and length_m > 0 else 1.0
        for cell, seg_len in parts:
            out[cell] = out.get(cell, 0.0) + seg_len * scale
    return out


def network_components(network: StreetNetwork) -> List[List[int]]:
    """Weakly connected components as lists of node ids (each sorted)."""
    n = len(network.node_ids)
    undirected: Dict[int, set] = {i: set() for i in range(n)}
    for k in range(network.n_edges):
        a, b = int(network.edge_src[k]), int(network.edge_dst[k])
        undirected[a].add(b)
        undirected[b].add(a)
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            cur = stack.pop()
            comp.append(int(network.node_ids[cur]))
            for nb in undirected[cur]:
                if not seen[nb]:
                    seen[nb] = True
                    stack.append(nb)
        comps.append(sorted(comp))
    return comps

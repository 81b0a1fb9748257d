"""Scaling analyses: facility-density exponents and distance-curve collapse.

Optimally placed facilities track population density sublinearly,
``D ~ rho^beta`` with the continuum optimum at beta = 2/3. The mean
distance to the nearest facility then follows
``L = k * C**1.5 / (P * sqrt(N))`` with ``C = integral of rho^(2/3)``,
so curves of L against N/P collapse for homothetic regions. This module
holds the estimation side: log-log fits, density binning, the capacity
integral, and the collapse-deviation statistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import FitError
from .hexgrid import CellId, HexGrid, LayerGrid


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    r_squared: float
    n_points: int

    def predict(self, x):
        return self.prefactor * np.asarray(x, dtype=np.float64) ** self.exponent


def fit_power_law(x, y) -> PowerLawFit:
    """Least-squares slope of log y against log x.

    Requires at least two strictly positive (x, y) pairs with non-constant
    x. A perfectly constant y yields exponent 0 with r_squared 1.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError("x and y must be 1-d arrays of equal length")
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    x, y = x[keep], y[keep]
    if x.size < 2:
        raise FitError(f"power-law fit needs >= 2 positive points, got {x.size}")
    lx, ly = np.log(x), np.log(y)
    if np.allclose(lx, lx[0]):
        raise FitError("x values are all equal; exponent is undefined")
    mx, my = lx.mean(), ly.mean()
    sxx = float(((lx - mx) ** 2).sum())
    sxy = float(((lx - mx) * (ly - my)).sum())
    slope = sxy / sxx
    intercept = my - slope * mx
    resid = ly - (intercept + slope * lx)
    ss_res = float((resid**2).sum())
    ss_tot = float(((ly - my) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return PowerLawFit(exponent=float(slope), prefactor=float(math.exp(intercept)),
                       r_squared=float(r2), n_points=int(x.size))


class DensityBin(NamedTuple):
    """One coarse hexagon's density sample."""

    rho: float   # population per km^2
    d: float     # facilities per km^2
    cells: int   # fine cells aggregated into this coarse hexagon


@dataclass(frozen=True)
class DensityBins:
    """Coarse-hex (rho, D) samples for the facility-density fit.

    Each bin is one coarse hexagon that received at least one facility;
    ``excluded`` records how many facility-free coarse hexagons were
    dropped (their density has no logarithm).
    """

    bins: Tuple[DensityBin, ...]
    coarse_edge_m: float
    excluded: int


def bin_densities(layers: LayerGrid, facilities: Sequence, coarse_edge_m: float,
                  pop_layer: str = "POP") -> DensityBins:
    """Aggregate population and facility counts onto a coarse hex grid.

    ``facilities`` lists fine cells holding a facility; repeats pool
    several placements into one sample set (pooling rescales D uniformly,
    so the fitted exponent is unchanged). Densities divide by the covered
    area (fine cells times fine-cell area), which keeps boundary hexagons
    unbiased.
    """
    grid = layers.grid
    fine_cells = list(layers.cell_order)
    if not fine_cells:
        raise FitError("layer grid has no cells to bin")
    if coarse_edge_m <= grid.edge_m:
        raise FitError("coarse edge must exceed the fine-grid edge")
    pop = np.maximum(layers.layer(pop_layer), 0.0)
    coarse = HexGrid(grid.origin_lat, grid.origin_lon, coarse_edge_m)
    fx, fy = grid.cell_centers_xy(fine_cells)
    cq, cr = coarse.cell_of_xy(fx, fy)
    keys = np.stack([cq, cr], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    n_coarse = uniq.shape[0]
    pop_sum = np.bincount(inverse, weights=pop, minlength=n_coarse)
    cell_cnt = np.bincount(inverse, minlength=n_coarse)
    fac_cnt = np.zeros(n_coarse, dtype=np.float64)
    index = {CellId(*c): i for i, c in enumerate(fine_cells)}
    for cell in facilities:
        c = CellId(int(cell[0]), int(cell[1]))
        at = index.get(c)
        if at is None:
            raise FitError(f"facility cell {tuple(c)} is not on the layer grid")
        fac_cnt[inverse[at]] += 1.0
    if fac_cnt.sum() == 0:
        raise FitError("no facilities to bin")
    area_km2 = cell_cnt * grid.cell_area_km2()
    keep = fac_cnt > 0
    excluded = int(n_coarse - keep.sum())
    bins = sorted(
        (DensityBin(float(pop_sum[i] / area_km2[i]), float(fac_cnt[i] / area_km2[i]),
                    int(cell_cnt[i]))
         for i in range(n_coarse) if keep[i]),
        key=lambda b: (b.rho, b.d),
    )
    return DensityBins(bins=tuple(bins), coarse_edge_m=float(coarse_edge_m),
                       excluded=excluded)


def fit_beta(bins: DensityBins) -> PowerLawFit:
    """Log-log slope of facility density against population density."""
    rho = np.array([b.rho for b in bins.bins], dtype=np.float64)
    d = np.array([b.d for b in bins.bins], dtype=np.float64)
    keep = (rho > 0) & (d > 0)
    if int(keep.sum()) < 3:
        raise FitError("beta fit needs at least 3 facility-bearing bins")
    return fit_power_law(rho[keep], d[keep])


def continuum_capacity(density, area_per_cell: float, exponent: float = 2.0 / 3.0) -> float:
    """Discretized integral of rho**exponent over the region."""
    density = np.asarray(density, dtype=np.float64)
    if area_per_cell <= 0:
        raise FitError("area_per_cell must be positive")
    pos = np.maximum(density, 0.0)
    return float((pos**exponent).sum() * area_per_cell)


def predicted_mean_distance(capacity: float, population: float, n_facilities) -> np.ndarray:
    """The continuum prediction ``L = C**1.5 / (P * sqrt(N))`` (unit prefactor)."""
    n = np.asarray(n_facilities, dtype=np.float64)
    if population <= 0:
        raise FitError("population must be positive")
    return capacity**1.5 / (population * np.sqrt(n))


@dataclass
class DistanceCurve:
    """One region's mean-distance curve against facilities per capita."""

    x: np.ndarray       # N / P
    y: np.ndarray       # mean distance to nearest open facility
    label: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise FitError("curve x and y must be 1-d and aligned")
        if self.x.size < 2:
            raise FitError("curve needs at least 2 points")
        order = np.argsort(self.x)
        self.x = self.x[order]
        self.y = self.y[order]
        if np.any(self.x <= 0) or np.any(self.y <= 0):
            raise FitError("curve values must be positive")


def collapse_deviation(curves: Sequence[DistanceCurve], n_points: int = 20) -> float:
    """RMS relative deviation of curves from their pointwise mean.

    Curves are resampled onto a common log-spaced x grid spanning the
    overlap of their ranges (interpolating log y against log x), then
    compared to the mean curve: deviation 0 means perfect collapse.
    """
    if len(curves) < 2:
        raise FitError("collapse needs at least 2 curves")
    lo = max(float(c.x.min()) for c in curves)
    hi = min(float(c.x.max()) for c in curves)
    if not (hi > lo):
        raise FitError("curves do not overlap in x")
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), n_points))
    ys = []
    for c in curves:
        ly = np.interp(np.log(grid), np.log(c.x), np.log(c.y))
        ys.append(np.exp(ly))
    ys = np.stack(ys)
    mean = ys.mean(axis=0)
    if np.any(mean <= 0):
        raise FitError("degenerate mean curve")
    rel = (ys - mean[None, :]) / mean[None, :]
    return float(np.sqrt(np.mean(rel**2)))


def saturation_point(values: Sequence[float], eps: Optional[float] = None) -> Optional[int]:
    """First index whose improvement over the previous value drops below
    ``eps`` (default 1% of the first value). None if never."""
    vals = [float(v) for v in values]
    if len(vals) < 2:
        return None
    eps_used = eps if eps is not None else 0.01 * vals[0]
    for k in range(1, len(vals)):
        if vals[k - 1] - vals[k] < eps_used:
            return k
    return None

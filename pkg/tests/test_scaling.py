"""Scaling analysis: power-law fits, density binning, curve collapse."""

import math

import numpy as np
import pytest

from hazgrid import (
    CellId,
    DensityBin,
    DensityBins,
    DistanceCurve,
    FitError,
    HexGrid,
    LayerGrid,
    bin_densities,
    collapse_deviation,
    continuum_capacity,
    fit_beta,
    fit_power_law,
    predicted_mean_distance,
    saturation_point,
)


def uniform_layers(n=12, edge_m=500.0, pop_per_cell=10.0):
    cells = [CellId(q, r) for q in range(n) for r in range(n)]
    grid = HexGrid(37.0, -120.0, edge_m, cells=cells)
    layers = LayerGrid(grid)
    layers.set_layer("POP", np.full(len(cells), pop_per_cell))
    return layers


class TestFitPowerLaw:
    def test_exact_two_thirds(self):
        fit = fit_power_law([1.0, 8.0, 27.0], [1.0, 4.0, 9.0])
        assert fit.exponent == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert fit.prefactor == pytest.approx(1.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert fit.n_points == 3

    def test_constant_y_is_flat(self):
        fit = fit_power_law([1.0, 2.0, 4.0], [3.0, 3.0, 3.0])
        assert fit.exponent == 0.0
        assert fit.prefactor == pytest.approx(3.0)
        assert fit.r_squared == 1.0

    def test_nonpositive_points_dropped(self):
        fit = fit_power_law([1.0, 0.0, 8.0, -2.0, 27.0, np.inf],
                            [1.0, 5.0, 4.0, 5.0, 9.0, 1.0])
        assert fit.n_points == 3
        assert fit.exponent == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_prefactor_scale_leaves_exponent(self):
        x = np.array([1.0, 8.0, 27.0, 64.0])
        y = x ** (2.0 / 3.0)
        a = fit_power_law(x, y)
        b = fit_power_law(x, 0.5 * y)
        assert b.exponent == pytest.approx(a.exponent, abs=1e-12)
        assert b.prefactor == pytest.approx(0.5 * a.prefactor, rel=1e-12)

    def test_predict_inverts_fit(self):
        rng = np.random.default_rng(13)
        x = rng.uniform(1.0, 100.0, 30)
        y = 2.5 * x**0.61
        fit = fit_power_law(x, y)
        assert fit.predict(x) == pytest.approx(y, rel=1e-9)

    def test_errors(self):
        with pytest.raises(FitError):
            fit_power_law([1.0], [1.0])
        with pytest.raises(FitError):
            fit_power_law([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(FitError):
            fit_power_law([1.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(FitError):
            fit_power_law([-1.0, -2.0], [1.0, 2.0])

    def test_recovers_slope_under_noise(self):
        rng = np.random.default_rng(19)
        x = np.exp(rng.uniform(0.0, 5.0, 200))
        y = 3.0 * x**0.66 * np.exp(rng.normal(0.0, 0.05, 200))
        fit = fit_power_law(x, y)
        assert fit.exponent == pytest.approx(0.66, abs=0.02)
        assert fit.r_squared > 0.97


class TestDensityBins:
    def test_uniform_region_gives_identical_bins(self):
        layers = uniform_layers(n=12, pop_per_cell=10.0)
        facilities = list(layers.cell_order)  # one per fine cell
        bins = bin_densities(layers, facilities, coarse_edge_m=1500.0)
        assert bins.excluded == 0
        area = layers.grid.cell_area_km2()
        rhos = {b.rho for b in bins.bins}
        ds = {b.d for b in bins.bins}
        assert len(rhos) == 1 and len(ds) == 1
        assert rhos.pop() == pytest.approx(10.0 / area, rel=1e-12)
        assert ds.pop() == pytest.approx(1.0 / area, rel=1e-12)
        # identical densities leave the exponent undefined
        with pytest.raises(FitError):
            fit_beta(bins)

    def test_binning_conserves_population_and_facilities(self):
        rng = np.random.default_rng(7)
        layers = uniform_layers(n=10)
        pop = rng.uniform(0.0, 50.0, len(layers))
        layers.set_layer("POP", pop)
        cells = list(layers.cell_order)
        facilities = [cells[i] for i in rng.choice(len(cells), 60)]
        bins = bin_densities(layers, facilities, coarse_edge_m=1600.0)
        area = layers.grid.cell_area_km2()
        got_fac = sum(b.d * b.cells * area for b in bins.bins)
        assert got_fac == pytest.approx(len(facilities), rel=1e-9)
        # population in facility-bearing hexes only; with the excluded
        # hexes' cells it must total the layer sum
        covered_pop = sum(b.rho * b.cells * area for b in bins.bins)
        assert covered_pop <= pop.sum() + 1e-9
        if bins.excluded == 0:
            assert covered_pop == pytest.approx(pop.sum(), rel=1e-9)

    def test_zero_facility_hexes_are_excluded_and_counted(self):
        layers = uniform_layers(n=12)
        one = [layers.cell_order[0]]
        bins = bin_densities(layers, one, coarse_edge_m=1500.0)
        assert len(bins.bins) == 1
        assert bins.excluded >= 1
        assert bins.bins[0].d * bins.bins[0].cells * layers.grid.cell_area_km2() \
            == pytest.approx(1.0, rel=1e-12)

    def test_repeated_facilities_pool(self):
        layers = uniform_layers(n=6)
        cell = layers.cell_order[10]
        b1 = bin_densities(layers, [cell], coarse_edge_m=1200.0)
        b2 = bin_densities(layers, [cell, cell], coarse_edge_m=1200.0)
        assert b2.bins[0].d == pytest.approx(2.0 * b1.bins[0].d, rel=1e-12)

    def test_errors(self):
        layers = uniform_layers(n=6)
        with pytest.raises(FitError):
            bin_densities(layers, [], coarse_edge_m=1500.0)
        with pytest.raises(FitError):
            bin_densities(layers, [CellId(99, 99)], coarse_edge_m=1500.0)
        with pytest.raises(FitError):
            bin_densities(layers, [layers.cell_order[0]], coarse_edge_m=400.0)


class TestFitBeta:
    def make_bins(self, rho, d):
        bins = tuple(DensityBin(r, dd, 1) for r, dd in zip(rho, d))
        return DensityBins(bins=bins, coarse_edge_m=2000.0, excluded=0)

    def test_exact_two_thirds_from_bins(self):
        fit = fit_beta(self.make_bins([1.0, 8.0, 27.0], [1.0, 4.0, 9.0]))
        assert fit.exponent == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_zero_density_bins_ignored(self):
        fit = fit_beta(self.make_bins([1.0, 5.0, 8.0, 27.0],
                                      [1.0, 0.0, 4.0, 9.0]))
        assert fit.n_points == 3
        assert fit.exponent == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_too_few_bins(self):
        with pytest.raises(FitError):
            fit_beta(self.make_bins([1.0, 8.0, 27.0], [1.0, 0.0, 9.0]))


class TestContinuum:
    def test_capacity_arithmetic(self):
        # 1**(2/3) + 8**(2/3) = 5, times area 2
        assert continuum_capacity([1.0, 8.0], 2.0) == pytest.approx(10.0, rel=1e-12)
        assert continuum_capacity([4.0], 1.0, exponent=0.5) == pytest.approx(2.0)
        assert continuum_capacity([-3.0, 8.0], 1.0) == pytest.approx(4.0)

    def test_capacity_needs_positive_area(self):
        with pytest.raises(FitError):
            continuum_capacity([1.0], 0.0)

    def test_predicted_distance(self):
        # C**1.5 / (P sqrt(N)) with C=4, P=2, N=4 -> 8 / 4 = 2
        out = predicted_mean_distance(4.0, 2.0, [4.0])
        assert out[0] == pytest.approx(2.0, rel=1e-12)
        assert predicted_mean_distance(4.0, 2.0, [1.0, 4.0, 16.0]) == pytest.approx(
            [4.0, 2.0, 1.0], rel=1e-12)
        with pytest.raises(FitError):
            predicted_mean_distance(4.0, 0.0, [1.0])

    def test_distance_falls_with_root_n(self):
        n = np.array([10.0, 40.0])
        out = predicted_mean_distance(3.0, 100.0, n)
        assert out[0] / out[1] == pytest.approx(2.0, rel=1e-12)


class TestCollapse:
    def test_curve_sorts_and_validates(self):
        c = DistanceCurve(x=[3.0, 1.0, 2.0], y=[30.0, 10.0, 20.0])
        assert c.x.tolist() == [1.0, 2.0, 3.0]
        assert c.y.tolist() == [10.0, 20.0, 30.0]
        with pytest.raises(FitError):
            DistanceCurve(x=[1.0], y=[1.0])
        with pytest.raises(FitError):
            DistanceCurve(x=[1.0, 2.0], y=[1.0, 0.0])
        with pytest.raises(FitError):
            DistanceCurve(x=[0.0, 2.0], y=[1.0, 2.0])

    def test_identical_curves_collapse_to_zero(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        y = 5.0 / np.sqrt(x)
        a = DistanceCurve(x=x, y=y, label="a")
        b = DistanceCurve(x=x.copy(), y=y.copy(), label="b")
        assert collapse_deviation([a, b]) == pytest.approx(0.0, abs=1e-15)

    def test_doubled_curve_deviates_by_one_third(self):
        # ys {y, 2y}: rel dev from the mean 1.5y is exactly 1/3 everywhere
        x = np.array([1.0, 2.0, 4.0, 8.0])
        y = 5.0 / np.sqrt(x)
        dev = collapse_deviation([DistanceCurve(x=x, y=y),
                                  DistanceCurve(x=x, y=2.0 * y)])
        assert dev == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_resampling_handles_different_grids(self):
        xa = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
        xb = np.array([1.5, 3.0, 6.0, 12.0])
        a = DistanceCurve(x=xa, y=3.0 * xa**-0.5)
        b = DistanceCurve(x=xb, y=3.0 * xb**-0.5)
        assert collapse_deviation([a, b]) == pytest.approx(0.0, abs=1e-12)

    def test_errors(self):
        x = np.array([1.0, 2.0])
        c = DistanceCurve(x=x, y=x)
        with pytest.raises(FitError):
            collapse_deviation([c])
        far = DistanceCurve(x=x + 100.0, y=x)
        with pytest.raises(FitError):
            collapse_deviation([c, far])


class TestSaturation:
    def test_first_small_gain_wins(self):
        assert saturation_point([10.0, 5.0, 4.9, 4.8], eps=1.0) == 2
        assert saturation_point([10.0, 5.0, 1.0], eps=0.5) is None
        assert saturation_point([10.0], eps=0.5) is None
        assert saturation_point([10.0, 10.0, 1.0], eps=0.5) == 1

    def test_default_eps_is_one_percent_of_start(self):
        assert saturation_point([100.0, 50.0, 49.8]) == 2
        assert saturation_point([100.0, 50.0, 25.0]) is None

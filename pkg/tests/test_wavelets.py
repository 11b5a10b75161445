import json

import numpy as np
import pytest

from bitwave.errors import ConfigurationError, ResolutionError
from bitwave.estimators import CoefficientTree
from bitwave.wavelets import (DensityGrid, WaveletSpec, analyze, analyze_level,
                              build_table, daubechies_filter, load_table,
                              make_table, reconstruct, save_table,
                              translation_range)


def cascade_fixed_point(h, resolution, tol=1e-13, max_iter=200):
    """Independent oracle: iterate the refinement map on the dyadic grid to
    its fixed point, starting from a box profile."""
    length = len(h) - 1
    n = length << resolution
    vals = np.zeros(n + 1)
    vals[: (1 << resolution)] = 1.0  # box on [0, 1)
    idx = np.arange(n + 1)
    for _ in range(max_iter):
        new = np.zeros(n + 1)
        for k, hk in enumerate(h):
            src = 2 * idx - k * (1 << resolution)
            ok = (src >= 0) & (src <= n)
            new[ok] += np.sqrt(2.0) * hk * vals[src[ok]]
        if np.max(np.abs(new - vals)) < tol:
            vals = new
            break
        vals = new
    return vals


def quadratic_density(resolution=14):
    xs = np.linspace(0.0, 1.0, (1 << resolution) + 1)
    return DensityGrid(values=6.0 * xs * (1.0 - xs), resolution=resolution)


class TestFilters:
    def test_haar_filter(self):
        h = daubechies_filter(1)
        assert np.allclose(h, [1 / np.sqrt(2)] * 2)

    @pytest.mark.parametrize("order", [2, 4, 7, 10])
    def test_filter_identities(self, order):
        h = daubechies_filter(order)
        assert len(h) == 2 * order
        assert abs(h.sum() - np.sqrt(2)) < 1e-10
        # double-shift orthogonality of the lowpass filter
        for shift in range(1, order):
            assert abs(np.dot(h[2 * shift:], h[: len(h) - 2 * shift])) < 1e-10


class TestBuildTable:
    def test_haar_closed_form(self):
        t = make_table("haar", 10)
        xs = np.array([0.1, 0.25, 0.6, 0.93])
        assert np.allclose(t.eval_base("father", xs), 1.0)
        assert np.allclose(t.eval_base("mother", xs), [1, 1, -1, -1])
        assert t.eval_base("father", np.array([1.7]))[0] == 0.0

    @pytest.mark.parametrize("name", ["haar", "db2", "db5", "db10"])
    def test_integral_and_support(self, name):
        t = make_table(name, 12)
        assert abs(t.integral_phi - 1.0) < 1e-3
        assert t.support_length == 2 * t.spec.order - 1
        assert t.spec.support_radius == t.support_length
        assert np.all(np.isfinite(t.phi_values))
        assert np.all(np.isfinite(t.psi_values))

    def test_gram_matrix_near_identity(self, tables):
        t = tables["db2"]
        step = t.grid_step
        n = len(t.phi_values)
        for k in range(0, t.support_length + 1):
            shift = k << t.resolution
            ip = np.trapezoid(t.phi_values[shift:] * t.phi_values[: n - shift],
                              dx=step)
            assert abs(ip - (1.0 if k == 0 else 0.0)) < 1e-2

    def test_partition_of_unity(self, tables):
        for name in ("db2", "db4"):
            t = tables[name]
            xs = np.linspace(0.0, 1.0, (1 << 10) + 1)
            total = sum(t.eval_base("father", xs - k)
                        for k in range(-t.support_length, 1))
            assert np.max(np.abs(total - 1.0)) < 1e-2

    def test_sup_matches_fixed_point_oracle(self):
        t = make_table("db2", 12)
        oracle = cascade_fixed_point(daubechies_filter(2), 12)
        assert abs(t.sup_phi - np.max(np.abs(oracle))) < 1e-6
        assert np.max(np.abs(t.phi_values - oracle)) < 1e-6

    def test_bad_inputs(self):
        with pytest.raises(ConfigurationError):
            make_table("sym4", 12)
        with pytest.raises(ConfigurationError):
            make_table("db11", 12)
        with pytest.raises(ConfigurationError):
            build_table(WaveletSpec.parse("db2"), 4)


class TestEval:
    def test_haar_scaled(self, tables):
        t = tables["haar"]
        assert t.eval("father", 1, 1, 0.75) == pytest.approx(np.sqrt(2))

    def test_outside_support_is_zero(self, tables):
        for t in tables.values():
            assert t.eval("mother", 3, 0, -5.0) == 0.0
            assert t.eval("mother", 3, 0, 5.0) == 0.0

    def test_grid_point_matches_oracle(self):
        t = make_table("db2", 12)
        oracle = cascade_fixed_point(daubechies_filter(2), 12)
        # x = 1.0 at level 0 is a native grid point
        assert abs(t.eval("father", 0, 0, 1.0) - oracle[1 << 12]) < 1e-6

    def test_support_scaling(self, tables):
        t = tables["db2"]
        j, k = 4, 3
        width = t.support_length * 2.0 ** (-j)
        xs = np.linspace(k * 2.0 ** (-j) - 0.2, k * 2.0 ** (-j) + width + 0.2, 701)
        vals = t.eval("father", j, k, xs)
        nz = xs[np.abs(vals) > 0]
        assert nz.min() >= k * 2.0 ** (-j) - 1e-9
        assert nz.max() <= k * 2.0 ** (-j) + width + 1e-9
        assert width <= 2 * t.spec.support_radius * 2.0 ** (-j)


class TestAnalyze:
    def test_uniform_haar(self, tables):
        t = tables["haar"]
        uni = DensityGrid(values=np.ones((1 << 14) + 1), resolution=14)
        assert analyze(t, uni, 0, 0, "mother") == pytest.approx(0.0, abs=1e-12)
        assert analyze(t, uni, 0, 0, "father") == pytest.approx(1.0, abs=1e-3)

    def test_uniform_mother_all_levels(self, tables):
        t = tables["haar"]
        uni = DensityGrid(values=np.ones((1 << 14) + 1), resolution=14)
        for j in range(0, 9):
            _, coeffs = analyze_level(t, uni, j, "mother")
            assert np.max(np.abs(coeffs)) < 1e-4

    def test_matches_fine_quadrature_oracle(self, tables):
        t = tables["db2"]
        f = quadratic_density()
        got = analyze(t, f, 2, 1, "father")
        n = 1 << 20
        xq = np.arange(n + 1) / n
        fq = np.interp(xq, f.xs, f.values)
        gq = t.eval("father", 2, 1, xq)
        oracle = np.trapezoid(fq * gq, dx=1.0 / n)
        assert abs(got - oracle) < 1e-5

    def test_level_vs_single(self, tables):
        t = tables["db3"]
        f = quadratic_density()
        for j in (0, 3, 6):
            k_lo, coeffs = analyze_level(t, f, j, "mother")
            for k in (k_lo, k_lo + len(coeffs) // 2, k_lo + len(coeffs) - 1):
                assert analyze(t, f, j, k, "mother") == pytest.approx(
                    coeffs[k - k_lo], abs=1e-12)

    def test_resolution_guard(self, tables):
        f = DensityGrid(values=np.ones((1 << 8) + 1), resolution=8)
        with pytest.raises(ResolutionError):
            analyze(tables["db2"], f, 7, 0, "father")

    def test_out_of_window_is_zero(self, tables):
        f = quadratic_density()
        assert analyze(tables["db2"], f, 3, 100, "father") == 0.0


class TestReconstruct:
    def test_single_alpha_haar(self, tables):
        tree = CoefficientTree(base_level=0, alpha={0: 1.0})
        grid = reconstruct(tree, tables["haar"], 10)
        assert np.allclose(grid.values[1:-1], 1.0)

    def test_roundtrip_bound(self, tables):
        # project a Lipschitz density onto the level-8 haar space; the
        # piecewise-constant approximation error is at most Lip * 2**-8
        t = tables["haar"]
        xs = np.linspace(0.0, 1.0, (1 << 14) + 1)
        f = DensityGrid(values=6.0 * xs * (1.0 - xs), resolution=14)
        k_lo, a8 = analyze_level(t, f, 8, "father")
        tree = CoefficientTree(base_level=8,
                               alpha={k_lo + i: v for i, v in enumerate(a8)})
        rec = reconstruct(tree, t, 14)
        assert np.max(np.abs(rec.values - f.values)) <= 6.0 * 2.0 ** (-8)

    @pytest.mark.parametrize("name,tol", [("haar", 1e-2), ("db2", 1e-2)])
    def test_two_level_refinement_identity(self, tables, name, tol):
        # alpha at L plus details L..H-1 synthesize the same function as
        # alpha at H alone
        t = tables[name]
        xs = np.linspace(0.0, 1.0, (1 << 14) + 1)
        f = DensityGrid(values=(1.0 + np.cos(2 * np.pi * xs)) , resolution=14)
        low, high = 2, 6
        k_lo, alpha = analyze_level(t, f, low, "father")
        tree_two = CoefficientTree(
            base_level=low, alpha={k_lo + i: v for i, v in enumerate(alpha)})
        beta = {}
        for j in range(low, high):
            kl, bj = analyze_level(t, f, j, "mother")
            for i, v in enumerate(bj):
                beta[(j, kl + i)] = float(v)
        tree_two.beta = beta
        kh, ah = analyze_level(t, f, high, "father")
        tree_one = CoefficientTree(
            base_level=high, alpha={kh + i: v for i, v in enumerate(ah)})
        g_two = reconstruct(tree_two, t, 12)
        g_one = reconstruct(tree_one, t, 12)
        assert np.max(np.abs(g_two.values - g_one.values)) < tol

    def test_refinement_identity_random_tree_density(self, tables, rng):
        # the identity also holds for coefficient trees measured from a
        # rougher fixture
        from bitwave.densities import make_test_density
        t = tables["db3"]
        f = make_test_density("tent_mix")
        low, high = 1, 5
        k_lo, alpha = analyze_level(t, f, low, "father")
        tree_two = CoefficientTree(
            base_level=low, alpha={k_lo + i: v for i, v in enumerate(alpha)})
        beta = {}
        for j in range(low, high):
            kl, bj = analyze_level(t, f, j, "mother")
            for i, v in enumerate(bj):
                beta[(j, kl + i)] = float(v)
        tree_two.beta = beta
        kh, ah = analyze_level(t, f, high, "father")
        tree_one = CoefficientTree(
            base_level=high, alpha={kh + i: v for i, v in enumerate(ah)})
        g_two = reconstruct(tree_two, t, 12)
        g_one = reconstruct(tree_one, t, 12)
        assert np.max(np.abs(g_two.values - g_one.values)) < 1e-2


class TestPersistence:
    def test_json_roundtrip(self, tables, tmp_path):
        path = tmp_path / "table.json"
        save_table(tables["db2"], path)
        loaded = load_table(path)
        assert loaded.spec == tables["db2"].spec
        assert np.array_equal(loaded.phi_values, tables["db2"].phi_values)
        record = json.loads(path.read_text())
        assert {"family", "resolution", "phi_values", "psi_values"} <= set(record)


def test_translation_range_superset(tables):
    t = tables["db4"]
    k_lo, k_hi = translation_range(t, 5)
    assert k_lo == -t.support_length + 1
    assert k_hi == (1 << 5) - 1

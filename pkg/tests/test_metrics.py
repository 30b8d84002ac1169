"""Metric oracles: hand-computed W2 pairings, naive MMD, projection reductions."""

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from alltimeot.kernels import RadialKernel
from alltimeot.metrics import drift_grid_mse, mc_floor, mmd, sliced_w2, w2_1d
from alltimeot.models import constant_drift


def naive_mmd(a, b, h):
    a = np.atleast_2d(a.T).T if a.ndim == 1 else a
    b = np.atleast_2d(b.T).T if b.ndim == 1 else b
    kaa = np.exp(-cdist(a, a, "sqeuclidean") / (2 * h * h)).mean()
    kbb = np.exp(-cdist(b, b, "sqeuclidean") / (2 * h * h)).mean()
    kab = np.exp(-cdist(a, b, "sqeuclidean") / (2 * h * h)).mean()
    return np.sqrt(max(0.0, kaa + kbb - 2 * kab))


class TestW2:
    def test_hand_cases(self):
        assert w2_1d([0.0], [2.0]) == 2.0
        assert w2_1d([0.0, 1.0], [1.0, 3.0]) == pytest.approx(np.sqrt(2.5), rel=1e-12)
        assert w2_1d([3.0, 1.0, 2.0], [1.0, 2.0, 3.0]) == 0.0
        # ten fixed pairings against by-hand sorted computation
        rng = np.random.default_rng(0)
        for _ in range(10):
            a = rng.normal(size=8)
            b = rng.normal(size=8)
            want = np.sqrt(np.mean((np.sort(a) - np.sort(b)) ** 2))
            assert w2_1d(a, b) == pytest.approx(want, rel=1e-14)

    def test_metric_properties(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a, b, c = (rng.normal(size=12) for _ in range(3))
            dab, dba = w2_1d(a, b), w2_1d(b, a)
            assert dab == dba
            assert w2_1d(a, a) == 0.0
            assert dab <= w2_1d(a, c) + w2_1d(c, b) + 1e-12

    def test_zero_iff_equal_multisets(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=9)
        assert w2_1d(a, rng.permutation(a)) == 0.0
        assert w2_1d(a, a + 1e-3) > 0.0

    def test_unequal_sizes_quantile_interpolation(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=40_000)
        b = rng.normal(size=25_000)
        assert w2_1d(a, b) < 0.03

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            w2_1d([], [1.0])


class TestSlicedW2:
    def test_reduces_to_w2_in_1d(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=(64, 1))
        b = rng.normal(size=(64, 1)) + 0.5
        want = w2_1d(a[:, 0], b[:, 0])
        for n_proj in (1, 7, 50):
            got = sliced_w2(a, b, n_projections=n_proj, rng=np.random.default_rng(9))
            assert got == pytest.approx(want, rel=1e-12)

    def test_identical_zero(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(100, 3))
        assert sliced_w2(a, a.copy(), rng=rng) == 0.0

    def test_translated_gaussians_expectation(self):
        rng = np.random.default_rng(6)
        c = 1.0
        a = rng.normal(size=(100_000, 2))
        b = rng.normal(size=(100_000, 2))
        b[:, 0] += c
        got = sliced_w2(a, b, n_projections=200, rng=np.random.default_rng(7))
        assert got == pytest.approx(c / np.sqrt(2), rel=0.05)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sliced_w2(np.zeros((5, 2)), np.zeros((5, 3)))


class TestMmd:
    def test_identical_zero(self):
        rng = np.random.default_rng(8)
        a = rng.normal(size=(60, 2))
        assert mmd(a, a.copy(), RadialKernel(1.0)) == 0.0

    def test_naive_oracle(self):
        rng = np.random.default_rng(9)
        for n, m, d in [(10, 10, 1), (30, 50, 2), (50, 20, 3)]:
            a = rng.normal(size=(n, d))
            b = rng.normal(size=(m, d)) + 0.3
            for h in (0.5, 1.0, 2.0):
                got = mmd(a, b, RadialKernel(h))
                assert got == pytest.approx(naive_mmd(a, b, h), rel=1e-12, abs=1e-12)

    def test_symmetry_and_permutation_invariance(self):
        rng = np.random.default_rng(10)
        a = rng.normal(size=(25, 2))
        b = rng.normal(size=(35, 2))
        k = RadialKernel(1.0)
        assert mmd(a, b, k) == pytest.approx(mmd(b, a, k), rel=1e-14)
        assert mmd(a[rng.permutation(25)], b, k) == pytest.approx(mmd(a, b, k), rel=1e-12)

    def test_large_sample_floor(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(20_000, 1))
        b = rng.normal(size=(20_000, 1))
        assert mmd(a, b, RadialKernel(1.0)) <= 0.02


class TestDriftGridMse:
    def test_exact_drift_zero(self):
        drift = constant_drift(2.0, 1)
        total, per = drift_grid_mse(drift, drift)
        assert total == 0.0 and per == 0.0

    def test_constant_gap(self):
        total, per = drift_grid_mse(constant_drift(0.0, 1), constant_drift(2.0, 1))
        assert total == pytest.approx(4.0, rel=1e-12)
        assert per == total

    def test_zero_vs_roundtrip_drift(self):
        truth = lambda pts: 2 * np.pi * np.cos(np.pi * pts[:, :1])
        total, _ = drift_grid_mse(constant_drift(0.0, 1), truth)
        assert 19.5 <= total <= 20.5  # ~ 2 pi^2 with grid-endpoint weighting

    def test_per_component_is_total_over_d(self):
        rng = np.random.default_rng(12)
        truth = constant_drift([1.0, -1.0], 2)
        total, per = drift_grid_mse(
            constant_drift([0.0, 0.0], 2),
            truth,
            x_ranges=((-2, 2), (-2, 2)),
            nt=5,
            nx=9,
        )
        assert per == pytest.approx(total / 2)
        assert total == pytest.approx(2.0, rel=1e-12)

    def test_mc_mode(self):
        rng = np.random.default_rng(13)
        total, per = drift_grid_mse(
            constant_drift(np.zeros(5), 5),
            constant_drift(np.full(5, 1 / np.sqrt(5)), 5),
            x_ranges=tuple((-3, 3) for _ in range(5)),
            mc_points=2000,
            mc_slices=15,
            rng=rng,
        )
        assert total == pytest.approx(1.0, rel=1e-12)
        assert per == pytest.approx(0.2, rel=1e-12)

    def test_degenerate_region(self):
        with pytest.raises(ValueError):
            drift_grid_mse(constant_drift(0.0, 1), constant_drift(0.0, 1), x_ranges=((1, 1),))


class TestMcFloor:
    def test_gaussian_floor_scale(self):
        # two 5k halves of a standard normal: W2 floor is a few hundredths
        # (single realizations scatter widely around ~0.02-0.03)
        rng = np.random.default_rng(14)
        sample = rng.normal(size=(10_000, 1))
        vals = [mc_floor(sample, np.random.default_rng(15 + r)) for r in range(5)]
        w2 = np.mean([v["w2"] for v in vals])
        assert 0.01 <= w2 <= 0.06
        assert np.mean([v["mmd"] for v in vals]) < 0.03

    def test_floor_decreases_with_sample_size(self):
        rng = np.random.default_rng(16)
        w2s = []
        for n in (1000, 4000, 16_000):
            sample = rng.normal(size=(n, 1))
            vals = [
                mc_floor(sample, np.random.default_rng(100 + r))["w2"] for r in range(5)
            ]
            w2s.append(np.mean(vals))
        assert w2s[0] > w2s[1] > w2s[2]

    def test_small_sample_rejected(self):
        with pytest.raises(ValueError):
            mc_floor(np.zeros((3, 1)), np.random.default_rng(0))

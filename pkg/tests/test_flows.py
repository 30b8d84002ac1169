"""Marginal flow samplers, densities and optimal drifts."""

import numpy as np
import pytest
from scipy.integrate import quad

from alltimeot.errors import ConfigError
from alltimeot.flows import KINDS, make_flow
from alltimeot.metrics import w2_1d
from alltimeot.simulate import SimulationConfig, simulate_ode

STD_NORMAL_AT_0 = 0.3989422804014327  # N(0,1) pdf at 0


class TestSampling:
    def test_gauss_translate_endpoint_moments(self):
        flow = make_flow("gauss_translate_1d")
        x = flow.sample(0.0, 200_000, np.random.default_rng(0))
        assert x.mean() == pytest.approx(-1.0, abs=0.01)
        assert x.var() == pytest.approx(1.0, abs=0.02)

    def test_bimodal_modes_coincide_at_one(self):
        flow = make_flow("bimodal_merge_1d")
        mean, var = flow.moments(1.0)
        assert mean[0] == 0.0 and var[0] == 1.0
        x = flow.sample(1.0, 100_000, np.random.default_rng(1))
        assert x.mean() == pytest.approx(0.0, abs=0.02)

    def test_bifurcation_x2_marginal_standard_normal(self):
        flow = make_flow("bifurcation_2d")
        for t in (0.0, 0.3, 1.0):
            x = flow.sample(t, 100_000, np.random.default_rng(2))
            assert x[:, 1].mean() == pytest.approx(0.0, abs=0.02)
            assert x[:, 1].var() == pytest.approx(1.0, abs=0.03)

    def test_range_error(self):
        flow = make_flow("gauss_translate_1d")
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            flow.sample(1.5, 10, rng)
        with pytest.raises(ValueError):
            flow.sample(-0.1, 10, rng)


class TestTrueDrift:
    def test_roundtrip_zero_at_half(self):
        flow = make_flow("roundtrip_1d")
        u = flow.true_drift(0.5, np.array([[0.0], [3.0]]))
        assert np.allclose(u, 0.0, atol=1e-12)

    def test_bimodal_zero_at_one(self):
        flow = make_flow("bimodal_merge_1d")
        u = flow.true_drift(1.0, np.array([[0.7], [-2.0]]))
        assert np.allclose(u, 0.0)

    def test_stochastic_at_origin(self):
        flow = make_flow("stochastic_gauss_1d")
        u = flow.true_drift(0.0, np.array([[0.0]]))
        assert u[0, 0] == pytest.approx(1.5, rel=1e-12)

    def test_translate_nd_unit_norm(self):
        for d in (1, 2, 3, 5, 8, 10):
            flow = make_flow("gauss_translate_nd", d=d)
            u = flow.true_drift(0.4, np.zeros((3, d)))
            assert np.allclose(np.linalg.norm(u, axis=1), 1.0, rtol=1e-14)

    def test_horizon_rescaling(self):
        base = make_flow("gauss_translate_1d")
        slow = make_flow("gauss_translate_1d", T=2.0)
        x = np.array([[0.3]])
        assert slow.true_drift(1.0, x)[0, 0] == pytest.approx(
            base.true_drift(0.5, x)[0, 0] / 2.0
        )
        ms, _ = slow.moments(1.0)
        mb, _ = base.moments(0.5)
        assert ms[0] == mb[0]


class TestDensity:
    def test_gauss_translate_midpoint(self):
        flow = make_flow("gauss_translate_1d")
        got = flow.density(0.5, np.array([[0.0]]))[0]
        assert got == pytest.approx(STD_NORMAL_AT_0, rel=1e-9)

    def test_bimodal_mixture_value(self):
        flow = make_flow("bimodal_merge_1d")
        got = flow.density(0.0, np.array([[0.0]]))[0]
        want = 0.5 * STD_NORMAL_AT_0 * np.exp(-2.0) * 2
        assert got == pytest.approx(want, rel=1e-9)

    @pytest.mark.parametrize("kind", ["gauss_translate_1d", "roundtrip_1d",
                                      "bimodal_merge_1d", "stochastic_gauss_1d"])
    def test_normalization_1d(self, kind):
        flow = make_flow(kind)
        for t in (0.0, 0.37, 1.0):
            total, _ = quad(lambda x: flow.density(t, np.array([[x]]))[0], -15, 15)
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_normalization_2d(self):
        flow = make_flow("bifurcation_2d")
        # product structure: integrate each factor by quadrature
        t = 0.25
        fx, _ = quad(
            lambda x: flow.density(t, np.array([[x, 0.0]]))[0], -15, 15
        )
        fy, _ = quad(
            lambda y: flow.density(t, np.array([[0.0, y]]))[0], -15, 15
        )
        joint = flow.density(t, np.array([[0.0, 0.0]]))[0]
        assert fx * fy == pytest.approx(joint, rel=1e-6)


class TestDriftMarginalConsistency:
    """Pushing mu_0 through the exact ODE flow of the optimal drift must
    reproduce mu_t to within sampling noise."""

    @pytest.mark.parametrize(
        "kind,d",
        [
            ("gauss_translate_1d", 1),
            ("roundtrip_1d", 1),
            ("bimodal_merge_1d", 1),
            ("gauss_translate_2d", 2),
            ("bifurcation_2d", 2),
            ("gauss_translate_nd", 3),
        ],
    )
    def test_pushforward_matches_marginals(self, kind, d):
        flow = make_flow(kind, d=d) if kind == "gauss_translate_nd" else make_flow(kind)
        rng = np.random.default_rng(99)
        n = 100_000
        x0 = flow.sample(0.0, n, rng)
        cfg = SimulationConfig(
            n_particles=n, n_steps=2000, snapshot_times=(0.25, 0.5, 0.75, 1.0)
        )
        snaps = simulate_ode(flow.drift_fn(), x0, cfg)
        for t, sim in snaps.items():
            got = np.zeros(flow.dim)
            floor = np.zeros(flow.dim)
            for _ in range(3):  # average out the draw noise on both sides
                ref = flow.sample(t, n, rng)
                floor_a, floor_b = flow.sample(t, n, rng), flow.sample(t, n, rng)
                for j in range(flow.dim):
                    got[j] += w2_1d(sim[:, j], ref[:, j]) / 3
                    floor[j] += w2_1d(floor_a[:, j], floor_b[:, j]) / 3
            for j in range(flow.dim):
                assert got[j] <= 1.5 * floor[j], (kind, t, j, got[j], floor[j])


def test_unknown_kind_rejected():
    with pytest.raises(ConfigError):
        make_flow("banana")
    with pytest.raises(ConfigError):
        make_flow("gauss_translate_nd")  # missing d
    assert len(KINDS) == 7

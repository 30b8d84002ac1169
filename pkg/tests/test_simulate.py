"""Particle simulators: exactness, convergence, determinism, export."""

import numpy as np
import pytest

from alltimeot.errors import ConfigError
from alltimeot.flows import make_flow
from alltimeot.metrics import w2_1d
from alltimeot.models import constant_drift
from alltimeot.simulate import (
    SimulationConfig,
    export_snapshots,
    simulate_ode,
    simulate_sde,
)


class TestOde:
    def test_constant_drift_exact(self):
        cfg = SimulationConfig(n_particles=3, n_steps=1000, snapshot_times=(1.0,))
        x0 = np.full((3, 1), -1.0)
        snaps = simulate_ode(constant_drift(2.0, 1), x0, cfg)
        assert np.allclose(snaps[1.0], 1.0, atol=1e-12)

    def test_roundtrip_returns_to_start(self):
        cfg = SimulationConfig(n_particles=1, n_steps=10_000, snapshot_times=(1.0,))
        drift = lambda pts: 2 * np.pi * np.cos(np.pi * pts[:, :1])
        snaps = simulate_ode(drift, np.zeros((1, 1)), cfg)
        assert abs(snaps[1.0][0, 0]) < 1e-3

    def test_zero_drift_identity(self):
        cfg = SimulationConfig(n_particles=5, n_steps=10, snapshot_times=(0.0, 0.5, 1.0))
        x0 = np.random.default_rng(0).normal(size=(5, 2))
        snaps = simulate_ode(constant_drift([0.0, 0.0], 2), x0, cfg)
        for t in (0.0, 0.5, 1.0):
            assert np.array_equal(snaps[t], x0)

    def test_snapshots_off_grid_land_exactly(self):
        cfg = SimulationConfig(n_particles=2, n_steps=3, snapshot_times=(0.1, 0.7))
        snaps = simulate_ode(constant_drift(1.0, 1), np.zeros((2, 1)), cfg)
        assert set(snaps) == {0.1, 0.7}
        assert np.allclose(snaps[0.1], 0.1, atol=1e-14)

    def test_nonfinite_aborts_with_location(self):
        def drift(pts):
            out = np.zeros((len(pts), 1))
            out[1] = np.inf  # particle 1 blows up
            return out

        cfg = SimulationConfig(n_particles=3, n_steps=4, snapshot_times=(1.0,))
        with pytest.raises(FloatingPointError, match="particle 1"):
            simulate_ode(drift, np.zeros((3, 1)), cfg)

    def test_step_halving_improves_roundtrip(self):
        flow = make_flow("roundtrip_1d")
        x0 = flow.sample(0.0, 20_000, np.random.default_rng(1))
        ref = flow.sample(0.5, 200_000, np.random.default_rng(2))
        errs = []
        for steps in (8, 16, 32, 64):
            cfg = SimulationConfig(n_particles=len(x0), n_steps=steps, snapshot_times=(0.5,))
            snaps = simulate_ode(flow.drift_fn(), x0, cfg)
            errs.append(w2_1d(snaps[0.5][:, 0], ref[:, 0]))
        assert errs[0] > errs[1] > errs[2]


class TestSde:
    def test_brownian_variance_growth(self):
        rng = np.random.default_rng(5)
        x0 = rng.normal(size=(100_000, 1))
        cfg = SimulationConfig(
            n_particles=len(x0), n_steps=200, sigma=1.0, snapshot_times=(1.0,)
        )
        snaps = simulate_sde(constant_drift(0.0, 1), x0, cfg, rng)
        assert snaps[1.0].var() == pytest.approx(x0.var() + 1.0, rel=0.02)

    def test_seed_determinism(self):
        x0 = np.zeros((50, 1))
        cfg = SimulationConfig(n_particles=50, n_steps=20, sigma=0.5, snapshot_times=(1.0,))
        a = simulate_sde(constant_drift(0.0, 1), x0, cfg, np.random.default_rng(7))
        b = simulate_sde(constant_drift(0.0, 1), x0, cfg, np.random.default_rng(7))
        assert np.array_equal(a[1.0], b[1.0])

    def test_nelson_true_drift_tracks_marginals(self):
        # paper-scale run: 20k particles, 2k steps, mean W2 under 0.03
        flow = make_flow("stochastic_gauss_1d")
        rng = np.random.default_rng(11)
        x0 = flow.sample(0.0, 20_000, rng)
        cfg = SimulationConfig(
            n_particles=20_000,
            n_steps=2000,
            sigma=1.0,
            snapshot_times=(0.0, 0.25, 0.5, 0.75, 1.0),
        )
        snaps = simulate_sde(flow.drift_fn(), x0, cfg, rng)
        w2s = [
            w2_1d(snaps[t][:, 0], flow.sample(t, 20_000, rng)[:, 0])
            for t in cfg.snapshot_times
        ]
        assert np.mean(w2s) <= 0.03

    def test_zero_drift_diverges_as_brownian(self):
        flow = make_flow("stochastic_gauss_1d")
        rng = np.random.default_rng(13)
        x0 = flow.sample(0.0, 20_000, rng)
        cfg = SimulationConfig(
            n_particles=20_000, n_steps=2000, sigma=1.0, snapshot_times=(1.0,)
        )
        snaps = simulate_sde(constant_drift(0.0, 1), x0, cfg, rng)
        w2 = w2_1d(snaps[1.0][:, 0], flow.sample(1.0, 20_000, rng)[:, 0])
        assert 1.8 <= w2 <= 2.3


class TestConfigAndExport:
    def test_config_validation(self):
        with pytest.raises(ConfigError):
            SimulationConfig(n_particles=1, n_steps=0)
        with pytest.raises(ConfigError):
            SimulationConfig(n_particles=1, n_steps=1, snapshot_times=(0.5, 0.2))
        with pytest.raises(ConfigError):
            SimulationConfig(n_particles=1, n_steps=1, snapshot_times=(0.0, 1.5))

    def test_export_roundtrip(self, tmp_path):
        cfg = SimulationConfig(n_particles=4, n_steps=10, snapshot_times=(0.0, 1.0))
        x0 = np.random.default_rng(0).normal(size=(4, 2))
        snaps = simulate_ode(constant_drift([1.0, -1.0], 2), x0, cfg)
        path = tmp_path / "snaps.csv"
        export_snapshots(snaps, path)
        rows = path.read_text().strip().splitlines()
        assert rows[0] == "time,particle,x1,x2"
        assert len(rows) == 1 + 2 * 4
        t, i, x1, x2 = rows[1].split(",")
        assert float(t) == 0.0 and int(i) == 0
        assert float(x1) == x0[0, 0]  # 17 significant digits round-trip

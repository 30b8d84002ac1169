"""Optimizer smoke tests and contracts."""

import numpy as np
import pytest

from alltimeot.errors import ConfigError, NonFiniteLossError
from alltimeot.optimizers import (
    FirstOrderConfig,
    QuasiNewtonConfig,
    cosine_schedule,
    minimize_adaptive,
    minimize_qn,
)


class TestQuasiNewton:
    def test_quadratic_bowl(self):
        a = np.array([1.0, -2.0, 3.0])

        def f(w):
            return float(np.sum((w - a) ** 2)), 2.0 * (w - a)

        res = minimize_qn(f, np.zeros(3), QuasiNewtonConfig())
        assert np.allclose(res.w, a, atol=1e-8)
        assert res.converged

    def test_rosenbrock(self):
        def f(w):
            x, y = w
            val = (1 - x) ** 2 + 100 * (y - x * x) ** 2
            grad = np.array(
                [-2 * (1 - x) - 400 * x * (y - x * x), 200 * (y - x * x)]
            )
            return val, grad

        res = minimize_qn(f, np.array([-1.2, 1.0]), QuasiNewtonConfig(maxiter=500))
        assert np.allclose(res.w, [1.0, 1.0], atol=1e-4)

    def test_best_of_restarts(self):
        # two basins; the multi-start result must find the deeper one
        def f(w):
            x = w[0]
            val = (x * x - 1.0) ** 2 + 0.1 * x
            grad = np.array([4.0 * x * (x * x - 1.0) + 0.1])
            return val, grad

        starts = np.array([[1.2], [-1.2]])
        res = minimize_qn(f, starts, QuasiNewtonConfig())
        assert res.w[0] < 0  # deeper minimum near -1
        assert len(res.restart_losses) == 2

    def test_monotone_descent(self):
        a = np.array([4.0, 4.0])

        def f(w):
            return float(np.sum((w - a) ** 2)), 2.0 * (w - a)

        w0 = np.zeros(2)
        res = minimize_qn(f, w0, QuasiNewtonConfig())
        assert res.loss <= f(w0)[0]

    def test_nonfinite_aborts(self):
        def f(w):
            return float("nan"), np.zeros(1)

        with pytest.raises(NonFiniteLossError):
            minimize_qn(f, np.zeros(1), QuasiNewtonConfig())

    def test_tolerance_validated(self):
        with pytest.raises(ConfigError):
            QuasiNewtonConfig(gtol=0.0)


class TestAdaptive:
    def test_deterministic_quadratic(self):
        a = np.array([0.5, -1.5])

        def f(w, batch):
            return float(np.sum((w - a) ** 2)), 2.0 * (w - a)

        cfg = FirstOrderConfig(iterations=2000, lr_init=0.05, lr_final=1e-3)
        w, trace = minimize_adaptive(f, np.zeros(2), cfg, [None], np.random.default_rng(0))
        assert np.allclose(w, a, atol=1e-3)
        assert trace.shape == (2000,)

    def test_bit_identical_trajectories(self):
        def f(w, batch):
            return float(np.sum((w - batch) ** 2)), 2.0 * (w - batch)

        batches = [np.array([1.0]), np.array([2.0]), np.array([-1.0])]
        cfg = FirstOrderConfig(iterations=500, lr_init=0.02, lr_final=1e-4, k_batch=2)
        w1, t1 = minimize_adaptive(f, np.zeros(1), cfg, batches, np.random.default_rng(3))
        w2, t2 = minimize_adaptive(f, np.zeros(1), cfg, batches, np.random.default_rng(3))
        assert np.array_equal(w1, w2)
        assert np.array_equal(t1, t2)

    def test_rotation_covers_pool(self):
        seen = []

        def f(w, batch):
            seen.append(batch)
            return 0.0, np.zeros(1)

        cfg = FirstOrderConfig(iterations=6, lr_init=1e-3, lr_final=1e-4, k_batch=1)
        minimize_adaptive(f, np.zeros(1), cfg, [0, 1, 2], np.random.default_rng(0))
        assert sorted(set(seen)) == [0, 1, 2]

    def test_abort_on_persistent_nonfinite(self):
        def f(w, batch):
            return float("inf"), np.zeros(1)

        cfg = FirstOrderConfig(iterations=1000, lr_init=1e-3, lr_final=1e-4)
        with pytest.raises(NonFiniteLossError):
            minimize_adaptive(f, np.zeros(1), cfg, [None], np.random.default_rng(0))

    def test_schedule_endpoints(self):
        assert cosine_schedule(0, 100, 3e-3, 1e-5) == pytest.approx(3e-3)
        assert cosine_schedule(99, 100, 3e-3, 1e-5) == pytest.approx(1e-5)
        with pytest.raises(ConfigError):
            FirstOrderConfig(iterations=10, lr_init=1e-5, lr_final=1e-3)

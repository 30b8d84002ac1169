"""Sample-based loss: kinetic energy plus the continuity-residual penalty.

The penalty is a three-sum estimator over one batch of (M time slices x N
particles) plus N0 initial particles:

* a bulk double sum over point pairs, weighted by T - max(t_p, t_q), of the
  double generator application to the kernel;
* a boundary sum coupling every batch point to every initial particle,
  weighted by T - t_p;
* a cross double sum over ordered pairs with t_p <= t_q of the single
  generator application.

Pair sums exclude only self-pairs; same-time cross-particle pairs are kept
(the M^2 N^2 normalization trades an O(1/M) bias for lower variance, which
`bias_probe` measures).  The loss depends on the model only through its
values at the batch points, so one evaluation pass feeds every term and the
parameter gradient is a single reverse-mode contraction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _pairsum
from .errors import ConfigError
from .kernels import GAUSSIAN, RadialKernel

TIME_MODES = ("grid", "iid_uniform")


@dataclass(frozen=True)
class LossConfig:
    """Penalty weight, diffusion, horizon and reproducing kernel."""

    lam: float
    kernel: RadialKernel
    sigma: float = 0.0
    T: float = 1.0
    same_slice_mask: bool = False

    def __post_init__(self):
        if not (self.lam > 0):
            raise ConfigError(f"penalty weight must be positive, got {self.lam}")
        if self.sigma < 0:
            raise ConfigError(f"diffusion must be nonnegative, got {self.sigma}")
        if not (self.T > 0):
            raise ConfigError(f"horizon must be positive, got {self.T}")


class SampleBatch:
    """One data draw: M time slices x N particles, plus N0 initial particles.

    Flat indexing is row-major over (slice, particle): p = m * N + i, so two
    flat indices share a time iff they share a slice.
    """

    def __init__(self, times, particles, x0, T):
        self.times = np.asarray(times, float)
        self.particles = np.asarray(particles, float)
        self.x0 = np.asarray(x0, float)
        self.T = float(T)
        if self.particles.ndim != 3 or self.particles.shape[0] != self.times.size:
            raise ValueError("particles must have shape (M, N, d) aligned with times")
        if self.x0.ndim != 2 or self.x0.shape[1] != self.particles.shape[2]:
            raise ValueError("x0 must have shape (N0, d)")
        if np.any(self.times < 0) or np.any(self.times > self.T):
            raise ValueError("slice times must lie in [0, T]")

    @property
    def M(self):
        return self.times.size

    @property
    def N(self):
        return self.particles.shape[1]

    @property
    def N0(self):
        return self.x0.shape[0]

    @property
    def dim(self):
        return self.particles.shape[2]

    @cached_property
    def flat_times(self):
        return np.repeat(self.times, self.N)

    @cached_property
    def flat_x(self):
        return self.particles.reshape(self.M * self.N, self.dim)

    @cached_property
    def flat_points(self):
        return np.column_stack([self.flat_times, self.flat_x])

    @cached_property
    def slice_ids(self):
        return np.repeat(np.arange(self.M, dtype=np.int64), self.N)


def draw_batch(flow, M, N, N0, time_mode, rng) -> SampleBatch:
    """Draw one batch from a marginal flow.

    Grid mode places slice times at the midpoints of M equal subintervals of
    [0, T] (so every pair weight stays strictly positive); iid mode draws
    them uniformly.
    """
    if min(M, N, N0) < 1:
        raise ValueError(f"M, N, N0 must all be >= 1, got {(M, N, N0)}")
    if time_mode not in TIME_MODES:
        raise ConfigError(f"time_mode must be one of {TIME_MODES}, got {time_mode!r}")
    T = flow.T
    if time_mode == "grid":
        times = (np.arange(M) + 0.5) * (T / M)
    else:
        times = rng.uniform(0.0, T, size=M)
    particles = np.stack([flow.sample(t, N, rng) for t in times])
    x0 = flow.sample(0.0, N0, rng)
    return SampleBatch(times, particles, x0, T)


def kinetic_energy(batch: SampleBatch, drift_values, T) -> float:
    """(T / MN) * sum of squared drift values over the batch points."""
    U = np.asarray(drift_values, float)
    if U.shape != (batch.M * batch.N, batch.dim):
        raise ValueError(
            f"drift values misaligned: expected {(batch.M * batch.N, batch.dim)}, got {U.shape}"
        )
    return float(T / (batch.M * batch.N) * np.sum(U * U))


def _penalty_prefactors(batch: SampleBatch, T):
    mn = batch.M * batch.N
    c1 = T * T / (mn * mn)
    c2 = 2.0 * T / (mn * batch.N0)
    c3 = -2.0 * T * T / (mn * mn)
    return c1, c2, c3


def _penalty(batch: SampleBatch, drift_values, config: LossConfig, with_grad):
    if config.kernel.profile != GAUSSIAN:
        raise ConfigError("penalty pair sums are implemented for the gaussian profile")
    U = np.ascontiguousarray(np.asarray(drift_values, float))
    if U.shape != (batch.M * batch.N, batch.dim):
        raise ValueError(
            f"drift values misaligned: expected {(batch.M * batch.N, batch.dim)}, got {U.shape}"
        )
    c1, c2, c3 = _penalty_prefactors(batch, config.T)
    value, dU = _pairsum.penalty_sums(
        np.ascontiguousarray(batch.flat_times),
        np.ascontiguousarray(batch.flat_x),
        U,
        batch.slice_ids,
        np.ascontiguousarray(batch.x0),
        config.T,
        config.kernel.bandwidth,
        config.sigma,
        c1,
        c2,
        c3,
        config.same_slice_mask,
        with_grad,
    )
    return float(value), dU


def residual_penalty(batch: SampleBatch, drift_values, config: LossConfig) -> float:
    """The penalty estimate for given drift values at the batch points.

    May be negative: the drift-independent terms of the squared residual norm
    are dropped, so only differences of this quantity are meaningful.
    """
    return _penalty(batch, drift_values, config, with_grad=False)[0]


def total_loss(model, batch: SampleBatch, config: LossConfig) -> float:
    """Kinetic energy + lambda * penalty, one model evaluation pass."""
    U = model.evaluate(batch.flat_points)
    return kinetic_energy(batch, U, config.T) + config.lam * residual_penalty(
        batch, U, config
    )


def loss_and_gradient(model, batch: SampleBatch, config: LossConfig):
    """Loss value and its gradient with respect to the model parameters.

    Every penalty term is at most bilinear in the drift values, so the value
    pass also yields d(loss)/d(values); the model then pulls that cotangent
    back to parameter space (an outer product for dictionaries, reverse-mode
    for the MLP).
    """
    points = batch.flat_points
    U = model.evaluate(points)
    pen, dU = _penalty(batch, U, config, with_grad=True)
    value = kinetic_energy(batch, U, config.T) + config.lam * pen
    cot = config.lam * dU + (2.0 * config.T / (batch.M * batch.N)) * U
    grad = model.backprop(points, cot)
    return value, grad


def loss_gradient(model, batch: SampleBatch, config: LossConfig) -> np.ndarray:
    """Parameter gradient of `total_loss` (see `loss_and_gradient`)."""
    return loss_and_gradient(model, batch, config)[1]


def ensemble_loss(model, batches, config: LossConfig):
    """Mean of per-batch losses and gradients over a fixed batch pool."""
    if len(batches) == 0:
        raise ValueError("ensemble requires at least one batch")
    value = 0.0
    grad = np.zeros(model.n_params)
    for batch in batches:
        v, g = loss_and_gradient(model, batch, config)
        value += v
        grad += g
    k = float(len(batches))
    return value / k, grad / k


def bias_probe(flow, drift, M_list, N, n_seeds, config: LossConfig, seed=0,
               time_mode="iid_uniform", N0=None):
    """Mean penalty versus M at a fixed drift, with an affine fit in 1/M.

    Returns a dict with per-M means and standard errors plus the fitted
    intercept/slope and the fit's R^2.  The 1/M trend is the finite-M bias
    of keeping same-time cross-particle pairs in the bulk sum.
    """
    if callable(drift):
        drift_fn = drift
    else:
        value = np.broadcast_to(np.asarray(drift, float), (flow.dim,))
        drift_fn = lambda pts: np.tile(value, (len(pts), 1))
    if N0 is None:
        N0 = N
    M_list = list(M_list)
    means, sems = [], []
    rows = np.zeros((len(M_list), n_seeds))
    ss = np.random.SeedSequence(entropy=(seed, 0x0B1A5))
    seeds = ss.generate_state(len(M_list) * n_seeds, dtype=np.uint64).reshape(
        len(M_list), n_seeds
    )
    t_start = time.perf_counter()
    for i, M in enumerate(M_list):
        for j in range(n_seeds):
            rng = np.random.default_rng(seeds[i, j])
            batch = draw_batch(flow, M, N, N0, time_mode, rng)
            U = drift_fn(batch.flat_points)
            rows[i, j] = residual_penalty(batch, U, config)
        means.append(rows[i].mean())
        sems.append(rows[i].std(ddof=1) / np.sqrt(n_seeds))
    means = np.array(means)
    sems = np.array(sems)
    inv_m = 1.0 / np.array(M_list, float)
    slope, intercept = np.polyfit(inv_m, means, 1)
    fitted = intercept + slope * inv_m
    ss_res = float(np.sum((means - fitted) ** 2))
    ss_tot = float(np.sum((means - means.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {
        "M": M_list,
        "mean": means,
        "sem": sems,
        "slope": float(slope),
        "intercept": float(intercept),
        "r2": float(r2),
        "elapsed_s": time.perf_counter() - t_start,
    }

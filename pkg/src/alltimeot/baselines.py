"""Comparison methods: Waddington-OT, affine multi-marginal OT, flow matching.

All three consume discrete marginal snapshots.  WOT chains entropic couplings
between consecutive snapshots (log-domain Sinkhorn, no external OT dependency)
and reconstructs a drift from barycentric displacements; MMOT fits a chain of
affine transport maps anchored at the snapshot times against a kinetic-energy
plus MMD-marginal objective; flow matching regresses a velocity field onto the
straight-line interpolant between independently drawn endpoints.

Drift reconstruction convention: the finite-difference value (T_k(x) - x)/dt
estimates the average velocity over its interval, so it is anchored at the
interval midpoint and interpolated linearly in time by default
(`time_interp="linear"`); `"constant"` keeps it piecewise constant on
[t_k, t_{k+1}).  Off the sample support, drift values are looked up at the
nearest anchor sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .errors import ConfigError
from .kernels import RadialKernel
from .optimizers import QuasiNewtonConfig, minimize_qn

DEFAULT_EPSILON_SCALE = 0.05  # epsilon = scale * mean(cost) when not given


@dataclass
class EntropicCoupling:
    """Converged (or not) entropic OT plan in log domain.

    The implied coupling is pi_ij = exp((f_i + g_j - C_ij)/eps + log a_i
    + log b_j); `plan` materializes it.
    """

    f: np.ndarray
    g: np.ndarray
    epsilon: float
    converged: bool
    marginal_violation: float
    iterations: int
    log_plan: np.ndarray
    source: np.ndarray | None = None
    target: np.ndarray | None = None

    def plan(self) -> np.ndarray:
        return np.exp(self.log_plan)


def sinkhorn_log(cost, a, b, epsilon, max_iter=5000, tol=1e-6) -> EntropicCoupling:
    """Log-domain Sinkhorn: alternating potential updates via log-sum-exp.

    Runs until the worst row/column marginal violation of the implied plan
    drops below `tol` or `max_iter` sweeps; non-convergence is reported in
    the flag, never silently.
    """
    C = np.asarray(cost, float)
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix must be finite")
    if abs(a.sum() - 1.0) > 1e-8 or abs(b.sum() - 1.0) > 1e-8:
        raise ValueError("marginal weights must sum to 1")
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("marginal weights must be positive")
    if not (epsilon > 0):
        raise ConfigError("epsilon must be positive")
    log_a = np.log(a)
    log_b = np.log(b)
    f = np.zeros(len(a))
    g = np.zeros(len(b))
    violation = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        f = -epsilon * logsumexp((g[None, :] - C) / epsilon + log_b[None, :], axis=1)
        g = -epsilon * logsumexp((f[:, None] - C) / epsilon + log_a[:, None], axis=0)
        log_plan = (f[:, None] + g[None, :] - C) / epsilon + log_a[:, None] + log_b[None, :]
        rows = np.exp(logsumexp(log_plan, axis=1))
        cols = np.exp(logsumexp(log_plan, axis=0))
        violation = max(np.abs(rows - a).max(), np.abs(cols - b).max())
        if violation <= tol:
            break
    log_plan = (f[:, None] + g[None, :] - C) / epsilon + log_a[:, None] + log_b[None, :]
    return EntropicCoupling(
        f=f,
        g=g,
        epsilon=epsilon,
        converged=bool(violation <= tol),
        marginal_violation=float(violation),
        iterations=it,
        log_plan=log_plan,
    )


def entropic_coupling_between(source, target, epsilon=None, **kw) -> EntropicCoupling:
    """Uniform-weight coupling between two point clouds (squared-distance cost)."""
    source = np.asarray(source, float)
    target = np.asarray(target, float)
    C = cdist(source, target, "sqeuclidean")
    if epsilon is None:
        epsilon = DEFAULT_EPSILON_SCALE * C.mean()
    a = np.full(len(source), 1.0 / len(source))
    b = np.full(len(target), 1.0 / len(target))
    out = sinkhorn_log(C, a, b, epsilon, **kw)
    out.source = source
    out.target = target
    return out


def barycentric_projection(coupling: EntropicCoupling) -> np.ndarray:
    """Row-normalized plan applied to the target points: x_i -> E_pi[y | x_i]."""
    if coupling.target is None:
        raise ValueError("coupling carries no target samples")
    log_rows = coupling.log_plan - logsumexp(coupling.log_plan, axis=1, keepdims=True)
    return np.exp(log_rows) @ coupling.target


def mccann_interpolate(coupling: EntropicCoupling, s, rng, n_out) -> np.ndarray:
    """Displacement interpolation: draw (i, j) ~ pi and emit (1-s) x_i + s y_j."""
    if not coupling.converged:
        raise ValueError("refusing to interpolate along an unconverged coupling")
    if coupling.source is None or coupling.target is None:
        raise ValueError("coupling carries no sample clouds")
    if not (0.0 <= s <= 1.0):
        raise ValueError("interpolation fraction must lie in [0, 1]")
    p = np.exp(coupling.log_plan).ravel()
    p /= p.sum()
    idx = rng.choice(p.size, size=n_out, p=p)
    i, j = np.divmod(idx, coupling.log_plan.shape[1])
    return (1.0 - s) * coupling.source[i] + s * coupling.target[j]


class _AnchoredDrift:
    """Piecewise drift from per-interval (anchor points, velocities).

    Interval values are anchored at interval midpoints; `linear` interpolates
    between neighboring midpoints (flat beyond the first/last), `constant`
    holds each interval's value on [t_k, t_{k+1}).
    """

    def __init__(self, edges, anchors, velocities, time_interp="linear"):
        if time_interp not in ("linear", "constant"):
            raise ConfigError(f"unknown time interpolation {time_interp!r}")
        self.edges = np.asarray(edges, float)
        self.mids = 0.5 * (self.edges[:-1] + self.edges[1:])
        self.trees = [cKDTree(x) for x in anchors]
        self.velocities = velocities
        self.time_interp = time_interp

    def _segment_value(self, k, X):
        _, nn = self.trees[k].query(X)
        return self.velocities[k][nn]

    def __call__(self, points):
        points = np.asarray(points, float)
        t = points[:, 0]
        X = points[:, 1:]
        out = np.empty((len(points), X.shape[1]))
        if self.time_interp == "constant":
            ks = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.mids) - 1)
            for k in np.unique(ks):
                sel = ks == k
                out[sel] = self._segment_value(k, X[sel])
            return out
        if len(self.mids) == 1:
            return self._segment_value(0, X)
        pos = np.clip(np.searchsorted(self.mids, t) - 1, 0, len(self.mids) - 2)
        lam = (t - self.mids[pos]) / (self.mids[pos + 1] - self.mids[pos])
        lam = np.clip(lam, 0.0, 1.0)
        for k in np.unique(pos):
            sel = pos == k
            lo = self._segment_value(k, X[sel])
            hi = self._segment_value(k + 1, X[sel])
            out[sel] = (1.0 - lam[sel, None]) * lo + lam[sel, None] * hi
        return out


def wot_drift(snapshots, epsilon=None, time_interp="linear", tol=1e-6, max_iter=5000):
    """Waddington-OT drift: chained entropic couplings + barycentric displacement.

    `snapshots` is a time-sorted list of (t_k, samples).  For each consecutive
    pair the barycentric projection T_k gives per-sample velocities
    (T_k(x_i) - x_i) / dt, evaluated off-support by nearest-sample lookup.
    Returns the drift evaluator; its `.couplings` carry the Sinkhorn output.
    """
    if len(snapshots) < 2:
        raise ValueError("need at least two snapshots")
    times = [float(t) for t, _ in snapshots]
    if times != sorted(times):
        raise ValueError("snapshots must be time-sorted")
    anchors, velocities, couplings = [], [], []
    for (t0, x0), (t1, x1) in zip(snapshots[:-1], snapshots[1:]):
        coupling = entropic_coupling_between(x0, x1, epsilon, tol=tol, max_iter=max_iter)
        proj = barycentric_projection(coupling)
        anchors.append(np.asarray(x0, float))
        velocities.append((proj - x0) / (t1 - t0))
        couplings.append(coupling)
    drift = _AnchoredDrift(times, anchors, velocities, time_interp)
    drift.couplings = couplings
    return drift


@dataclass
class AffineMapChain:
    """K affine maps T_k(x) = A_k x + b_k anchored at snapshot times (T_0 = id)."""

    times: np.ndarray  # K+1 snapshot times, times[0] = 0
    A: np.ndarray  # (K, d, d)
    b: np.ndarray  # (K, d)
    objective: float = np.nan
    diagnostics: dict = field(default_factory=dict)

    def push(self, k, x):
        """T_k(x); k = 0 is the identity."""
        x = np.asarray(x, float)
        if k == 0:
            return x.copy()
        return x @ self.A[k - 1].T + self.b[k - 1]

    def pull(self, k, y):
        """T_k^{-1}(y)."""
        y = np.asarray(y, float)
        if k == 0:
            return y.copy()
        return np.linalg.solve(self.A[k - 1], (y - self.b[k - 1]).T).T

    def interval_velocity(self, k, x):
        """Velocity field of interval k (1-based) at spatial locations x."""
        z = self.pull(k - 1, x)
        dt = self.times[k] - self.times[k - 1]
        return (self.push(k, z) - self.push(k - 1, z)) / dt

    def drift(self, time_interp="linear"):
        """Induced finite-difference drift (T_k - T_{k-1})/dt, exact affine fields.

        Midpoint-anchored with linear time interpolation by default, matching
        the WOT drift convention.
        """
        if time_interp not in ("linear", "constant"):
            raise ConfigError(f"unknown time interpolation {time_interp!r}")
        edges = self.times
        mids = 0.5 * (edges[:-1] + edges[1:])
        K = len(self.A)

        def evaluator(points):
            points = np.asarray(points, float)
            t = points[:, 0]
            X = points[:, 1:]
            out = np.empty_like(X)
            if time_interp == "constant":
                ks = np.clip(np.searchsorted(edges, t, side="right"), 1, K)
                for k in np.unique(ks):
                    sel = ks == k
                    out[sel] = self.interval_velocity(int(k), X[sel])
                return out
            pos = np.clip(np.searchsorted(mids, t) - 1, 0, max(K - 2, 0))
            if K == 1:
                return self.interval_velocity(1, X)
            lam = np.clip((t - mids[pos]) / (mids[pos + 1] - mids[pos]), 0.0, 1.0)
            for k in np.unique(pos):
                sel = pos == k
                lo = self.interval_velocity(int(k) + 1, X[sel])
                hi = self.interval_velocity(int(k) + 2, X[sel])
                out[sel] = (1.0 - lam[sel, None]) * lo + lam[sel, None] * hi
            return out

        return evaluator


def _mmot_params(w, K, d):
    w = w.reshape(K, d * d + d)
    A = w[:, : d * d].reshape(K, d, d)
    b = w[:, d * d :]
    return A, b


def mmot_objective(w, x0, snapshots, lam_m, bandwidth):
    """Map-chain kinetic energy + lam_m * MMD^2 marginal penalty, with gradient."""
    times = [t for t, _ in snapshots]
    targets = [np.asarray(x, float) for _, x in snapshots]
    K = len(times) - 1
    d = x0.shape[1]
    A, b = _mmot_params(np.asarray(w, float), K, d)
    n0 = len(x0)
    Z = [x0] + [x0 @ A[k].T + b[k] for k in range(K)]
    dZ = [np.zeros_like(x0) for _ in range(K + 1)]
    value = 0.0
    inv_bw2 = 1.0 / (bandwidth * bandwidth)
    for k in range(1, K + 1):
        dt = times[k] - times[k - 1]
        diff = Z[k] - Z[k - 1]
        value += float(np.sum(diff * diff)) / (n0 * dt)
        g = 2.0 * diff / (n0 * dt)
        dZ[k] += g
        dZ[k - 1] -= g
        # MMD^2 between pushed source and observed snapshot k
        y = targets[k]
        m = len(y)
        kzz = np.exp(-0.5 * inv_bw2 * cdist(Z[k], Z[k], "sqeuclidean"))
        kzy = np.exp(-0.5 * inv_bw2 * cdist(Z[k], y, "sqeuclidean"))
        kyy_mean = np.exp(-0.5 * inv_bw2 * cdist(y, y, "sqeuclidean")).mean()
        mmd2 = kzz.mean() + kyy_mean - 2.0 * kzy.mean()
        value += lam_m * mmd2
        # d(mmd2)/dZ_k: Gaussian kernel gradients, V-statistic weights
        row = kzz.sum(axis=1)
        grad_self = -inv_bw2 * 2.0 * (row[:, None] * Z[k] - kzz @ Z[k]) / (n0 * n0)
        rowc = kzy.sum(axis=1)
        grad_cross = -inv_bw2 * 2.0 * (rowc[:, None] * Z[k] - kzy @ y) / (n0 * m)
        dZ[k] += lam_m * (grad_self - grad_cross)
    grad = np.zeros((K, d * d + d))
    for k in range(1, K + 1):
        grad[k - 1, : d * d] = (dZ[k].T @ x0).ravel()
        grad[k - 1, d * d :] = dZ[k].sum(axis=0)
    return value, grad.ravel()


def mmot_affine_fit(snapshots, lambda_m, alpha, kernel: RadialKernel, w0,
                    qn_config: QuasiNewtonConfig | None = None) -> AffineMapChain:
    """Fit one affine map chain at fixed (lambda_m, alpha) from starts w0.

    Snapshot list must start at t = 0 (the chain is anchored there with
    T_0 = identity); the MMD bandwidth is alpha * kernel.bandwidth.
    """
    times = [float(t) for t, _ in snapshots]
    if len(times) < 2 or times[0] != 0.0:
        raise ValueError("need >= 2 snapshots and the first at t = 0")
    x0 = np.asarray(snapshots[0][1], float)
    bandwidth = alpha * kernel.bandwidth
    if qn_config is None:
        qn_config = QuasiNewtonConfig(maxiter=300, gtol=1e-7)
    res = minimize_qn(
        lambda w: mmot_objective(w, x0, snapshots, lambda_m, bandwidth), w0, qn_config
    )
    K = len(times) - 1
    d = x0.shape[1]
    A, b = _mmot_params(res.w, K, d)
    return AffineMapChain(
        times=np.asarray(times),
        A=A,
        b=b,
        objective=res.loss,
        diagnostics={"iterations": res.iterations, "lambda_m": lambda_m, "alpha": alpha},
    )


def mmot_identity_start(K, d, rng=None, scale=0.1):
    """Start vector: identity maps plus optional uniform jitter."""
    w = np.zeros((K, d * d + d))
    w[:, : d * d] = np.eye(d).ravel()
    if rng is not None:
        w += rng.uniform(-scale, scale, size=w.shape)
    return w.ravel()


def mmot_affine_best(
    snapshots,
    kernel: RadialKernel,
    lambdas=(1e3, 1e4, 1e5),
    alphas=(0.5, 1.0, 2.0),
    n_init=3,
    rng=None,
    qn_config=None,
):
    """Grid of (lambda_m, alpha, init) fits; best by mean MMD to the snapshots.

    The selection criterion uses only the observed snapshot samples (mean
    evaluation-kernel MMD between each pushed marginal and its snapshot), so
    no ground-truth drift enters.  A failing cell is recorded and skipped.
    """
    from .metrics import mmd as mmd_metric

    if rng is None:
        rng = np.random.default_rng(0)
    x0 = np.asarray(snapshots[0][1], float)
    K = len(snapshots) - 1
    d = x0.shape[1]
    cells = []
    best = None
    best_score = np.inf
    for lam_m in lambdas:
        for alpha in alphas:
            for i in range(n_init):
                w0 = mmot_identity_start(K, d, rng if i else None)
                try:
                    chain = mmot_affine_fit(snapshots, lam_m, alpha, kernel, w0, qn_config)
                    score = float(
                        np.mean(
                            [
                                mmd_metric(chain.push(k, x0), snapshots[k][1], kernel)
                                for k in range(1, K + 1)
                            ]
                        )
                    )
                    cells.append(
                        {"lambda_m": lam_m, "alpha": alpha, "init": i,
                         "objective": chain.objective, "score": score, "error": None}
                    )
                    if score < best_score:
                        best, best_score = chain, score
                except Exception as exc:  # pragma: no cover - isolation path
                    cells.append(
                        {"lambda_m": lam_m, "alpha": alpha, "init": i,
                         "objective": np.nan, "score": np.nan, "error": str(exc)}
                    )
    if best is None:
        raise RuntimeError("every MMOT grid cell failed")
    best.diagnostics["grid"] = cells
    best.diagnostics["score"] = best_score
    return best


def flow_matching_fit(mu0_samples, mu1_samples, model, rng, n_draws=50_000,
                      adam_config=None):
    """Least-squares fit of u(t, X_t) to X_1 - X_0 on the straight-line interpolant.

    Endpoints are drawn independently from the two samples (with replacement),
    t ~ Unif[0, 1].  Dictionary models are solved exactly by least squares;
    the MLP falls back to Adam on the same regression loss.
    """
    x0 = np.asarray(mu0_samples, float)
    x1 = np.asarray(mu1_samples, float)
    t = rng.uniform(0.0, 1.0, size=n_draws)
    xi = x0[rng.integers(0, len(x0), n_draws)]
    xj = x1[rng.integers(0, len(x1), n_draws)]
    xt = (1.0 - t[:, None]) * xi + t[:, None] * xj
    pts = np.column_stack([t, xt])
    target = xj - xi
    if model.family == "dictionary":
        phi = model.featurize(pts)
        W, *_ = np.linalg.lstsq(phi, target, rcond=None)
        model.set_params(W.T.ravel())
        return model
    from .optimizers import FirstOrderConfig, minimize_adaptive

    if adam_config is None:
        adam_config = FirstOrderConfig(iterations=2000, lr_init=1e-2, lr_final=1e-4)
    batches = np.array_split(rng.permutation(n_draws), max(1, n_draws // 2048))

    def loss_and_grad(w, idx):
        model.set_params(w)
        diff = model.evaluate(pts[idx]) - target[idx]
        return float(np.mean(np.sum(diff**2, axis=1))), model.backprop(
            pts[idx], 2.0 * diff / len(idx)
        )

    w, _ = minimize_adaptive(loss_and_grad, model.get_params(), adam_config, batches, rng)
    model.set_params(w)
    return model

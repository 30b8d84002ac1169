"""Forward particle simulation: explicit Euler (ODE) and Euler-Maruyama (SDE).

Snapshot times are inserted into the step grid rather than interpolated, so
every recorded marginal is an exact state of the scheme.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class SimulationConfig:
    n_particles: int
    n_steps: int
    T: float = 1.0
    sigma: float = 0.0
    snapshot_times: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)

    def __post_init__(self):
        if self.n_steps < 1:
            raise ConfigError("step count must be >= 1")
        snaps = tuple(self.snapshot_times)
        if list(snaps) != sorted(snaps):
            raise ConfigError("snapshot times must be sorted")
        if snaps and (snaps[0] < 0 or snaps[-1] > self.T):
            raise ConfigError("snapshot times must lie within [0, T]")


def as_drift_fn(drift):
    """Normalize a drift argument: a callable (n, d+1) -> (n, d) or a model."""
    if callable(drift):
        return drift
    if hasattr(drift, "evaluate"):
        return drift.evaluate
    raise TypeError(f"cannot interpret {type(drift).__name__} as a drift")


def _step_grid(config: SimulationConfig):
    base = np.linspace(0.0, config.T, config.n_steps + 1)
    return np.union1d(base, np.asarray(config.snapshot_times, float))


def _check_finite(X, step, t):
    if not np.all(np.isfinite(X)):
        bad = int(np.argwhere(~np.isfinite(X).all(axis=1))[0][0])
        raise FloatingPointError(
            f"non-finite particle state: particle {bad} at step {step} (t={t:.6g})"
        )


def simulate_ode(drift, x0, config: SimulationConfig) -> dict:
    """Integrate dX = u(t, X) dt from x0 (n, d); returns {snapshot time: states}."""
    u = as_drift_fn(drift)
    X = np.array(x0, float, copy=True)
    if X.ndim != 2:
        raise ValueError("x0 must have shape (n, d)")
    grid = _step_grid(config)
    wanted = set(float(t) for t in config.snapshot_times)
    snapshots = {}
    if float(grid[0]) in wanted:
        snapshots[float(grid[0])] = X.copy()
    for k in range(len(grid) - 1):
        t, t_next = grid[k], grid[k + 1]
        dt = t_next - t
        pts = np.column_stack([np.full(len(X), t), X])
        X = X + dt * u(pts)
        _check_finite(X, k, t_next)
        if float(t_next) in wanted:
            snapshots[float(t_next)] = X.copy()
    return snapshots


def simulate_sde(drift, x0, config: SimulationConfig, rng) -> dict:
    """Euler-Maruyama for dX = u(t, X) dt + sigma dW from x0 (n, d)."""
    u = as_drift_fn(drift)
    X = np.array(x0, float, copy=True)
    if X.ndim != 2:
        raise ValueError("x0 must have shape (n, d)")
    grid = _step_grid(config)
    wanted = set(float(t) for t in config.snapshot_times)
    snapshots = {}
    if float(grid[0]) in wanted:
        snapshots[float(grid[0])] = X.copy()
    for k in range(len(grid) - 1):
        t, t_next = grid[k], grid[k + 1]
        dt = t_next - t
        pts = np.column_stack([np.full(len(X), t), X])
        noise = rng.standard_normal(X.shape)
        X = X + dt * u(pts) + config.sigma * np.sqrt(dt) * noise
        _check_finite(X, k, t_next)
        if float(t_next) in wanted:
            snapshots[float(t_next)] = X.copy()
    return snapshots


def export_snapshots(snapshots: dict, path):
    """Write snapshots as CSV with columns time, particle, x1...xd."""
    times = sorted(snapshots)
    d = snapshots[times[0]].shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "particle"] + [f"x{j + 1}" for j in range(d)])
        for t in times:
            for i, row in enumerate(snapshots[t]):
                writer.writerow([format(t, ".17g"), i] + [format(v, ".17g") for v in row])

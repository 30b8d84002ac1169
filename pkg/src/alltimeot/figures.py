"""Figure rendering for the report path.

Every figure is rendered to PNG and accompanied by a tidy CSV holding the
plotted values, so the delimited output set is complete without re-running.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .reporting import fmt

DRIFT_COLOR = "tab:orange"
TRUE_STYLE = {"color": "black", "linestyle": "--", "linewidth": 1.2}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def drift_slices(flow, drift_fn, path, times=(0.0, 0.25, 0.5, 0.75, 1.0),
                 x_range=(-4.0, 4.0), n_x=161, label="learned", component=0):
    """Learned vs true drift at fixed times, with the marginal density shaded.

    For d > 1 the slice runs along the first coordinate with the others at 0;
    the plotted component is `component`.
    """
    xs = np.linspace(x_range[0], x_range[1], n_x)
    rows = []
    fig, axes = plt.subplots(1, len(times), figsize=(3.1 * len(times), 2.9), sharey=True)
    axes = np.atleast_1d(axes)
    for ax, t in zip(axes, times):
        X = np.zeros((n_x, flow.dim))
        X[:, 0] = xs
        pts = np.column_stack([np.full(n_x, t), X])
        u_hat = np.asarray(drift_fn(pts))[:, component]
        u_true = flow.true_drift(t, X)[:, component]
        dens = flow.density(t, X)
        span = max(np.ptp(u_hat), np.ptp(u_true), 1.0)
        base = min(u_hat.min(), u_true.min())
        ax.fill_between(xs, base, base + dens / dens.max() * 0.35 * span,
                        color="tab:blue", alpha=0.2, linewidth=0)
        ax.plot(xs, u_hat, color=DRIFT_COLOR, label=label)
        ax.plot(xs, u_true, **TRUE_STYLE, label="true")
        ax.set_title(f"t = {t:g}")
        ax.set_xlabel("x")
        for x, uh, ut, de in zip(xs, u_hat, u_true, dens):
            rows.append((t, x, uh, ut, de))
    axes[0].set_ylabel(f"u[{component}]")
    axes[0].legend(fontsize=8)
    out = _save(fig, path)
    with open(Path(path).with_suffix(".csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "u_learned", "u_true", "density"])
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return out


def marginal_histograms(flow, snapshots, path, bins=60, x_range=None):
    """Simulated marginal histograms against the closed-form density."""
    times = sorted(snapshots)
    fig, axes = plt.subplots(1, len(times), figsize=(3.1 * len(times), 2.9), sharey=True)
    axes = np.atleast_1d(axes)
    rows = []
    for ax, t in zip(axes, times):
        x = snapshots[t][:, 0]
        rng = x_range or (x.min() - 0.5, x.max() + 0.5)
        counts, edges = np.histogram(x, bins=bins, range=rng, density=True)
        mids = 0.5 * (edges[:-1] + edges[1:])
        X = np.zeros((len(mids), flow.dim))
        X[:, 0] = mids
        dens = flow.density(t, X)
        ax.bar(mids, counts, width=edges[1] - edges[0], color="tab:blue", alpha=0.5)
        ax.plot(mids, dens, color="black", linewidth=1.2)
        ax.set_title(f"t = {t:g}")
        ax.set_xlabel("x")
        for lo, hi, c, d in zip(edges[:-1], edges[1:], counts, dens):
            rows.append((t, lo, hi, c, d))
    out = _save(fig, path)
    with open(Path(path).with_suffix(".csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "bin_left", "bin_right", "density", "true_density_mid"])
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return out


def metric_curves(reports, path, metrics=("w2", "sw2", "mmd")):
    """Per-time metric curves, one line per method."""
    fig, axes = plt.subplots(1, len(metrics), figsize=(3.6 * len(metrics), 3.0))
    axes = np.atleast_1d(axes)
    for ax, name in zip(axes, metrics):
        for rep in reports:
            ts = [row["t"] for row in rep.per_time if row.get(name) is not None]
            vals = [row[name] for row in rep.per_time if row.get(name) is not None]
            if ts:
                ax.plot(ts, vals, marker="o", markersize=3, label=rep.method)
        ax.set_xlabel("t")
        ax.set_title(name.upper())
        ax.set_yscale("log")
    axes[0].legend(fontsize=8)
    return _save(fig, path)


def scatter_2d(flow, snapshots, path, seed=0, n_show=1500):
    """Simulated particle clouds (top) vs reference draws (bottom), d = 2."""
    times = sorted(snapshots)
    rng = np.random.default_rng(seed)
    fig, axes = plt.subplots(2, len(times), figsize=(2.8 * len(times), 5.6),
                             sharex=True, sharey=True)
    for j, t in enumerate(times):
        sim = snapshots[t]
        ref = flow.sample(t, len(sim), rng)
        for i, cloud in enumerate((sim, ref)):
            show = cloud[rng.choice(len(cloud), min(n_show, len(cloud)), replace=False)]
            axes[i, j].scatter(show[:, 0], show[:, 1], s=2, alpha=0.4,
                               color="tab:orange" if i == 0 else "tab:blue")
        axes[0, j].set_title(f"t = {t:g}")
    axes[0, 0].set_ylabel("simulated")
    axes[1, 0].set_ylabel("reference")
    return _save(fig, path)


def sweep_panels(rows, path, logy=True):
    """One panel per swept parameter: mean MSE with std error bars."""
    params = sorted({r["param"] for r in rows if r.get("mse_mean") is not None})
    fig, axes = plt.subplots(1, len(params), figsize=(3.6 * len(params), 3.0))
    axes = np.atleast_1d(axes)
    for ax, param in zip(axes, params):
        sel = [r for r in rows if r["param"] == param and r.get("mse_mean") is not None]
        xs = [r["value"] for r in sel]
        ys = [r["mse_mean"] for r in sel]
        es = [r.get("mse_std", 0.0) for r in sel]
        ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3)
        ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(param)
        ax.set_ylabel("grid MSE")
    return _save(fig, path)


def dimscan_panels(rows, path):
    """Total MSE, per-component MSE and wall-clock versus dimension."""
    ds = [r["value"] for r in rows]
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.0))
    axes[0].errorbar(ds, [r["mse_mean"] for r in rows],
                     yerr=[r["mse_std"] for r in rows], marker="o", capsize=3)
    axes[0].set_ylabel("total MSE")
    axes[1].plot(ds, [r["per_component_mse"] for r in rows], marker="o")
    axes[1].set_ylabel("per-component MSE")
    ax2 = axes[2]
    ax2.plot(ds, [r["time_s"] for r in rows], marker="o", color="tab:red")
    ax2.set_ylabel("fit time (s)", color="tab:red")
    twin = ax2.twinx()
    twin.plot(ds, [r["n_params"] for r in rows], marker="s", color="tab:green")
    twin.set_ylabel("parameters", color="tab:green")
    for ax in axes:
        ax.set_xlabel("d")
    return _save(fig, path)

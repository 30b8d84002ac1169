"""Result serialization: CSV tables, JSON reports, and the run manifest.

Floats are written with 17 significant digits so every value round-trips
exactly through the delimited files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import sys
from pathlib import Path

import numpy as np

CONVENTIONS = {
    "grid_time_mode": "slice times at midpoints of M equal subintervals",
    "sinkhorn_epsilon": "0.05 * mean(cost matrix) unless set explicitly",
    "wot_drift_time_interp": "finite-difference values anchored at interval midpoints, linear in t",
    "mmd_estimator": "biased V-statistic, sqrt, clamped at zero",
    "sw2_projections_default": 200,
    "w2_unequal_sizes": "sorted-quantile interpolation to the smaller size",
    "grid_resolution_default": "41 time x 81 space points per dimension",
    "seed_split": "SeedSequence((master_seed, stage_code, member))",
}


def fmt(value) -> str:
    """Decimal serialization: 17 significant digits, exact round-trip."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _clean(obj):
    """Make a report structure JSON-serializable (drops ndarray payloads)."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def config_hash(config: dict) -> str:
    blob = json.dumps(_clean(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def write_manifest(config: dict, out_dir, seeds=None, extra=None) -> Path:
    from . import __version__

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": _clean(config),
        "config_hash": config_hash(config),
        "seeds": list(seeds) if seeds is not None else [config.get("seed", 0)],
        "conventions": CONVENTIONS,
        "environment": {
            "package_version": __version__,
            "python": sys.version.split()[0],
            "platform": platform.platform(),
            "numpy": np.__version__,
        },
    }
    if extra:
        manifest.update(_clean(extra))
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def write_metrics_csv(reports, out_dir) -> Path:
    """Schema: experiment, method, seed, t, W2, SW2, MMD (one row per time)."""
    path = Path(out_dir) / "metrics.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["experiment", "method", "seed", "t", "W2", "SW2", "MMD"])
        for rep in reports:
            for row in rep.per_time:
                writer.writerow(
                    [rep.experiment, rep.method, rep.seed,
                     fmt(row["t"]), fmt(row["w2"]), fmt(row["sw2"]), fmt(row["mmd"])]
                )
    return path


def write_drift_csv(reports, out_dir) -> Path:
    """Schema: experiment, method, seed, drift_mse_total, drift_mse_per_component."""
    path = Path(out_dir) / "drift.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["experiment", "method", "seed", "drift_mse_total", "drift_mse_per_component"]
        )
        for rep in reports:
            writer.writerow(
                [rep.experiment, rep.method, rep.seed,
                 fmt(rep.drift_mse_total), fmt(rep.drift_mse_per_component)]
            )
    return path


def write_sweep_csv(rows, out_dir, name="sweep.csv") -> Path:
    """Schema: param, value, mse_mean, mse_std, time_s."""
    path = Path(out_dir) / name
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param", "value", "mse_mean", "mse_std", "time_s"])
        for row in rows:
            if "error" in row and row.get("error"):
                continue
            writer.writerow(
                [row["param"], fmt(row["value"]), fmt(row.get("mse_mean")),
                 fmt(row.get("mse_std")), fmt(row.get("time_s"))]
            )
    return path


def write_reports_json(reports, out_dir) -> Path:
    path = Path(out_dir) / "report.json"
    payload = [_clean(rep.to_dict()) for rep in reports]
    path.write_text(json.dumps(payload, indent=2))
    return path


def read_metrics_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                {
                    "experiment": row["experiment"],
                    "method": row["method"],
                    "seed": int(row["seed"]),
                    "t": float(row["t"]),
                    "W2": float(row["W2"]) if row["W2"] else None,
                    "SW2": float(row["SW2"]) if row["SW2"] else None,
                    "MMD": float(row["MMD"]) if row["MMD"] else None,
                }
            )
    return rows


def emit_tables(reports, out_dir, config=None, sweep_rows=None, extra_manifest=None):
    """Write the full delimited output set for a run directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "metrics": write_metrics_csv(reports, out_dir),
        "drift": write_drift_csv(reports, out_dir),
        "report": write_reports_json(reports, out_dir),
    }
    if sweep_rows is not None:
        paths["sweep"] = write_sweep_csv(sweep_rows, out_dir)
    if config is not None:
        seeds = sorted({rep.seed for rep in reports}) or None
        paths["manifest"] = write_manifest(config, out_dir, seeds=seeds, extra=extra_manifest)
    return paths

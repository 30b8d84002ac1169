"""Command-line entry point.

    alltimeot <exp1|exp2|exp3|exp4|exp5|stochastic|sensitivity|dimscan|baselines>
              [--config PATH] [--seed U64] [--out DIR] [--override KEY=VALUE ...]
              [--workers N] [--no-figures]

Each run writes metrics.csv / drift.csv / report.json / manifest.json (plus
sweep.csv for the sweeps) and rendered PNG figures with tidy CSV companions
into the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import experiments as xp
from . import figures, reporting
from .simulate import export_snapshots


def parse_override(text: str):
    if "=" not in text:
        raise SystemExit(f"override must look like KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def build_config(args) -> dict:
    config = xp.default_config(args.experiment)
    if args.config:
        loaded = json.loads(Path(args.config).read_text())
        # allow both a bare config and a manifest with a "config" block
        config.update(loaded.get("config", loaded))
    overrides = dict(parse_override(o) for o in args.override)
    if overrides:
        config = xp.apply_overrides(config, overrides)
    if args.seed is not None:
        config["seed"] = args.seed
    config["experiment"] = args.experiment
    return config


def _emit_run_figures(reports, config, out_dir):
    flow = xp.flow_from(config)
    fitted = [r for r in reports if not r.incomplete and hasattr(r, "drift_fn")]
    for rep in fitted:
        x_range = tuple(config["evaluation"]["grid_x"][0])
        for component in range(flow.dim):
            figures.drift_slices(
                flow,
                rep.drift_fn,
                out_dir / f"fig_drift_{rep.method}_u{component + 1}.png",
                times=tuple(config["evaluation"]["times"]),
                x_range=x_range,
                label=rep.method,
                component=component,
            )
        if hasattr(rep, "snapshots"):
            if flow.dim == 1:
                figures.marginal_histograms(
                    flow, rep.snapshots, out_dir / f"fig_marginals_{rep.method}.png"
                )
            elif flow.dim == 2:
                figures.scatter_2d(
                    flow, rep.snapshots, out_dir / f"fig_marginals_{rep.method}.png"
                )
            export_snapshots(rep.snapshots, out_dir / f"snapshots_{rep.method}.csv")
    scored = [r for r in reports if r.per_time]
    if scored:
        figures.metric_curves(scored, out_dir / "fig_metrics.png")


def _print_reports(reports):
    for rep in reports:
        if rep.incomplete:
            print(f"  {rep.method:<14} FAILED at stage {rep.error['stage']}: {rep.error['message']}")
            continue
        agg = ", ".join(f"{k}={v:.4f}" for k, v in sorted(rep.aggregates.items()))
        mse = "-" if rep.drift_mse_total is None else f"{rep.drift_mse_total:.4f}"
        print(f"  {rep.method:<14} drift_mse={mse}  {agg}")


def _sweep_cell_job(args):
    config, seed = args
    total, per_comp, secs, info = xp._single_mse_run(config, seed)
    return total, per_comp, secs, info["iterations"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="alltimeot", description=__doc__.split("\n")[0])
    parser.add_argument("experiment", choices=xp.EXPERIMENTS)
    parser.add_argument("--config", type=Path, help="JSON config or manifest to start from")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument(
        "--override", action="append", default=[], metavar="KEY=VALUE",
        help="dotted-path config override, e.g. sampling.M=30 (repeatable)",
    )
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel (seed, cell) jobs for the sweep commands")
    parser.add_argument("--no-figures", action="store_true")
    args = parser.parse_args(argv)

    config = build_config(args)
    out_dir = args.out or Path("results") / args.experiment
    out_dir.mkdir(parents=True, exist_ok=True)
    failed = False

    if args.experiment in xp.SUITE_RUNNERS:
        reports = xp.SUITE_RUNNERS[args.experiment](config)
        print(f"{args.experiment} (seed {config.get('seed', 0)}):")
        _print_reports(reports)
        reporting.emit_tables(reports, out_dir, config=config)
        if not args.no_figures:
            _emit_run_figures(reports, config, out_dir)
        failed = any(r.incomplete for r in reports)
    elif args.experiment == "sensitivity":
        rows = _run_sensitivity(config, args.workers)
        _print_sweep(rows)
        reporting.write_sweep_csv(rows, out_dir)
        reporting.write_manifest(config, out_dir)
        if not args.no_figures:
            figures.sweep_panels(rows, out_dir / "fig_sweep.png")
        failed = any(r.get("error") for r in rows)
    elif args.experiment == "dimscan":
        rows = _run_dimscan(config, args.workers)
        _print_sweep(rows)
        reporting.write_sweep_csv(rows, out_dir)
        reporting.write_manifest(config, out_dir)
        if not args.no_figures:
            figures.dimscan_panels(rows, out_dir / "fig_dimscan.png")
    else:  # baselines
        out = xp.run_baselines(config)
        print("baselines (roundtrip flow):")
        _print_reports(out["reports"])
        reporting.emit_tables(
            out["reports"], out_dir, config=config,
            extra_manifest={"wot": out["wot"], "mmot": out["mmot"]},
        )
        if not args.no_figures:
            _emit_run_figures(out["reports"], config, out_dir)
        failed = any(r.incomplete for r in out["reports"])

    print(f"wrote {out_dir}")
    return 1 if failed else 0


def _run_sensitivity(config, workers):
    if workers <= 1:
        return xp.run_sensitivity(config)
    # parallel mode: independent (cell, seed) jobs, merged by cell key
    sweep = config["sweep"]
    k_seed = int(sweep.get("K_seed", 4))
    base_seed = int(config.get("seed", 0))
    jobs, keys = [], []
    cell_index = 0
    for param, values in (("M", sweep["M"]), ("N", sweep["N"]), ("lambda", sweep["lambda"])):
        for value in values:
            key = f"sampling.{param}" if param in ("M", "N") else "loss.lambda"
            cell = xp.apply_overrides(config, {key: value})
            cell_index += 1
            for r in range(k_seed):
                jobs.append((cell, base_seed + 1000 * r + cell_index))
                keys.append((param, value))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_sweep_cell_job, jobs))
    rows = []
    for param, value in sorted(set(keys), key=lambda kv: (kv[0], kv[1])):
        cell_results = [res for key, res in zip(keys, results) if key == (param, value)]
        mses = [r[0] for r in cell_results]
        rows.append(
            {
                "param": param,
                "value": float(value),
                "mse_mean": float(np.mean(mses)),
                "mse_std": float(np.std(mses, ddof=1)) if len(mses) > 1 else 0.0,
                "time_s": float(np.mean([r[2] for r in cell_results])),
                "n_ok": len(mses),
            }
        )
    return rows


def _run_dimscan(config, workers):
    # dimension cells are few; parallelism buys little, keep it sequential
    return xp.run_dimscan(config)


def _print_sweep(rows):
    for row in rows:
        if row.get("error"):
            print(f"  {row['param']}={row['value']} seed#{row['seed_index']}: {row['error']}")
        elif row.get("mse_mean") is not None:
            extra = (
                f" per_comp={row['per_component_mse']:.4f}"
                if "per_component_mse" in row
                else ""
            )
            print(
                f"  {row['param']:>6} = {row['value']:<8g} "
                f"MSE = {row['mse_mean']:.4f} +- {row.get('mse_std', 0):.4f} "
                f"({row.get('time_s', 0):.2f} s){extra}"
            )


if __name__ == "__main__":
    sys.exit(main())

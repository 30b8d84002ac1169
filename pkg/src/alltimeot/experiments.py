"""Experiment orchestration: configs, seed streams, suite runners.

Each experiment id owns a default config (a plain nested dict so that configs
round-trip losslessly through JSON); `run_experiment` executes one
(flow, model) fit end to end -- draw batches, optimize, simulate, evaluate --
and suite runners assemble the per-method tables the CLI emits.

Seed discipline: every stage draws from an independent generator derived as
SeedSequence((master_seed, stage_code, member)).  No global RNG state is
touched anywhere.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass, field

import numpy as np

from . import baselines
from .errors import ConfigError
from .estimator import LossConfig, draw_batch, ensemble_loss, loss_and_gradient
from .flows import make_flow
from .kernels import RadialKernel
from .metrics import drift_grid_mse, mmd, sliced_w2, w2_1d
from .models import make_model
from .optimizers import FirstOrderConfig, QuasiNewtonConfig, minimize_adaptive, minimize_qn
from .simulate import SimulationConfig, simulate_ode, simulate_sde

EXPERIMENTS = (
    "exp1", "exp2", "exp3", "exp4", "exp5",
    "stochastic", "sensitivity", "dimscan", "baselines",
)

# stage codes for the seed-stream split
_STAGE_BATCH = 1
_STAGE_INIT = 2
_STAGE_SIM = 3
_STAGE_REF = 4
_STAGE_ROTATE = 5
_STAGE_EVAL = 6


def stream(master_seed, stage, member=0):
    """Independent generator for (master seed, stage, member)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=(master_seed, stage, member)))


def default_config(experiment: str) -> dict:
    """Paper-default configuration for one experiment id."""
    base_eval = {
        "times": [0.0, 0.25, 0.5, 0.75, 1.0],
        "grid_t": [0.0, 1.0],
        "grid_x": [[-4.0, 4.0]],
        "nt": 41,
        "nx": 81,
        "mc_points": None,
        "mc_slices": 15,
        "sim_particles": 5000,
        "sim_steps": 1000,
        "n_projections": 200,
    }
    qn = {"kind": "qn", "restarts": 4, "maxiter": 400, "gtol": 1e-8, "memory": 10}
    cfgs = {
        "exp1": {
            "flow": {"kind": "gauss_translate_1d", "T": 1.0},
            "model": {"family": "dictionary", "features": "affine_1d"},
            "loss": {"lambda": 1000.0, "sigma": 0.0, "bandwidth": 1.0},
            "sampling": {"M": 50, "N": 25, "N0": 50, "time_mode": "grid", "K_ens": 30},
            "optimizer": dict(qn),
            "evaluation": dict(base_eval),
        },
        "exp2": {
            "flow": {"kind": "roundtrip_1d", "T": 1.0},
            "model": {"family": "dictionary", "features": "quad_t_1d"},
            "loss": {"lambda": 1000.0, "sigma": 0.0, "bandwidth": 1.0},
            "sampling": {"M": 50, "N": 25, "N0": 50, "time_mode": "grid", "K_ens": 30},
            "optimizer": dict(qn),
            "evaluation": dict(base_eval),
        },
        "exp3": {
            "flow": {"kind": "bimodal_merge_1d", "T": 1.0},
            "model": {"family": "dictionary", "features": "tanh_1d"},
            "loss": {"lambda": 5000.0, "sigma": 0.0, "bandwidth": 1.0},
            "sampling": {"M": 50, "N": 30, "N0": 60, "time_mode": "grid", "K_ens": 20},
            "optimizer": dict(qn),
            "mlp_optimizer": {
                "kind": "adam", "iterations": 4000,
                "lr_init": 3e-3, "lr_final": 1e-5, "k_batch": 3,
            },
            "mlp_hidden": 48,
            "evaluation": dict(base_eval),
        },
        "exp4": {
            "flow": {"kind": "gauss_translate_2d", "T": 1.0},
            "model": {"family": "dictionary", "features": "affine_d", "d": 2},
            "loss": {"lambda": 1000.0, "sigma": 0.0, "bandwidth": 1.0},
            "sampling": {"M": 25, "N": 20, "N0": 50, "time_mode": "grid", "K_ens": 15},
            "optimizer": dict(qn),
            "evaluation": {**base_eval, "grid_x": [[-4.0, 4.0], [-4.0, 4.0]], "nx": 41},
        },
        "exp5": {
            "flow": {"kind": "bifurcation_2d", "T": 1.0},
            "model": {"family": "dictionary", "features": "tanh_2d"},
            "loss": {"lambda": 3000.0, "sigma": 0.0, "bandwidth": 1.0},
            "sampling": {"M": 25, "N": 25, "N0": 60, "time_mode": "grid", "K_ens": 10},
            "optimizer": dict(qn),
            "evaluation": {
                **base_eval,
                "grid_x": [[-4.0, 4.0], [-3.0, 3.0]],
                "nx": 41,
                "sim_particles": 4000,
            },
        },
        "stochastic": {
            "flow": {"kind": "stochastic_gauss_1d", "T": 1.0},
            "model": {"family": "dictionary", "features": "affine_1d"},
            "loss": {"lambda": 1000.0, "sigma": 1.0, "bandwidth": 1.0},
            "sampling": {"M": 30, "N": 30, "N0": 60, "time_mode": "grid", "K_ens": 30},
            "optimizer": {
                "kind": "adam", "iterations": 15_000,
                "lr_init": 5e-4, "lr_final": 5e-5, "k_batch": 2,
            },
            "evaluation": {
                **base_eval,
                "grid_x": [[-3.0, 3.0]],
                "sim_particles": 20_000,
                "sim_steps": 2000,
            },
        },
        "sensitivity": {
            "flow": {"kind": "gauss_translate_1d", "T": 1.0},
            "model": {"family": "dictionary", "features": "affine_1d"},
            "loss": {"lambda": 1000.0, "sigma": 0.0, "bandwidth": 1.0},
            "sampling": {"M": 30, "N": 20, "N0": 50, "time_mode": "grid", "K_ens": 5},
            "optimizer": {**qn, "restarts": 2},
            "evaluation": {**base_eval, "grid_x": [[-3.0, 3.0]]},
            "sweep": {
                "M": [10, 15, 20, 30, 50],
                "N": [5, 10, 15, 25, 40],
                "lambda": [1e1, 1e2, 1e3, 1e4, 1e5],
                "K_seed": 4,
            },
        },
        "dimscan": {
            "flow": {"kind": "gauss_translate_nd", "T": 1.0},
            "model": {"family": "dictionary", "features": "affine_d"},
            "loss": {"lambda": 1000.0, "sigma": 0.0, "bandwidth": 1.0},
            "sampling": {"M": 25, "N": 20, "N0": 50, "time_mode": "grid", "K_ens": 5},
            "optimizer": {**qn, "restarts": 2},
            "evaluation": {
                **base_eval,
                "grid_x": [[-3.0, 3.0]],
                "mc_points": 2000,
                "mc_slices": 15,
            },
            "sweep": {"d": [1, 2, 3, 5, 8, 10], "K_seed": 3},
        },
        "baselines": {
            "flow": {"kind": "roundtrip_1d", "T": 1.0},
            "model": {"family": "dictionary", "features": "quad_t_1d"},
            "loss": {"lambda": 1000.0, "sigma": 0.0, "bandwidth": 1.0},
            "sampling": {"M": 50, "N": 25, "N0": 50, "time_mode": "grid", "K_ens": 30},
            "optimizer": dict(qn),
            "evaluation": dict(base_eval),
            "wot": {"snapshot_counts": [5, 10, 20, 50], "samples": 200, "epsilon": None},
            "mmot": {
                "map_counts": [5, 10, 20, 50],
                "samples": 200,
                "lambdas": [1e3, 1e4, 1e5],
                "alphas": [0.5, 1.0, 2.0],
                "n_init": 3,
            },
            "flow_matching": {"samples": 2000, "n_draws": 50_000},
        },
    }
    if experiment not in cfgs:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    out = {"experiment": experiment, "seed": 0}
    out.update(copy.deepcopy(cfgs[experiment]))
    return out


def apply_overrides(config: dict, overrides: dict) -> dict:
    """Apply dotted-path overrides ({"sampling.M": 10}) to a config copy."""
    out = copy.deepcopy(config)
    for path, value in overrides.items():
        node = out
        keys = path.split(".")
        for key in keys[:-1]:
            if key not in node or not isinstance(node[key], dict):
                node[key] = {}
            node = node[key]
        node[keys[-1]] = value
    return out


def loss_config_from(config: dict) -> LossConfig:
    loss = config["loss"]
    return LossConfig(
        lam=float(loss["lambda"]),
        kernel=RadialKernel(float(loss["bandwidth"])),
        sigma=float(loss.get("sigma", 0.0)),
        T=float(config["flow"].get("T", 1.0)),
        same_slice_mask=bool(loss.get("same_slice_mask", False)),
    )


def flow_from(config: dict):
    f = config["flow"]
    return make_flow(f["kind"], T=float(f.get("T", 1.0)), d=f.get("d"))


@dataclass
class ExperimentReport:
    """Everything one run produces, serializable to JSON."""

    experiment: str
    method: str
    seed: int
    config: dict
    learned_params: list | None = None
    final_loss: float | None = None
    optimizer_iterations: int | None = None
    restart_losses: list = field(default_factory=list)
    drift_mse_total: float | None = None
    drift_mse_per_component: float | None = None
    per_time: list = field(default_factory=list)  # rows {t, w2, sw2, mmd}
    aggregates: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    incomplete: bool = False
    error: dict | None = None

    def to_dict(self):
        return {
            "experiment": self.experiment,
            "method": self.method,
            "seed": self.seed,
            "config": self.config,
            "learned_params": self.learned_params,
            "final_loss": self.final_loss,
            "optimizer_iterations": self.optimizer_iterations,
            "restart_losses": self.restart_losses,
            "drift_mse_total": self.drift_mse_total,
            "drift_mse_per_component": self.drift_mse_per_component,
            "per_time": self.per_time,
            "aggregates": self.aggregates,
            "timings": self.timings,
            "incomplete": self.incomplete,
            "error": self.error,
        }


def draw_batch_pool(flow, config, seed):
    sampling = config["sampling"]
    return [
        draw_batch(
            flow,
            int(sampling["M"]),
            int(sampling["N"]),
            int(sampling["N0"]),
            sampling.get("time_mode", "grid"),
            stream(seed, _STAGE_BATCH, k),
        )
        for k in range(int(sampling.get("K_ens", 1)))
    ]


def fit_model(config, flow, batches, seed, model_spec=None, optimizer=None):
    """Optimize one drift model on a batch pool; returns (model, fit info)."""
    spec = dict(model_spec or config["model"])
    if spec["family"] == "dictionary" and spec.get("d") is None:
        spec["d"] = flow.dim
    if spec["family"] == "mlp":
        spec.setdefault("d", flow.dim)
    loss_cfg = loss_config_from(config)
    opt = dict(optimizer or config["optimizer"])
    model = make_model(spec)
    t0 = time.perf_counter()
    if opt["kind"] == "qn":
        starts = np.stack(
            [
                make_model(spec, stream(seed, _STAGE_INIT, r)).get_params()
                for r in range(int(opt.get("restarts", 1)))
            ]
        )

        def loss_and_grad(w):
            model.set_params(w)
            return ensemble_loss(model, batches, loss_cfg)

        qn_cfg = QuasiNewtonConfig(
            memory=int(opt.get("memory", 10)),
            gtol=float(opt.get("gtol", 1e-8)),
            maxiter=int(opt.get("maxiter", 400)),
            restarts=int(opt.get("restarts", 1)),
        )
        res = minimize_qn(loss_and_grad, starts, qn_cfg)
        model.set_params(res.w)
        info = {
            "final_loss": res.loss,
            "iterations": res.iterations,
            "restart_losses": res.restart_losses,
        }
    elif opt["kind"] == "adam":
        model = make_model(spec, stream(seed, _STAGE_INIT, 0))

        def loss_and_grad(w, batch):
            model.set_params(w)
            return loss_and_gradient(model, batch, loss_cfg)

        fo_cfg = FirstOrderConfig(
            iterations=int(opt["iterations"]),
            lr_init=float(opt["lr_init"]),
            lr_final=float(opt["lr_final"]),
            k_batch=int(opt.get("k_batch", 1)),
        )
        w, trace = minimize_adaptive(
            loss_and_grad, model.get_params(), fo_cfg, batches, stream(seed, _STAGE_ROTATE)
        )
        model.set_params(w)
        info = {
            "final_loss": float(trace[-1]),
            "iterations": int(fo_cfg.iterations),
            "restart_losses": [],
            "loss_trace": trace,
        }
    else:
        raise ConfigError(f"unknown optimizer kind {opt['kind']!r}")
    info["fit_seconds"] = time.perf_counter() - t0
    return model, info


def evaluate_drift_mse(drift_fn, flow, config, seed):
    ev = config["evaluation"]
    return drift_grid_mse(
        drift_fn,
        flow.drift_fn(),
        t_range=tuple(ev["grid_t"]),
        x_ranges=tuple(tuple(r) for r in ev["grid_x"]),
        nt=int(ev["nt"]),
        nx=int(ev["nx"]),
        mc_points=ev.get("mc_points"),
        mc_slices=int(ev.get("mc_slices", 15)),
        rng=stream(seed, _STAGE_EVAL),
    )


def simulate_and_score(drift_fn, flow, config, seed, kernel):
    """Simulate from mu_0 under the drift and score marginals per eval time."""
    ev = config["evaluation"]
    times = tuple(float(t) for t in ev["times"])
    n = int(ev["sim_particles"])
    x0 = flow.sample(0.0, n, stream(seed, _STAGE_SIM, 0))
    sim_cfg = SimulationConfig(
        n_particles=n,
        n_steps=int(ev["sim_steps"]),
        T=flow.T,
        sigma=flow.sigma,
        snapshot_times=times,
    )
    if flow.sigma > 0:
        snaps = simulate_sde(drift_fn, x0, sim_cfg, stream(seed, _STAGE_SIM, 1))
    else:
        snaps = simulate_ode(drift_fn, x0, sim_cfg)
    rows = []
    for idx, t in enumerate(times):
        ref = flow.sample(t, n, stream(seed, _STAGE_REF, idx))
        sim = snaps[t]
        row = {
            "t": t,
            "w2": w2_1d(sim[:, 0], ref[:, 0]) if flow.dim == 1 else None,
            "sw2": sliced_w2(
                sim, ref, int(ev.get("n_projections", 200)), stream(seed, _STAGE_EVAL, idx + 1)
            ),
            "mmd": mmd(sim, ref, kernel),
        }
        rows.append(row)
    aggregates = {}
    for name in ("w2", "sw2", "mmd"):
        vals = [r[name] for r in rows if r[name] is not None]
        if vals:
            aggregates[f"mean_{name}"] = float(np.mean(vals))
            aggregates[f"max_{name}"] = float(np.max(vals))
    return snaps, rows, aggregates


def run_experiment(config: dict, method="alltime", model_spec=None, optimizer=None,
                   drift_override=None) -> ExperimentReport:
    """Execute one run: batches -> optimize -> simulate -> metrics.

    `drift_override` in {"zero", "true"} skips the fit and scores the trivial
    or oracle drift instead.  Stage failures are recorded on the report (with
    the stage name) and mark it incomplete.
    """
    seed = int(config.get("seed", 0))
    report = ExperimentReport(
        experiment=config["experiment"], method=method, seed=seed, config=config
    )
    kernel = RadialKernel(float(config["loss"]["bandwidth"]))
    stage = "setup"
    t_start = time.perf_counter()
    try:
        stage = "flow"
        flow = flow_from(config)
        if drift_override is None:
            stage = "batches"
            t0 = time.perf_counter()
            batches = draw_batch_pool(flow, config, seed)
            report.timings["batches"] = time.perf_counter() - t0
            stage = "optimize"
            model, info = fit_model(config, flow, batches, seed, model_spec, optimizer)
            report.learned_params = [float(v) for v in model.get_params()]
            report.final_loss = float(info["final_loss"])
            report.optimizer_iterations = int(info["iterations"])
            report.restart_losses = [float(v) for v in info["restart_losses"]]
            report.timings["optimize"] = info["fit_seconds"]
            drift_fn = model.evaluate
        elif drift_override == "zero":
            drift_fn = lambda pts: np.zeros((len(pts), flow.dim))
        elif drift_override == "true":
            drift_fn = flow.drift_fn()
        else:
            raise ConfigError(f"unknown drift override {drift_override!r}")
        stage = "drift_mse"
        t0 = time.perf_counter()
        total, per_comp = evaluate_drift_mse(drift_fn, flow, config, seed)
        report.drift_mse_total = total
        report.drift_mse_per_component = per_comp
        report.timings["drift_mse"] = time.perf_counter() - t0
        stage = "simulate"
        t0 = time.perf_counter()
        snaps, rows, aggregates = simulate_and_score(drift_fn, flow, config, seed, kernel)
        report.per_time = rows
        report.aggregates = aggregates
        report.timings["simulate"] = time.perf_counter() - t0
        # not serialized; used by the figure emission path
        report.snapshots = snaps
        report.drift_fn = drift_fn
    except Exception as exc:
        report.incomplete = True
        report.error = {"stage": stage, "message": str(exc)}
    report.timings["total"] = time.perf_counter() - t_start
    return report


def run_exp1(config) -> list[ExperimentReport]:
    return [run_experiment(config, "alltime")]


def run_exp2(config) -> list[ExperimentReport]:
    return [
        run_experiment(config, "alltime"),
        run_experiment(config, "true", drift_override="true"),
        run_experiment(config, "zero", drift_override="zero"),
    ]


def run_exp3(config) -> list[ExperimentReport]:
    reports = [
        run_experiment(config, "zero", drift_override="zero"),
        run_experiment(
            config, "bilinear", model_spec={"family": "dictionary", "features": "bilinear_1d"}
        ),
        run_experiment(config, "tanh"),
        run_experiment(
            config,
            "mlp",
            model_spec={"family": "mlp", "d": 1, "hidden": int(config.get("mlp_hidden", 48))},
            optimizer=config["mlp_optimizer"],
        ),
    ]
    return reports


def run_exp4(config) -> list[ExperimentReport]:
    return [run_experiment(config, "alltime")]


def run_exp5(config) -> list[ExperimentReport]:
    return [
        run_experiment(config, "zero", drift_override="zero"),
        run_experiment(
            config, "affine", model_spec={"family": "dictionary", "features": "affine_d", "d": 2}
        ),
        run_experiment(
            config, "bilinear", model_spec={"family": "dictionary", "features": "bilinear_2d"}
        ),
        run_experiment(config, "tanh"),
    ]


def run_stochastic(config) -> list[ExperimentReport]:
    return [
        run_experiment(config, "true", drift_override="true"),
        run_experiment(config, "alltime"),
        run_experiment(config, "zero", drift_override="zero"),
    ]


def _single_mse_run(config, seed):
    cfg = copy.deepcopy(config)
    cfg["seed"] = int(seed)
    flow = flow_from(cfg)
    batches = draw_batch_pool(flow, cfg, seed)
    t0 = time.perf_counter()
    model, info = fit_model(cfg, flow, batches, seed)
    elapsed = time.perf_counter() - t0
    total, per_comp = evaluate_drift_mse(model.evaluate, flow, cfg, seed)
    return total, per_comp, elapsed, info


def run_sensitivity(config) -> list[dict]:
    """One-at-a-time sweeps in M, N, lambda around the config defaults."""
    sweep = config["sweep"]
    k_seed = int(sweep.get("K_seed", 4))
    base_seed = int(config.get("seed", 0))
    rows = []
    cell_index = 0
    for param, values in (("M", sweep["M"]), ("N", sweep["N"]), ("lambda", sweep["lambda"])):
        for value in values:
            key = f"sampling.{param}" if param in ("M", "N") else "loss.lambda"
            cell = apply_overrides(config, {key: value})
            cell_index += 1
            mses, elapsed = [], []
            for r in range(k_seed):
                try:
                    total, _, secs, _ = _single_mse_run(
                        cell, base_seed + 1000 * r + cell_index
                    )
                    mses.append(total)
                    elapsed.append(secs)
                except Exception as exc:
                    rows.append(
                        {"param": param, "value": value, "seed_index": r, "error": str(exc)}
                    )
            rows.append(
                {
                    "param": param,
                    "value": float(value),
                    "mse_mean": float(np.mean(mses)) if mses else None,
                    "mse_std": float(np.std(mses, ddof=1)) if len(mses) > 1 else 0.0,
                    "time_s": float(np.mean(elapsed)) if elapsed else None,
                    "n_ok": len(mses),
                }
            )
    return rows


def run_dimscan(config) -> list[dict]:
    """Accuracy and wall-clock versus spatial dimension on the rescaled translation."""
    sweep = config["sweep"]
    k_seed = int(sweep.get("K_seed", 3))
    base_seed = int(config.get("seed", 0))
    rows = []
    for d in sweep["d"]:
        cell = apply_overrides(
            config,
            {
                "flow.d": int(d),
                "model.d": int(d),
                "evaluation.grid_x": [[-3.0, 3.0]] * int(d),
            },
        )
        mses, per_comps, elapsed, iters = [], [], [], []
        for r in range(k_seed):
            try:
                total, per_comp, secs, info = _single_mse_run(cell, base_seed + 7919 * r)
            except Exception as exc:
                rows.append({"param": "d", "value": int(d), "seed_index": r, "error": str(exc)})
                continue
            mses.append(total)
            per_comps.append(per_comp)
            elapsed.append(secs)
            iters.append(info["iterations"])
        if not mses:
            continue
        rows.append(
            {
                "param": "d",
                "value": int(d),
                "n_params": int(d) * (int(d) + 2),
                "mse_mean": float(np.mean(mses)),
                "mse_std": float(np.std(mses, ddof=1)) if len(mses) > 1 else 0.0,
                "per_component_mse": float(np.mean(per_comps)),
                "time_s": float(np.mean(elapsed)),
                "iterations": float(np.mean(iters)),
                "n_ok": len(mses),
            }
        )
    return rows


def run_baselines(config) -> dict:
    """WOT sweep, MMOT grid, flow matching and reference rows on the roundtrip."""
    seed = int(config.get("seed", 0))
    flow = flow_from(config)
    kernel = RadialKernel(float(config["loss"]["bandwidth"]))
    out = {"wot": [], "mmot": [], "reports": []}

    # all-time / zero-drift / flow-matching reference rows
    out["reports"].append(run_experiment(config, "alltime"))
    out["reports"].append(run_experiment(config, "zero", drift_override="zero"))

    fm = config["flow_matching"]
    rng_fm = stream(seed, _STAGE_EVAL, 101)
    x0 = flow.sample(0.0, int(fm["samples"]), rng_fm)
    x1 = flow.sample(flow.T, int(fm["samples"]), rng_fm)
    fm_model = baselines.flow_matching_fit(
        x0, x1, make_model({"family": "dictionary", "features": "affine_1d"}),
        rng_fm, n_draws=int(fm["n_draws"]),
    )
    fm_report = _score_external_drift(fm_model.evaluate, "flow_matching", flow, config, seed)
    out["reports"].append(fm_report)

    wot_cfg = config["wot"]
    for idx, m_snap in enumerate(wot_cfg["snapshot_counts"]):
        rng = stream(seed, _STAGE_BATCH, 200 + idx)
        times = np.linspace(0.0, flow.T, int(m_snap))
        snaps = [(float(t), flow.sample(float(t), int(wot_cfg["samples"]), rng)) for t in times]
        drift = baselines.wot_drift(snaps, epsilon=wot_cfg.get("epsilon"))
        report = _score_external_drift(drift, f"wot_M{m_snap}", flow, config, seed)
        out["wot"].append(
            {"M": int(m_snap), "drift_mse": report.drift_mse_total,
             "mean_w2": report.aggregates.get("mean_w2"),
             "mean_mmd": report.aggregates.get("mean_mmd")}
        )
        out["reports"].append(report)

    mmot_cfg = config["mmot"]
    for idx, n_maps in enumerate(mmot_cfg["map_counts"]):
        rng = stream(seed, _STAGE_BATCH, 300 + idx)
        times = np.linspace(0.0, flow.T, int(n_maps) + 1)
        snaps = [(float(t), flow.sample(float(t), int(mmot_cfg["samples"]), rng)) for t in times]
        chain = baselines.mmot_affine_best(
            snaps,
            kernel,
            lambdas=tuple(mmot_cfg["lambdas"]),
            alphas=tuple(mmot_cfg["alphas"]),
            n_init=int(mmot_cfg["n_init"]),
            rng=rng,
        )
        drift = chain.drift()
        report = _score_external_drift(drift, f"mmot_N{n_maps}", flow, config, seed)
        out["mmot"].append(
            {"N": int(n_maps), "n_params": 2 * int(n_maps) * flow.dim,
             "drift_mse": report.drift_mse_total,
             "mean_w2": report.aggregates.get("mean_w2"),
             "mean_mmd": report.aggregates.get("mean_mmd")}
        )
        out["reports"].append(report)
    return out


def _score_external_drift(drift_fn, method, flow, config, seed) -> ExperimentReport:
    report = ExperimentReport(
        experiment=config["experiment"], method=method, seed=int(config.get("seed", 0)),
        config=config,
    )
    kernel = RadialKernel(float(config["loss"]["bandwidth"]))
    try:
        total, per_comp = evaluate_drift_mse(drift_fn, flow, config, seed)
        report.drift_mse_total = total
        report.drift_mse_per_component = per_comp
        snaps, rows, aggregates = simulate_and_score(drift_fn, flow, config, seed, kernel)
        report.per_time = rows
        report.aggregates = aggregates
        report.snapshots = snaps
        report.drift_fn = drift_fn
    except Exception as exc:
        report.incomplete = True
        report.error = {"stage": "score", "message": str(exc)}
    return report


SUITE_RUNNERS = {
    "exp1": run_exp1,
    "exp2": run_exp2,
    "exp3": run_exp3,
    "exp4": run_exp4,
    "exp5": run_exp5,
    "stochastic": run_stochastic,
}

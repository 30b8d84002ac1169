"""Optimizers: L-BFGS-B on fixed ensembles and Adam with a cosine step schedule.

The quasi-Newton path wraps scipy's L-BFGS-B behind the repo's config/result
types; bounds are accepted in the config but no experiment activates them.
The adaptive path is a plain Adam loop that rotates through a pre-cached pool
of batches, so a fixed seed gives a bit-identical parameter trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sciopt

from .errors import ConfigError, NonFiniteLossError


@dataclass(frozen=True)
class QuasiNewtonConfig:
    memory: int = 10
    gtol: float = 1e-8
    maxiter: int = 400
    restarts: int = 1
    bounds: tuple | None = None  # accepted, inert in v1

    def __post_init__(self):
        if not (self.gtol > 0):
            raise ConfigError("gradient tolerance must be positive")


@dataclass(frozen=True)
class FirstOrderConfig:
    iterations: int
    lr_init: float
    lr_final: float
    k_batch: int = 1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not (0 < self.lr_final <= self.lr_init):
            raise ConfigError("step sizes must satisfy 0 < final <= initial")
        if self.iterations < 1 or self.k_batch < 1:
            raise ConfigError("iterations and k_batch must be >= 1")


@dataclass
class QNResult:
    w: np.ndarray
    loss: float
    iterations: int
    converged: bool
    restart_losses: list = field(default_factory=list)


def _checked(loss_and_grad):
    def wrapped(w):
        value, grad = loss_and_grad(w)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise NonFiniteLossError(
                f"non-finite loss/gradient at |w|={np.linalg.norm(w):.3g}: value={value}"
            )
        return value, np.asarray(grad, float)

    return wrapped


def minimize_qn(loss_and_grad, w0, config: QuasiNewtonConfig) -> QNResult:
    """Minimize a deterministic loss by L-BFGS-B; best over all starts.

    `w0` is a single start (1-d) or a stack of starts (2-d, one per row).
    """
    starts = np.atleast_2d(np.asarray(w0, float))
    fun = _checked(loss_and_grad)
    best = None
    losses = []
    for s in starts:
        res = sciopt.minimize(
            fun,
            s,
            jac=True,
            method="L-BFGS-B",
            options={
                "maxcor": config.memory,
                "maxiter": config.maxiter,
                "gtol": config.gtol,
                "ftol": 1e-14,
            },
        )
        losses.append(float(res.fun))
        if best is None or res.fun < best.fun:
            best = res
    converged = bool(best.status == 0)
    return QNResult(
        w=np.asarray(best.x, float),
        loss=float(best.fun),
        iterations=int(best.nit),
        converged=converged,
        restart_losses=losses,
    )


def cosine_schedule(step, total, lr_init, lr_final):
    """Half-cosine interpolation from lr_init (step 0) to lr_final (last step)."""
    if total <= 1:
        return lr_init
    frac = step / (total - 1)
    return lr_final + 0.5 * (lr_init - lr_final) * (1.0 + math.cos(math.pi * frac))


def minimize_adaptive(loss_and_grad, w0, config: FirstOrderConfig, batches, rng):
    """Adam over a pre-cached batch pool with cyclic rotation.

    `loss_and_grad(w, batch) -> (value, grad)`.  Each step averages gradients
    over `k_batch` consecutive pool entries (the pool order is shuffled once
    up front).  Non-finite gradients skip the step; more than 1% skipped
    aborts the run.
    """
    if len(batches) == 0:
        raise ValueError("batch pool must be non-empty")
    w = np.asarray(w0, float).copy()
    m = np.zeros_like(w)
    v = np.zeros_like(w)
    order = rng.permutation(len(batches))
    pool = [batches[i] for i in order]
    trace = np.zeros(config.iterations)
    skipped = 0
    cursor = 0
    for it in range(config.iterations):
        value = 0.0
        grad = np.zeros_like(w)
        for _ in range(config.k_batch):
            batch = pool[cursor % len(pool)]
            cursor += 1
            val_b, g_b = loss_and_grad(w, batch)
            value += val_b
            grad += g_b
        value /= config.k_batch
        grad /= config.k_batch
        trace[it] = value
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            skipped += 1
            if skipped > max(1, 0.01 * config.iterations):
                raise NonFiniteLossError(
                    f"aborting: {skipped} non-finite steps out of {it + 1}"
                )
            continue
        lr = cosine_schedule(it, config.iterations, config.lr_init, config.lr_final)
        m = config.beta1 * m + (1.0 - config.beta1) * grad
        v = config.beta2 * v + (1.0 - config.beta2) * grad * grad
        mhat = m / (1.0 - config.beta1 ** (it + 1))
        vhat = v / (1.0 - config.beta2 ** (it + 1))
        w = w - lr * mhat / (np.sqrt(vhat) + config.eps)
    return w, trace

"""Synthetic marginal families with samplers, densities and known optimal drifts.

Each flow is a named family mu_t of probability measures on R^d over a horizon
[0, T], together with the minimum-kinetic-energy drift that transports it (the
continuity-equation minimizer for the deterministic kinds, the fixed-diffusion
minimizer for the stochastic kind).  All kinds are defined at T = 1 and
extended to other horizons by the time rescaling t -> t/T, under which the
deterministic optimal drift scales by 1/T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

KINDS = (
    "gauss_translate_1d",
    "roundtrip_1d",
    "bimodal_merge_1d",
    "gauss_translate_2d",
    "bifurcation_2d",
    "gauss_translate_nd",
    "stochastic_gauss_1d",
)

_SQRT2PI = math.sqrt(2.0 * math.pi)


def _normal_pdf(x, mean, var=1.0):
    return np.exp(-0.5 * (x - mean) ** 2 / var) / (_SQRT2PI * math.sqrt(var))


@dataclass(frozen=True)
class MarginalFlow:
    """A named marginal family; construct via `make_flow`."""

    kind: str
    T: float = 1.0
    dim: int = 1
    sigma: float = 0.0  # diffusion the optimal drift refers to (stochastic kind only)
    params: dict = field(default_factory=dict)

    def _check_time(self, t):
        if not (0.0 <= t <= self.T):
            raise ValueError(f"time {t} outside [0, {self.T}]")

    def _s(self, t):
        """Rescaled time in [0, 1]."""
        return t / self.T

    # -- per-kind mixture description: list of (weight, mean vector, unit covariance) --
    def _components(self, t):
        s = self._s(t)
        k = self.kind
        if k == "gauss_translate_1d" or k == "stochastic_gauss_1d":
            return [(1.0, np.array([-1.0 + 2.0 * s]))]
        if k == "roundtrip_1d":
            return [(1.0, np.array([2.0 * math.sin(math.pi * s)]))]
        if k == "bimodal_merge_1d":
            return [
                (0.5, np.array([-2.0 + 2.0 * s])),
                (0.5, np.array([2.0 - 2.0 * s])),
            ]
        if k == "gauss_translate_2d":
            return [(1.0, np.array([-1.0 + 2.0 * s, 0.5 * s]))]
        if k == "bifurcation_2d":
            return [
                (0.5, np.array([-2.0 + 2.0 * s, 0.0])),
                (0.5, np.array([2.0 - 2.0 * s, 0.0])),
            ]
        if k == "gauss_translate_nd":
            d = self.dim
            return [(1.0, np.full(d, s / math.sqrt(d)))]
        raise ConfigError(f"unknown flow kind {k!r}")

    def sample(self, t, n, rng) -> np.ndarray:
        """n i.i.d. draws from mu_t, shape (n, d).

        Mixture kinds pick the component with a fair coin per particle.
        """
        self._check_time(t)
        comps = self._components(t)
        out = rng.normal(size=(n, self.dim))
        if len(comps) == 1:
            out += comps[0][1]
        else:
            weights = np.array([w for w, _ in comps])
            choice = rng.choice(len(comps), size=n, p=weights)
            means = np.stack([m for _, m in comps])
            out += means[choice]
        return out

    def _as_points(self, x):
        x = np.asarray(x, float)
        if x.ndim == 1:
            x = x.reshape(-1, self.dim)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got shape {x.shape}")
        return x

    def true_drift(self, t, x) -> np.ndarray:
        """Optimal drift u*(t, x) for points x of shape (n, d)."""
        self._check_time(t)
        x = self._as_points(x)
        n = x.shape[0]
        s = self._s(t)
        k = self.kind
        if k == "gauss_translate_1d":
            u = np.full((n, 1), 2.0)
        elif k == "roundtrip_1d":
            u = np.full((n, 1), 2.0 * math.pi * math.cos(math.pi * s))
        elif k == "bimodal_merge_1d":
            u = -2.0 * np.tanh(2.0 * (1.0 - s) * x)
        elif k == "gauss_translate_2d":
            u = np.tile([2.0, 0.5], (n, 1))
        elif k == "bifurcation_2d":
            u = np.zeros((n, 2))
            u[:, 0] = -2.0 * np.tanh(2.0 * (1.0 - s) * x[:, 0])
        elif k == "gauss_translate_nd":
            d = self.dim
            u = np.full((n, d), 1.0 / math.sqrt(d))
        elif k == "stochastic_gauss_1d":
            # Fixed-diffusion minimizer for mu_t = N(-1 + 2t/T, 1), sigma = 1:
            # the variance-preserving part is -x/2 and the mean follows 2/T.
            u = -0.5 * x + (2.0 / self.T - 0.5 + s)
        else:
            raise ConfigError(f"unknown flow kind {k!r}")
        return u / self.T if k != "stochastic_gauss_1d" else u

    def density(self, t, x) -> np.ndarray:
        """Closed-form density of mu_t at points x, shape (n,)."""
        self._check_time(t)
        x = self._as_points(x)
        comps = self._components(t)
        out = np.zeros(x.shape[0])
        for w, m in comps:
            out += w * np.prod(_normal_pdf(x, m), axis=1)
        return out

    def drift_fn(self):
        """The optimal drift as a batch callable (n, d+1) -> (n, d).

        Rows are assumed to share one time, which is how the simulators and
        metric evaluators call drifts.
        """

        def drift(points):
            points = np.asarray(points, float)
            out = np.empty((len(points), self.dim))
            for t in np.unique(points[:, 0]):
                sel = points[:, 0] == t
                out[sel] = self.true_drift(t, points[sel, 1:])
            return out

        return drift

    def moments(self, t):
        """Analytic per-component mean and variance of mu_t (diagonal covariance)."""
        self._check_time(t)
        comps = self._components(t)
        mean = sum(w * m for w, m in comps)
        var = np.ones(self.dim) + sum(w * (m - mean) ** 2 for w, m in comps)
        return mean, var


def make_flow(kind: str, T: float = 1.0, d: int | None = None) -> MarginalFlow:
    """Build a flow by kind name; `d` is required for gauss_translate_nd."""
    if kind not in KINDS:
        raise ConfigError(f"unknown flow kind {kind!r}; choose from {KINDS}")
    if not (T > 0):
        raise ConfigError(f"horizon must be positive, got {T}")
    if kind == "gauss_translate_nd":
        if d is None or d < 1:
            raise ConfigError("gauss_translate_nd requires a spatial dimension d >= 1")
        dim = d
    elif kind in ("gauss_translate_2d", "bifurcation_2d"):
        dim = 2
    else:
        dim = 1
    sigma = 1.0 if kind == "stochastic_gauss_1d" else 0.0
    return MarginalFlow(kind=kind, T=T, dim=dim, sigma=sigma)

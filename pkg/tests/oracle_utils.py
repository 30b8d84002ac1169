"""Independent oracles shared by the test modules.

Everything here is deliberately naive: high-precision finite differences of
the raw kernel for the generator formulas, and a plain triple loop over the
estimator's index sets.  None of it shares code with the optimized paths it
checks.
"""

import mpmath as mp
import numpy as np

from alltimeot.estimator import _penalty_prefactors
from alltimeot.kernels import apply_generator, apply_generator_twice

mp.mp.dps = 40

FD_STEP = mp.mpf("1e-4")


def _kernel_mp(y, y2, h):
    r2 = sum((a - b) ** 2 for a, b in zip(y, y2))
    return mp.exp(-r2 / (2 * mp.mpf(h) ** 2))


def _shift(y, v, s):
    return [a + s * b for a, b in zip(y, v)]


def _fd_generator(f, y, u, sigma, delta=FD_STEP):
    """Finite-difference generator (d/dt + u.grad_x + sigma^2/2 laplace_x) f at y."""
    v = [mp.mpf(1)] + [mp.mpf(float(ui)) for ui in np.atleast_1d(u)]
    out = (f(_shift(y, v, delta)) - f(_shift(y, v, -delta))) / (2 * delta)
    if sigma > 0:
        lap = mp.mpf(0)
        center = f(y)
        for i in range(1, len(y)):
            e = [mp.mpf(0)] * len(y)
            e[i] = mp.mpf(1)
            lap += (f(_shift(y, e, delta)) - 2 * center + f(_shift(y, e, -delta))) / delta**2
        out += mp.mpf(float(sigma)) ** 2 / 2 * lap
    return out


def fd_apply_generator(u, y, y2, sigma, h):
    """FD oracle for the single generator application (L^u_y K)(y2, y)."""
    y = [mp.mpf(float(a)) for a in np.atleast_1d(y)]
    y2 = [mp.mpf(float(a)) for a in np.atleast_1d(y2)]
    return float(_fd_generator(lambda yy: _kernel_mp(yy, y2, h), y, u, sigma))


def fd_apply_generator_twice(u, u2, y, y2, sigma, h):
    """FD oracle for the double application (L^u_y L^{u2}_{y2} K)(y, y2)."""
    y = [mp.mpf(float(a)) for a in np.atleast_1d(y)]
    y2 = [mp.mpf(float(a)) for a in np.atleast_1d(y2)]

    def inner(yy):
        return _fd_generator(lambda zz: _kernel_mp(yy, zz, h), y2, u2, sigma)

    return float(_fd_generator(inner, y, u, sigma))


def brute_penalty(batch, drift_values, config, same_slice_mask=None):
    """Triple-loop implementation of the three-sum penalty estimator."""
    if same_slice_mask is None:
        same_slice_mask = config.same_slice_mask
    T = config.T
    pts = batch.flat_points
    tf = batch.flat_times
    ids = batch.slice_ids
    U = np.asarray(drift_values, float)
    mn = batch.M * batch.N
    c1, c2, c3 = _penalty_prefactors(batch, T)
    bulk = 0.0
    cross = 0.0
    for p in range(mn):
        for q in range(mn):
            if p == q:
                continue
            if same_slice_mask and ids[p] == ids[q]:
                continue
            w = T - max(tf[p], tf[q])
            bulk += w * apply_generator_twice(
                U[p], U[q], pts[p], pts[q], config.sigma, config.kernel
            )
            if tf[p] <= tf[q]:
                cross += apply_generator(U[p], pts[p], pts[q], config.sigma, config.kernel)
    boundary = 0.0
    for p in range(mn):
        for k in range(batch.N0):
            z = np.concatenate(([0.0], batch.x0[k]))
            boundary += (T - tf[p]) * apply_generator(
                U[p], pts[p], z, config.sigma, config.kernel
            )
    return c1 * bulk + c2 * boundary + c3 * cross


def fd_gradient(fn, w, step=1e-6):
    """Central finite-difference gradient of a scalar function of a vector."""
    w = np.asarray(w, float)
    g = np.zeros_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = step * max(1.0, abs(w[i]))
        g[i] = (fn(w + e) - fn(w - e)) / (2 * e[i])
    return g

"""Radial space-time kernel and its transport-generator applications.

The reproducing kernel lives on R^{d+1} (one time plus d space coordinates)
and is radial, K(y, y') = phi(|y - y'|).  Everything downstream needs three
things from this module:

* the derivative ladder phi_k of the radial profile, defined recursively by
  phi_{k+1}(r) = phi_k'(r) / r and extended continuously to r = 0;
* single applications of the transport generator
  L u = d/dt + u . grad_x + (sigma^2 / 2) * laplace_x
  to a kernel section, `apply_generator`;
* double applications L_y L'_{y'} K(y, y'), `apply_generator_twice`, which is
  the quadratic-form integrand of the continuity-residual penalty.

Derivation note (sigma > 0 double application).  Write D = y - y', with time
part Dt and space part Dx, r = |D|, utilde = (1, u).  Gradients of the radial
profile give grad phi = phi1 * D and Hess phi = phi2 * D Dᵀ + phi1 * I, hence
laplace_x phi = phi2 |Dx|^2 + d phi1.  Because derivatives in y' of a function
of D flip sign once per derivative order, composing the two generators yields

    L_y L'_{y'} K = -phi2 tau tau' - phi1 (1 + u.u')
                    + (sigma^2/2) (phi3 |Dx|^2 + (d+2) phi2) ((u - u').Dx)
                    + (sigma^4/4) (phi4 |Dx|^4 + 2(d+2) phi3 |Dx|^2
                                   + d(d+2) phi2),

with tau = Dt + u.Dx and tau' = Dt + u'.Dx.  The sigma = 0 truncation is the
first line.  The expression is symmetric under swapping (y, u) <-> (y', u',)
and has been checked symbolically and against high-precision finite
differences (see tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class RadialKernel:
    """Radial kernel profile on R^{d+1}.

    Only the Gaussian profile exp(-r^2 / (2 h^2)) is implemented; the ladder
    interface is profile-generic so compactly supported or Matern-class
    profiles can slot in later.
    """

    bandwidth: float
    profile: str = GAUSSIAN

    def __post_init__(self):
        if self.profile != GAUSSIAN:
            raise ConfigError(f"unsupported kernel profile: {self.profile!r}")
        if not (self.bandwidth > 0):
            raise ConfigError(f"kernel bandwidth must be positive, got {self.bandwidth}")

    def __call__(self, r):
        """Profile value phi(r); accepts scalars or arrays."""
        h2 = self.bandwidth * self.bandwidth
        return np.exp(-np.square(r) / (2.0 * h2))

    def pair_value(self, y, y2):
        """K(y, y2) for space-time points given as (d+1,) arrays."""
        return float(self(np.linalg.norm(np.asarray(y, float) - np.asarray(y2, float))))


@dataclass(frozen=True)
class PhiLadder:
    """Values of phi and its derivative ladder at a single radius.

    phi3/phi4 are populated only when the ladder was computed to order 4;
    they are required whenever the generator carries a diffusion term.
    """

    phi: float
    phi1: float
    phi2: float
    phi3: float | None = None
    phi4: float | None = None

    @property
    def order(self) -> int:
        return 4 if self.phi3 is not None else 2


def phi_ladder(r: float, kernel: RadialKernel, order: int = 2) -> PhiLadder:
    """Evaluate phi(r), phi1(r), ..., up to `order`, by closed form.

    The recursion phi_{k+1}(r) = phi_k'(r)/r is never evaluated as a
    quotient: for the Gaussian profile each rung is a constant multiple of
    phi, so r = 0 needs no special-casing.
    """
    if r < 0:
        raise ValueError(f"radius must be nonnegative, got {r}")
    if order not in (2, 4):
        raise ConfigError(f"ladder order must be 2 or 4, got {order}")
    h2 = kernel.bandwidth * kernel.bandwidth
    phi = math.exp(-r * r / (2.0 * h2))
    phi1 = -phi / h2
    phi2 = phi / (h2 * h2)
    if order == 2:
        return PhiLadder(phi, phi1, phi2)
    phi3 = -phi / (h2 * h2 * h2)
    phi4 = phi / (h2 * h2 * h2 * h2)
    return PhiLadder(phi, phi1, phi2, phi3, phi4)


def lift_drift(u) -> np.ndarray:
    """Lifted drift (1, u_1, ..., u_d) used in the generator formulas."""
    u = np.atleast_1d(np.asarray(u, float))
    return np.concatenate(([1.0], u))


def _split(y):
    y = np.atleast_1d(np.asarray(y, float))
    return y[0], y[1:]


def apply_generator(u, y, y2, sigma: float, kernel: RadialKernel) -> float:
    """(L^u_y K)(y2, y): the generator acting on the second kernel slot.

    For sigma = 0 this is phi1(|y - y2|) * utilde(y) . (y - y2); a positive
    sigma adds (sigma^2/2) * (d * phi1 + |Dx|^2 * phi2).
    """
    t, x = _split(y)
    t2, x2 = _split(y2)
    if x.shape != x2.shape:
        raise ValueError("points must share spatial dimension")
    u = np.atleast_1d(np.asarray(u, float))
    if u.shape != x.shape:
        raise ValueError("drift value must match spatial dimension")
    d = x.size
    dt = t - t2
    dx = x - x2
    dx2 = float(dx @ dx)
    r = math.sqrt(dt * dt + dx2)
    lad = phi_ladder(r, kernel, order=2)
    tau = dt + float(u @ dx)
    out = lad.phi1 * tau
    if sigma > 0:
        out += 0.5 * sigma * sigma * (d * lad.phi1 + dx2 * lad.phi2)
    return out


def apply_generator_twice(
    u,
    u2,
    y,
    y2,
    sigma: float,
    kernel: RadialKernel,
    ladder: PhiLadder | None = None,
) -> float:
    """(L^u_y L^{u2}_{y2} K)(y, y2), the penalty's quadratic-form integrand.

    See the module docstring for the closed form.  A precomputed `ladder`
    may be supplied; requesting sigma > 0 against an order-2 ladder is a
    configuration error because phi3/phi4 are then undefined.
    """
    t, x = _split(y)
    t2, x2 = _split(y2)
    if x.shape != x2.shape:
        raise ValueError("points must share spatial dimension")
    u = np.atleast_1d(np.asarray(u, float))
    u2 = np.atleast_1d(np.asarray(u2, float))
    d = x.size
    dt = t - t2
    dx = x - x2
    dx2 = float(dx @ dx)
    r = math.sqrt(dt * dt + dx2)
    if ladder is None:
        ladder = phi_ladder(r, kernel, order=4 if sigma > 0 else 2)
    if sigma > 0 and ladder.order < 4:
        raise ConfigError("sigma > 0 requires a ladder computed to order 4")
    tau = dt + float(u @ dx)
    tau2 = dt + float(u2 @ dx)
    out = -ladder.phi2 * tau * tau2 - ladder.phi1 * (1.0 + float(u @ u2))
    if sigma > 0:
        s2 = 0.5 * sigma * sigma
        out += s2 * (ladder.phi3 * dx2 + (d + 2) * ladder.phi2) * float((u - u2) @ dx)
        out += s2 * s2 * (
            ladder.phi4 * dx2 * dx2
            + 2.0 * (d + 2) * ladder.phi3 * dx2
            + d * (d + 2) * ladder.phi2
        )
    return out


def apply_generator_twice_gaussian(u, u2, y, y2, kernel: RadialKernel) -> float:
    """Hot-path form of the sigma = 0 double application for the Gaussian.

    Equals [-a^2 tau tau' + a (1 + u.u')] K(y, y2) with a = 1/h^2; only
    first-order kernel derivatives appear, so the expression is dimension
    independent and cheap.
    """
    if kernel.profile != GAUSSIAN:
        raise ConfigError("fast path requires the gaussian profile")
    t, x = _split(y)
    t2, x2 = _split(y2)
    u = np.atleast_1d(np.asarray(u, float))
    u2 = np.atleast_1d(np.asarray(u2, float))
    a = 1.0 / (kernel.bandwidth * kernel.bandwidth)
    dt = t - t2
    dx = x - x2
    r2 = dt * dt + float(dx @ dx)
    K = math.exp(-0.5 * a * r2)
    tau = dt + float(u @ dx)
    tau2 = dt + float(u2 @ dx)
    return (-a * a * tau * tau2 + a * (1.0 + float(u @ u2))) * K

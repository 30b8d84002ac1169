"""Velocity-field parameterizations: feature dictionaries and a small tanh MLP.

Both families expose the same surface -- a flat parameter vector, batched
evaluation at space-time points, and reverse-mode accumulation of parameter
gradients from output cotangents -- so the loss code never branches on the
model class.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def _tanh(x):
    return np.tanh(x)


# Feature sets are lists of (label, fn(t, X) -> column); X has shape (n, d).
def _features_1d_base(with_quad_t=False, with_tx=False, with_tanh=False):
    feats = [("1", lambda t, X: np.ones_like(t)), ("t", lambda t, X: t)]
    if with_quad_t:
        feats.append(("t^2", lambda t, X: t * t))
    feats.append(("x", lambda t, X: X[:, 0]))
    if with_tx:
        feats.append(("t*x", lambda t, X: t * X[:, 0]))
    if with_tanh:
        feats += [
            ("tanh(x)", lambda t, X: _tanh(X[:, 0])),
            ("t*tanh(x)", lambda t, X: t * _tanh(X[:, 0])),
            ("tanh(2x)", lambda t, X: _tanh(2.0 * X[:, 0])),
            ("t*tanh(2x)", lambda t, X: t * _tanh(2.0 * X[:, 0])),
        ]
    return feats


def _features_2d(with_tx=False, with_tanh=False):
    feats = [
        ("1", lambda t, X: np.ones_like(t)),
        ("t", lambda t, X: t),
        ("x1", lambda t, X: X[:, 0]),
        ("x2", lambda t, X: X[:, 1]),
    ]
    if with_tx:
        feats += [
            ("t*x1", lambda t, X: t * X[:, 0]),
            ("t*x2", lambda t, X: t * X[:, 1]),
        ]
    if with_tanh:
        feats += [
            ("tanh(x1)", lambda t, X: _tanh(X[:, 0])),
            ("t*tanh(x1)", lambda t, X: t * _tanh(X[:, 0])),
            ("tanh(2x1)", lambda t, X: _tanh(2.0 * X[:, 0])),
            ("t*tanh(2x1)", lambda t, X: t * _tanh(2.0 * X[:, 0])),
        ]
    return feats


def _features_affine_d(d):
    feats = [("1", lambda t, X: np.ones_like(t)), ("t", lambda t, X: t)]
    for j in range(d):
        feats.append((f"x{j + 1}", lambda t, X, j=j: X[:, j]))
    return feats


def feature_set(name: str, d: int | None = None):
    """Return (spatial dim, feature list) for a named dictionary basis."""
    if name == "affine_1d":
        return 1, _features_1d_base()
    if name == "quad_t_1d":
        return 1, _features_1d_base(with_quad_t=True)
    if name == "bilinear_1d":
        return 1, _features_1d_base(with_tx=True)
    if name == "tanh_1d":
        return 1, _features_1d_base(with_tx=True, with_tanh=True)
    if name == "bilinear_2d":
        return 2, _features_2d(with_tx=True)
    if name == "tanh_2d":
        return 2, _features_2d(with_tx=True, with_tanh=True)
    if name == "affine_d":
        if d is None or d < 1:
            raise ConfigError("affine_d requires an explicit spatial dimension")
        return d, _features_affine_d(d)
    raise ConfigError(f"unknown feature set {name!r}")


class FeatureDictionary:
    """Linear-in-parameters drift u_i(t, x) = sum_f W[i, f] * Phi_f(t, x)."""

    family = "dictionary"

    def __init__(self, features: str, d: int | None = None):
        self.features = features
        self.dim, self._feats = feature_set(features, d)
        self.n_features = len(self._feats)
        self.W = np.zeros((self.dim, self.n_features))

    @property
    def n_params(self) -> int:
        return self.W.size

    def get_params(self) -> np.ndarray:
        return self.W.ravel().copy()

    def set_params(self, w):
        self.W = np.asarray(w, float).reshape(self.dim, self.n_features).copy()

    def featurize(self, points) -> np.ndarray:
        points = np.asarray(points, float)
        t, X = points[:, 0], points[:, 1:]
        return np.column_stack([fn(t, X) for _, fn in self._feats])

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, float)
        if points.shape[1] != self.dim + 1:
            raise ValueError(f"expected points with {self.dim + 1} columns, got {points.shape}")
        return self.featurize(points) @ self.W.T

    def backprop(self, points, cotangents) -> np.ndarray:
        cot = np.asarray(cotangents, float)
        if cot.shape != (len(points), self.dim):
            raise ValueError("cotangents misaligned with evaluation output")
        return (cot.T @ self.featurize(points)).ravel()

    def init(self, rng):
        self.W = rng.uniform(-0.5, 0.5, size=self.W.shape)
        return self

    def to_spec(self) -> dict:
        return {"family": self.family, "features": self.features, "d": self.dim}


class MlpDrift:
    """Two-hidden-layer tanh network (t, x) in R^{d+1} -> u in R^d."""

    family = "mlp"

    def __init__(self, d: int, hidden: int = 48):
        self.dim = d
        self.hidden = hidden
        self.W1 = np.zeros((hidden, d + 1))
        self.b1 = np.zeros(hidden)
        self.W2 = np.zeros((hidden, hidden))
        self.b2 = np.zeros(hidden)
        self.W3 = np.zeros((d, hidden))
        self.b3 = np.zeros(d)

    @property
    def _mats(self):
        return (self.W1, self.b1, self.W2, self.b2, self.W3, self.b3)

    @property
    def n_params(self) -> int:
        return sum(m.size for m in self._mats)

    def get_params(self) -> np.ndarray:
        return np.concatenate([m.ravel() for m in self._mats])

    def set_params(self, w):
        w = np.asarray(w, float)
        if w.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {w.size}")
        offset = 0
        for m in self._mats:
            m[...] = w[offset : offset + m.size].reshape(m.shape)
            offset += m.size

    def _forward(self, points):
        A0 = np.asarray(points, float)
        Z1 = A0 @ self.W1.T + self.b1
        A1 = np.tanh(Z1)
        Z2 = A1 @ self.W2.T + self.b2
        A2 = np.tanh(Z2)
        Y = A2 @ self.W3.T + self.b3
        return A0, A1, A2, Y

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, float)
        if points.shape[1] != self.dim + 1:
            raise ValueError(f"expected points with {self.dim + 1} columns, got {points.shape}")
        return self._forward(points)[-1]

    def backprop(self, points, cotangents) -> np.ndarray:
        cot = np.asarray(cotangents, float)
        A0, A1, A2, _ = self._forward(points)
        if cot.shape != (A0.shape[0], self.dim):
            raise ValueError("cotangents misaligned with evaluation output")
        dW3 = cot.T @ A2
        db3 = cot.sum(axis=0)
        dA2 = cot @ self.W3
        dZ2 = dA2 * (1.0 - A2 * A2)
        dW2 = dZ2.T @ A1
        db2 = dZ2.sum(axis=0)
        dA1 = dZ2 @ self.W2
        dZ1 = dA1 * (1.0 - A1 * A1)
        dW1 = dZ1.T @ A0
        db1 = dZ1.sum(axis=0)
        return np.concatenate(
            [dW1.ravel(), db1.ravel(), dW2.ravel(), db2.ravel(), dW3.ravel(), db3.ravel()]
        )

    def init(self, rng):
        for W in (self.W1, self.W2, self.W3):
            W[...] = rng.normal(size=W.shape) / np.sqrt(W.shape[1])
        for b in (self.b1, self.b2, self.b3):
            b[...] = 0.0
        return self

    def to_spec(self) -> dict:
        return {"family": self.family, "d": self.dim, "hidden": self.hidden}


def make_model(spec: dict, rng=None):
    """Build a drift model from a serializable spec; initialize if rng given.

    Spec forms: {"family": "dictionary", "features": <name>, "d": <int>} or
    {"family": "mlp", "d": <int>, "hidden": <int>}.
    """
    family = spec["family"]
    if family == "dictionary":
        model = FeatureDictionary(spec["features"], spec.get("d"))
    elif family == "mlp":
        model = MlpDrift(spec["d"], spec.get("hidden", 48))
    else:
        raise ConfigError(f"unknown model family {family!r}")
    if rng is not None:
        model.init(rng)
    return model


def constant_drift(value, d: int):
    """A fixed constant velocity field as a plain callable (n, d+1) -> (n, d)."""
    value = np.broadcast_to(np.asarray(value, float), (d,)).copy()

    def drift(points):
        return np.tile(value, (len(points), 1))

    return drift

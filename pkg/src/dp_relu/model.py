"""ReLU-regression primitives: predictions, pseudo-gradients, risks, and
parameter-error norms.

Labels follow y = relu(<x, w*>) + z with zero-mean noise z of variance
sigma^2.  Every risk in this package is the 1/2-scaled squared residual,

    L(w) = 1/2 * E[(relu(<x, w>) - y)^2],

so that L(w*) = sigma^2 / 2 under the well-specified model.  The 1/2 is
kept in empirical, Monte-Carlo, and excess risks alike; mixing conventions
is the classic source of silent factor-of-two bugs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LabeledExample",
    "Dataset",
    "relu",
    "predict",
    "predict_many",
    "glmtron_gradient",
    "sgd_gradient",
    "empirical_risk",
    "population_risk_mc",
    "excess_risk",
    "excess_risk_detail",
    "param_error_h",
]


def relu(z):
    """max(z, 0), elementwise on arrays, scalar on scalars."""
    return np.maximum(z, 0.0)


@dataclass(frozen=True)
class LabeledExample:
    """One (x, y) pair: a length-d feature vector and a real label."""

    x: np.ndarray
    y: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 1 or x.size < 1:
            raise ValueError("feature vector must be 1-d with d >= 1")
        if not np.all(np.isfinite(x)) or not np.isfinite(self.y):
            raise ValueError("example contains non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", float(self.y))

    @property
    def d(self) -> int:
        return self.x.shape[0]


@dataclass
class Dataset:
    """An ordered collection of examples stored as (n, d) / (n,) arrays.

    Order matters: one-pass trainers consume rows front to back.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.float64)
        if self.x.ndim != 2 or self.x.shape[1] < 1:
            raise ValueError("x must be an (n, d) array with d >= 1")
        if self.y.ndim != 1 or self.y.shape[0] != self.x.shape[0]:
            raise ValueError("y must be an (n,) array matching x")
        if not np.all(np.isfinite(self.x)) or not np.all(np.isfinite(self.y)):
            raise ValueError("dataset contains non-finite values")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def __len__(self) -> int:
        return self.n

    def example(self, i: int) -> LabeledExample:
        return LabeledExample(self.x[i], float(self.y[i]))

    def subset(self, idx) -> "Dataset":
        return Dataset(self.x[idx], self.y[idx])


def _as_vector(w, d: int | None = None) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("model vector must be 1-d")
    if d is not None and w.shape[0] != d:
        raise ValueError(f"dimension mismatch: model has {w.shape[0]}, data has {d}")
    return w


def predict(w, x) -> float:
    """Noiseless model mean relu(<x, w>)."""
    x = np.asarray(x, dtype=np.float64)
    w = _as_vector(w, x.shape[-1])
    return float(relu(x @ w))


def predict_many(w, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    w = _as_vector(w, X.shape[1])
    return relu(X @ w)


def glmtron_gradient(w, x, y: float) -> np.ndarray:
    """GLMtron pseudo-gradient x * (relu(<x, w>) - y).

    No activation-derivative factor; this is what makes the update a
    perceptron-style step rather than plain SGD on the squared loss.
    """
    x = np.asarray(x, dtype=np.float64)
    w = _as_vector(w, x.shape[0])
    return x * (float(relu(x @ w)) - y)


def sgd_gradient(w, x, y: float) -> np.ndarray:
    """SGD gradient of the squared ReLU loss: the GLMtron pseudo-gradient
    gated by the indicator 1[<x, w> > 0]."""
    x = np.asarray(x, dtype=np.float64)
    w = _as_vector(w, x.shape[0])
    z = float(x @ w)
    if z <= 0.0:
        return np.zeros_like(x)
    return x * (z - y)


def empirical_risk(w, data: Dataset) -> float:
    """1/2 * mean squared residual over the dataset."""
    if len(data) == 0:
        raise ValueError("empirical risk of an empty dataset is undefined")
    r = predict_many(w, data.x) - data.y
    # np.mean sums pairwise, keeping 1e6-sample estimates stable to ~1e-15.
    return 0.5 * float(np.mean(r * r))


def population_risk_mc(w, gt, n_samples: int, seed: int) -> float:
    """Monte-Carlo estimate of L(w) from n_samples fresh draws.

    Deterministic for a fixed seed regardless of caller threading.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    from .datagen import generate_dataset

    data = generate_dataset(gt, n_samples, seed)
    return empirical_risk(w, data)


def excess_risk(w, w_star, gt, n_samples: int, seed: int) -> float:
    """L(w) - L(w*) by Monte Carlo with common random numbers.

    Both risks are evaluated on the same draws, so the estimate is exactly
    zero at w = w* and its variance stays proportional to ||w - w*||.
    """
    return excess_risk_detail(w, w_star, gt, n_samples, seed)[0]


def excess_risk_detail(w, w_star, gt, n_samples: int, seed: int) -> tuple[float, float]:
    """(excess risk estimate, standard error) under common random numbers."""
    w = _as_vector(w)
    w_star = _as_vector(w_star, w.shape[0])
    from .datagen import generate_dataset

    data = generate_dataset(gt, n_samples, seed)
    r = predict_many(w, data.x) - data.y
    r_star = predict_many(w_star, data.x) - data.y
    diffs = 0.5 * (r * r - r_star * r_star)
    mean = float(np.mean(diffs))
    if n_samples == 1:
        return mean, 0.0
    se = float(np.std(diffs, ddof=1) / np.sqrt(n_samples))
    return mean, se


def param_error_h(w, w_star, h=None) -> float:
    """Squared H-norm of the parameter error, (w - w*)^T H (w - w*).

    ``h`` may be a CovarianceSpec, a PSD matrix, a diagonal vector, or None
    for the identity.
    """
    w = _as_vector(w)
    w_star = _as_vector(w_star, w.shape[0])
    delta = w - w_star
    if h is None:
        return float(delta @ delta)
    if hasattr(h, "matrix"):
        h = h.matrix()
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == 1:
        if h.shape[0] != delta.shape[0]:
            raise ValueError("diagonal length does not match dimension")
        return float(np.sum(h * delta * delta))
    if h.shape != (delta.shape[0], delta.shape[0]):
        raise ValueError("covariance shape does not match dimension")
    return float(delta @ h @ delta)

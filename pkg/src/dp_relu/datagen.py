"""Synthetic data generators for well-specified ReLU regression.

Supported designs are all symmetric (x and -x identically distributed):

* ``gaussian``      x = H^{1/2} g,  g standard normal
* ``rademacher``    x = H^{1/2} r,  r with iid +/-1 entries
* ``uniform_cube``  x with iid Uniform[-1, 1] entries (identity covariance
  spec only; this is the lower-bound distribution class)

Labels are y = relu(<x, w*>) + sigma * z with z standard normal.  The
module also ships Monte-Carlo diagnostics for the moment, symmetry, and
tail conditions the trainers' analysis leans on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import Dataset, relu

__all__ = [
    "DESIGNS",
    "CovarianceSpec",
    "TailParams",
    "GroundTruth",
    "r_x_squared",
    "sample_w_star",
    "sample_design",
    "design_matrix",
    "sample_label",
    "labels",
    "generate_dataset",
    "check_symmetry_moment",
    "check_covariance",
    "check_fourth_moment",
    "check_tail",
]

DESIGNS = ("gaussian", "rademacher", "uniform_cube")


@dataclass(frozen=True)
class CovarianceSpec:
    """Target design covariance H: identity, diagonal, or an explicit PSD matrix."""

    d: int
    kind: str = "identity"
    diag: np.ndarray | None = None
    full: np.ndarray | None = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.kind == "identity":
            pass
        elif self.kind == "diagonal":
            v = np.asarray(self.diag, dtype=np.float64)
            if v.shape != (self.d,):
                raise ValueError("diagonal must have length d")
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise ValueError("diagonal entries must be finite and >= 0")
            object.__setattr__(self, "diag", v)
        elif self.kind == "explicit":
            m = np.asarray(self.full, dtype=np.float64)
            if m.shape != (self.d, self.d):
                raise ValueError("matrix must be d x d")
            if not np.allclose(m, m.T, atol=1e-12):
                raise ValueError("matrix must be symmetric")
            if float(np.linalg.eigvalsh(m)[0]) < -1e-10:
                raise ValueError("matrix must be positive semi-definite")
            object.__setattr__(self, "full", m)
        else:
            raise ValueError(f"unknown covariance kind {self.kind!r}")

    @classmethod
    def identity(cls, d: int) -> "CovarianceSpec":
        return cls(d=d, kind="identity")

    @classmethod
    def diagonal(cls, values) -> "CovarianceSpec":
        values = np.asarray(values, dtype=np.float64)
        return cls(d=values.shape[0], kind="diagonal", diag=values)

    @classmethod
    def explicit(cls, matrix) -> "CovarianceSpec":
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(d=matrix.shape[0], kind="explicit", full=matrix)

    def matrix(self) -> np.ndarray:
        if self.kind == "identity":
            return np.eye(self.d)
        if self.kind == "diagonal":
            return np.diag(self.diag)
        return self.full.copy()

    def sqrt_matrix(self) -> np.ndarray:
        """Symmetric square root H^{1/2}; diagonal specs take entrywise roots."""
        if self.kind == "identity":
            return np.eye(self.d)
        if self.kind == "diagonal":
            return np.diag(np.sqrt(self.diag))
        vals, vecs = np.linalg.eigh(self.full)
        vals = np.clip(vals, 0.0, None)
        return (vecs * np.sqrt(vals)) @ vecs.T

    def trace(self) -> float:
        if self.kind == "identity":
            return float(self.d)
        if self.kind == "diagonal":
            return float(np.sum(self.diag))
        return float(np.trace(self.full))

    def eigenvalues(self) -> np.ndarray:
        if self.kind == "identity":
            return np.ones(self.d)
        if self.kind == "diagonal":
            return np.sort(np.asarray(self.diag))
        return np.linalg.eigvalsh(self.full)

    def condition_number(self) -> float:
        vals = self.eigenvalues()
        lo, hi = float(vals[0]), float(vals[-1])
        if lo <= 0.0:
            return math.inf
        return hi / lo

    def spectral_norm(self) -> float:
        return float(self.eigenvalues()[-1])


@dataclass(frozen=True)
class TailParams:
    """Constants (C2, a, b_x) of the sub-Gaussian tail condition.

    Defaults a = 1/2 (the natural sub-Gaussian exponent) and C2 = 2; b_x
    should be set to 1/N for an N-sample run.  These are configuration, not
    asserted universal constants.
    """

    c2: float = 2.0
    a: float = 0.5
    b_x: float = 1e-4

    def __post_init__(self):
        if self.c2 <= 0 or self.a <= 0:
            raise ValueError("c2 and a must be positive")
        if not 0 < self.b_x < 1:
            raise ValueError("b_x must lie in (0, 1)")


@dataclass(frozen=True)
class GroundTruth:
    """True parameter, noise level, covariance, and design family."""

    w_star: np.ndarray
    sigma: float
    cov: CovarianceSpec
    design: str = "gaussian"
    alpha: float = 3.0  # fourth-moment constant; 3 covers all three designs

    def __post_init__(self):
        w = np.ascontiguousarray(self.w_star, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] != self.cov.d:
            raise ValueError("w_star must be 1-d and match the covariance dimension")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}")
        if self.design == "uniform_cube" and self.cov.kind != "identity":
            raise ValueError("uniform_cube ignores cov and requires an identity spec")
        object.__setattr__(self, "w_star", w)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def d(self) -> int:
        return self.cov.d


def r_x_squared(alpha: float, trace_h: float, a: float, b_x: float) -> float:
    """High-probability bound R_x^2 = alpha * tr(H) * log^{2a}(1/b_x) on ||x||^2."""
    return alpha * trace_h * math.log(1.0 / b_x) ** (2.0 * a)


def sample_w_star(d: int, norm: float, rng) -> np.ndarray:
    """Uniform draw from the radius-``norm`` sphere in R^d."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if norm <= 0:
        raise ValueError("norm must be positive")
    v = rng.standard_normal(d)
    n = float(np.linalg.norm(v))
    while n == 0.0:  # probability-0 guard
        v = rng.standard_normal(d)
        n = float(np.linalg.norm(v))
    return v * (norm / n)


def design_matrix(gt: GroundTruth, n: int, rng) -> np.ndarray:
    """n design draws as an (n, d) array."""
    d = gt.d
    if gt.design == "uniform_cube":
        return rng.uniform(-1.0, 1.0, size=(n, d))
    if gt.design == "gaussian":
        z = rng.standard_normal((n, d))
    else:  # rademacher
        z = rng.integers(0, 2, size=(n, d)).astype(np.float64) * 2.0 - 1.0
    if gt.cov.kind == "identity":
        return z
    if gt.cov.kind == "diagonal":
        return z * np.sqrt(gt.cov.diag)
    return z @ gt.cov.sqrt_matrix()


def sample_design(gt: GroundTruth, rng) -> np.ndarray:
    return design_matrix(gt, 1, rng)[0]


def labels(gt: GroundTruth, X: np.ndarray, rng) -> np.ndarray:
    """Well-specified labels relu(X w*) + sigma * z for the given designs."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != gt.d:
        raise ValueError("design dimension does not match ground truth")
    mean = relu(X @ gt.w_star)
    if gt.sigma == 0.0:
        return mean
    return mean + gt.sigma * rng.standard_normal(X.shape[0])


def sample_label(gt: GroundTruth, x: np.ndarray, rng) -> float:
    return float(labels(gt, np.asarray(x, dtype=np.float64)[None, :], rng)[0])


def generate_dataset(gt: GroundTruth, n: int, seed: int) -> Dataset:
    """n iid examples, bit-for-bit reproducible from the seed.

    The design and the label noise come from separate child streams of one
    seed sequence, so the same designs are produced whether or not labels
    are noisy, and dataset content never depends on consumption order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ss = np.random.SeedSequence(seed)
    design_rng, noise_rng = (np.random.default_rng(c) for c in ss.spawn(2))
    X = design_matrix(gt, n, design_rng)
    y = labels(gt, X, noise_rng)
    return Dataset(X, y)


# ---------------------------------------------------------------------------
# Distributional diagnostics (Monte Carlo)
# ---------------------------------------------------------------------------


@dataclass
class DiagnosticReport:
    name: str
    statistic: float
    bound: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def __str__(self) -> str:
        flag = "ok" if self.passed else "FLAG"
        return f"[{flag}] {self.name}: statistic={self.statistic:.6g} bound={self.bound:.6g}"


def check_symmetry_moment(gt: GroundTruth, n_samples: int, seed: int) -> DiagnosticReport:
    """MC check of E[x x^T 1[x^T u > 0]] = H/2 for a random unit direction u."""
    ss = np.random.SeedSequence(seed)
    u_rng, x_rng = (np.random.default_rng(c) for c in ss.spawn(2))
    u = sample_w_star(gt.d, 1.0, u_rng)
    X = design_matrix(gt, n_samples, x_rng)
    gate = (X @ u) > 0.0
    Xg = X[gate]
    est = (Xg.T @ Xg) / n_samples
    dev = float(np.max(np.abs(est - 0.5 * gt.cov.matrix())))
    bound = 3.0 / math.sqrt(n_samples) * max(1.0, gt.cov.spectral_norm())
    return DiagnosticReport(
        "half-covariance symmetry",
        dev,
        bound,
        dev <= bound,
        {"direction": u, "estimate": est},
    )


def check_covariance(gt: GroundTruth, n_samples: int, seed: int) -> DiagnosticReport:
    """Entrywise agreement of the empirical covariance with H."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    X = design_matrix(gt, n_samples, rng)
    emp = (X.T @ X) / n_samples
    target = gt.cov.matrix() if gt.design != "uniform_cube" else np.eye(gt.d) / 3.0
    dev = float(np.max(np.abs(emp - target)))
    bound = 5.0 / math.sqrt(n_samples) * max(1.0, gt.cov.spectral_norm())
    return DiagnosticReport("covariance", dev, bound, dev <= bound, {"estimate": emp})


def check_fourth_moment(gt: GroundTruth, n_samples: int, seed: int) -> DiagnosticReport:
    """Top eigenvalue of the MC estimate of E[x x^T A x x^T] against
    alpha * tr(HA) * ||H|| for a random PSD A normalised to tr(HA) = 1."""
    ss = np.random.SeedSequence(seed)
    a_rng, x_rng = (np.random.default_rng(c) for c in ss.spawn(2))
    B = a_rng.standard_normal((gt.d, gt.d))
    A = B @ B.T
    H = gt.cov.matrix() if gt.design != "uniform_cube" else np.eye(gt.d) / 3.0
    A /= float(np.trace(H @ A))
    X = design_matrix(gt, n_samples, x_rng)
    q = np.einsum("ni,ij,nj->n", X, A, X)
    est = (X.T * q) @ X / n_samples
    top = float(np.linalg.eigvalsh(est)[-1])
    h_norm = float(np.linalg.eigvalsh(H)[-1])
    bound = (gt.alpha + 0.5) * h_norm
    return DiagnosticReport("fourth moment", top, bound, top <= bound, {"a": A})


def check_tail(
    gt: GroundTruth, n_samples: int, seed: int, tail: TailParams | None = None
) -> DiagnosticReport:
    """Empirical (1 - b_x)-quantile of ||x||^2 against E||x||^2 * log^{2a}(1/b_x)."""
    tail = tail or TailParams()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    X = design_matrix(gt, n_samples, rng)
    sq = np.sum(X * X, axis=1)
    q = float(np.quantile(sq, 1.0 - tail.b_x))
    second_moment = float(np.mean(sq))
    bound = second_moment * math.log(1.0 / tail.b_x) ** (2.0 * tail.a)
    return DiagnosticReport("norm tail", q, bound, q <= bound, {"E||x||^2": second_moment})

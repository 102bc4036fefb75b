"""Norm clipping and the doubling threshold search.

The search probes the grid {delta_grid * 2^i : 0 <= i <= k} with
k = ceil(log2(upsilon / delta_grid)), counting how many estimating-set
residuals |relu(<x, w>) - y| fall at or below each candidate, and stops at
the first candidate whose (optionally noised) count reaches the set size.
If every probe falls short the largest grid value is returned, so the
search is total.

Clipping is v * min(1, s/||v||): norms are never inflated.  (The inflating
max/min variant would break the 2*eta*s sensitivity bound the Gaussian
mechanism is calibrated against.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Dataset, relu

__all__ = [
    "ThresholdParams",
    "ClipScale",
    "clip",
    "count_within",
    "residual_magnitudes",
    "dp_threshold",
    "search_on_residuals",
    "make_clip_scale",
    "threshold_lambda",
    "threshold_defaults_from_ground_truth",
    "threshold_defaults_from_data",
]


def _n_doublings(upsilon: float, delta_grid: float) -> int:
    """Smallest k with delta_grid * 2^k >= upsilon (0 when upsilon = delta_grid)."""
    k = max(0, math.ceil(math.log2(upsilon / delta_grid)))
    # Guard the float log against landing one step off at exact powers of two.
    while k > 0 and delta_grid * 2.0 ** (k - 1) >= upsilon:
        k -= 1
    while delta_grid * 2.0**k < upsilon:
        k += 1
    return k


@dataclass(frozen=True)
class ThresholdParams:
    """Doubling-search configuration: domain size, grid granularity, noise."""

    upsilon: float
    delta_grid: float
    f: float = 0.0
    public: bool = True

    def __post_init__(self):
        if not self.delta_grid > 0:
            raise ValueError("delta_grid must be positive")
        if self.upsilon < self.delta_grid:
            raise ValueError("upsilon must be >= delta_grid")
        if self.f < 0:
            raise ValueError("noise multiplier must be >= 0")

    @property
    def n_doublings(self) -> int:
        return _n_doublings(self.upsilon, self.delta_grid)

    def grid(self) -> np.ndarray:
        return self.delta_grid * 2.0 ** np.arange(self.n_doublings + 1)

    @property
    def count_noise_std(self) -> float:
        """Per-probe count noise: N(0, k f^2) with k = ceil(log2(ups/grid))."""
        if self.public:
            return 0.0
        return self.f * math.sqrt(self.n_doublings)


def clip(v: np.ndarray, s: float) -> np.ndarray:
    """v * min(1, s/||v||_2): direction preserved, norm capped at s.

    Inputs already inside the ball are returned unchanged (same values, no
    rescaling round-off), which keeps noise-off trainer runs bit-identical
    to their non-private counterparts.
    """
    if not s > 0:
        raise ValueError("clipping norm must be positive")
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm <= s:
        return v.copy()
    return v * (s / norm)


def residual_magnitudes(data: Dataset, w: np.ndarray) -> np.ndarray:
    """|relu(<x_j, w>) - y_j| over the estimating set."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape[0] != data.d:
        raise ValueError("dimension mismatch between model and estimating set")
    return np.abs(relu(data.x @ w) - data.y)


def count_within(data: Dataset, w: np.ndarray, s: float) -> int:
    """Number of estimating examples with residual magnitude <= s."""
    return int(np.count_nonzero(residual_magnitudes(data, w) <= s))


def search_on_residuals(
    residuals: np.ndarray,
    params: ThresholdParams,
    noise: np.ndarray | None = None,
) -> float:
    """Deterministic core of the doubling search on precomputed residuals.

    ``noise`` holds one standardized draw per grid point (ignored in public
    mode); passing them in makes the search a pure function, which both the
    pure-numpy and the jitted trainers rely on.
    """
    m = residuals.shape[0]
    if m == 0:
        raise ValueError("estimating set must be nonempty")
    grid = params.grid()
    std = params.count_noise_std
    if std > 0.0 and noise is None:
        raise ValueError("private mode needs one noise draw per grid point")
    for i, s in enumerate(grid):
        u = float(np.count_nonzero(residuals <= s))
        if not params.public and std > 0.0:
            u = u + std * float(noise[i])
        if u >= m:
            return float(s)
    return float(grid[-1])


def dp_threshold(data: Dataset, w: np.ndarray, params: ThresholdParams, rng=None) -> float:
    """Threshold from the doubling search over the estimating set.

    Private mode adds N(0, k f^2) to every count, drawing one noise value
    per grid point up front so rng consumption never depends on where the
    search stops.
    """
    residuals = residual_magnitudes(data, w)
    noise = None
    if not params.public:
        if rng is None:
            raise ValueError("private mode needs an rng")
        noise = rng.standard_normal(params.n_doublings + 1)
    return search_on_residuals(residuals, params, noise)


@dataclass(frozen=True)
class ClipScale:
    """A gradient-clipping norm s together with the raw search output gamma."""

    s: float
    gamma: float


def make_clip_scale(
    gamma: float, alpha: float, trace_h: float, c2: float, a: float, n: int
) -> ClipScale:
    """s = sqrt(2 alpha tr(H)) * C2 * (ln n)^{2a} * gamma.

    Converts a residual-magnitude threshold into a gradient-norm cap via
    the high-probability design-norm bound.
    """
    if gamma <= 0 or alpha <= 0 or trace_h <= 0 or c2 <= 0 or n < 2:
        raise ValueError("all clip-scale inputs must be positive (n >= 2)")
    if a < 0:
        raise ValueError("a must be >= 0")
    s = math.sqrt(2.0 * alpha * trace_h) * c2 * math.log(n) ** (2.0 * a) * gamma
    return ClipScale(s=s, gamma=gamma)


def threshold_lambda(f: float, upsilon: float, delta_grid: float, b_x: float) -> float:
    """Count slack Lambda = f sqrt(2 log(ups/grid) log(log(ups/grid)/b_x))
    from the search's utility guarantee."""
    ratio = math.log(upsilon / delta_grid)
    if ratio <= 0:
        return 0.0
    return f * math.sqrt(2.0 * ratio * math.log(ratio / b_x))


def threshold_defaults_from_ground_truth(
    gt, n: int, alpha: float = 3.0, c2: float = 2.0, a: float = 0.5
) -> ThresholdParams:
    """Synthetic-run defaults: upsilon = C2 R_x (||w*||_H + sigma) log^{2a} n,
    delta_grid = (||w*||_H + sigma) / n^2."""
    from .datagen import r_x_squared
    from .model import param_error_h

    scale = math.sqrt(param_error_h(gt.w_star, np.zeros(gt.d), gt.cov)) + gt.sigma
    if scale == 0.0:
        scale = 1.0
    r_x = math.sqrt(r_x_squared(alpha, gt.cov.trace(), a, 1.0 / n))
    upsilon = c2 * r_x * scale * math.log(n) ** (2.0 * a)
    delta_grid = scale / n**2
    return ThresholdParams(upsilon=upsilon, delta_grid=delta_grid)


def threshold_defaults_from_data(data: Dataset, grid_levels: int = 16) -> ThresholdParams:
    """Real-data defaults: upsilon = 4 * max residual at w0 = 0, a 2^16 grid."""
    max_resid = float(np.max(np.abs(data.y)))
    if max_resid == 0.0:
        max_resid = 1.0
    upsilon = 4.0 * max_resid
    return ThresholdParams(upsilon=upsilon, delta_grid=upsilon / 2.0**grid_levels)

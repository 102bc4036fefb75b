"""Pure-numpy training loops.

These are the fallback implementations of the hot per-step chains; the
numba module mirrors them loop for loop.  All randomness (noise for the
model update and for the private counts) is pregenerated and passed in as
standardized draws, so a path is a deterministic function of its inputs
and both backends consume the same draws at the same step indices.
"""

from __future__ import annotations

import numpy as np


def _search(resid: np.ndarray, grid: np.ndarray, count_noise_std: float, noise_row) -> float:
    """Doubling search on residual magnitudes; returns a grid value."""
    m = resid.shape[0]
    for i in range(grid.shape[0]):
        u = float(np.count_nonzero(resid <= grid[i]))
        if count_noise_std > 0.0:
            u = u + count_noise_std * float(noise_row[i])
        if u >= m:
            return float(grid[i])
    return float(grid[-1])


def glmtron_path(X, y, eta, w0, use_indicator):
    """Unclipped, noiseless per-sample chain; returns iterates (n+1, d)."""
    n, d = X.shape
    iterates = np.empty((n + 1, d))
    w = w0.copy()
    iterates[0] = w
    for t in range(n):
        x = X[t]
        z = float(x @ w)
        pred = z if z > 0.0 else 0.0
        coeff = pred - y[t]
        if use_indicator and z <= 0.0:
            coeff = 0.0
        w = w - eta * (coeff * x)
        iterates[t + 1] = w
    return iterates


def dp_glmtron_path(X, y, x_pub, y_pub, grid, eta, f, noise_g, cache_thresholds, w0):
    """One-pass chain with a public threshold search before every update.

    Returns (iterates (n+1, d), thresholds (n,), clipped_count).
    """
    n, d = X.shape
    iterates = np.empty((n + 1, d))
    thresholds = np.empty(n)
    w = w0.copy()
    iterates[0] = w
    clipped = 0
    s_cached = -1.0
    for t in range(n):
        if cache_thresholds and s_cached > 0.0:
            s = s_cached
        else:
            resid = np.abs(np.maximum(x_pub @ w, 0.0) - y_pub)
            s = _search(resid, grid, 0.0, None)
            s_cached = s
        thresholds[t] = s
        x = X[t]
        z = float(x @ w)
        pred = z if z > 0.0 else 0.0
        g = (pred - y[t]) * x
        norm = float(np.linalg.norm(g))
        if norm > s:
            g = g * (s / norm)
            clipped += 1
        w = w - eta * (g + (2.0 * f * s) * noise_g[t])
        iterates[t + 1] = w
    return iterates, thresholds, clipped


def dp_minibatch_path(
    X,
    y,
    grid,
    eta,
    f,
    b,
    m,
    clip_mult,
    count_noise_std,
    noise_g,
    noise_u,
    use_indicator,
    w0,
):
    """Mini-batch chain over T = len(noise_g) disjoint blocks of size b + m.

    Per block: the first m samples drive the noisy threshold search, the
    remaining b supply averaged clipped pseudo-gradients.  Returns
    (iterates (T+1, d), thresholds (T,), gammas (T,), clipped, grads).
    """
    T = noise_g.shape[0]
    d = X.shape[1]
    iterates = np.empty((T + 1, d))
    thresholds = np.empty(T)
    gammas = np.empty(T)
    w = w0.copy()
    iterates[0] = w
    clipped = 0
    for t in range(T):
        tau = t * (b + m)
        xe = X[tau : tau + m]
        ye = y[tau : tau + m]
        resid = np.abs(np.maximum(xe @ w, 0.0) - ye)
        gamma = _search(resid, grid, count_noise_std, noise_u[t])
        s = clip_mult * gamma
        gammas[t] = gamma
        thresholds[t] = s
        xb = X[tau + m : tau + m + b]
        yb = y[tau + m : tau + m + b]
        z = xb @ w
        coeff = np.maximum(z, 0.0) - yb
        if use_indicator:
            coeff = coeff * (z > 0.0)
        grads = xb * coeff[:, None]
        norms = np.sqrt(np.sum(grads * grads, axis=1))
        over = norms > s
        if np.any(over):
            grads = np.where(over[:, None], grads * (s / np.where(over, norms, 1.0))[:, None], grads)
            clipped += int(np.count_nonzero(over))
        avg = np.sum(grads, axis=0) / b
        w = w - eta * avg - (2.0 * f * s * eta / b) * noise_g[t]
        iterates[t + 1] = w
    return iterates, thresholds, gammas, clipped, T * b

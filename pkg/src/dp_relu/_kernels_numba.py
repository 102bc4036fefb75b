"""Numba-jitted training loops, mirroring ``_kernels_numpy`` loop for loop.

Compiled with fastmath off so the float semantics match IEEE evaluation
order; results agree with the numpy backend to rounding (the two backends
may differ in the last ulp because BLAS dot products and manual loops can
round differently).  ``cache=True`` keeps compilation a one-time cost.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True, fastmath=False)


@njit(**_JIT)
def _dot(a, b):
    acc = 0.0
    for i in range(a.shape[0]):
        acc += a[i] * b[i]
    return acc


@njit(**_JIT)
def _search(resid, grid, count_noise_std, noise_row):
    m = resid.shape[0]
    for i in range(grid.shape[0]):
        u = 0.0
        for j in range(m):
            if resid[j] <= grid[i]:
                u += 1.0
        if count_noise_std > 0.0:
            u = u + count_noise_std * noise_row[i]
        if u >= m:
            return grid[i]
    return grid[-1]


@njit(**_JIT)
def glmtron_path(X, y, eta, w0, use_indicator):
    n, d = X.shape
    iterates = np.empty((n + 1, d))
    w = w0.copy()
    for j in range(d):
        iterates[0, j] = w[j]
    for t in range(n):
        z = _dot(X[t], w)
        pred = z if z > 0.0 else 0.0
        coeff = pred - y[t]
        if use_indicator and z <= 0.0:
            coeff = 0.0
        for j in range(d):
            w[j] = w[j] - eta * (coeff * X[t, j])
            iterates[t + 1, j] = w[j]
    return iterates


@njit(**_JIT)
def _public_residuals(x_pub, y_pub, w, out):
    for i in range(x_pub.shape[0]):
        z = _dot(x_pub[i], w)
        pred = z if z > 0.0 else 0.0
        out[i] = abs(pred - y_pub[i])


@njit(**_JIT)
def dp_glmtron_path(X, y, x_pub, y_pub, grid, eta, f, noise_g, cache_thresholds, w0):
    n, d = X.shape
    iterates = np.empty((n + 1, d))
    thresholds = np.empty(n)
    w = w0.copy()
    for j in range(d):
        iterates[0, j] = w[j]
    resid = np.empty(x_pub.shape[0])
    clipped = 0
    s_cached = -1.0
    empty = np.empty(0)
    for t in range(n):
        if cache_thresholds and s_cached > 0.0:
            s = s_cached
        else:
            _public_residuals(x_pub, y_pub, w, resid)
            s = _search(resid, grid, 0.0, empty)
            s_cached = s
        thresholds[t] = s
        z = _dot(X[t], w)
        pred = z if z > 0.0 else 0.0
        coeff = pred - y[t]
        sq = 0.0
        for j in range(d):
            gj = coeff * X[t, j]
            sq += gj * gj
        norm = np.sqrt(sq)
        scale = 1.0
        if norm > s:
            scale = s / norm
            clipped += 1
        for j in range(d):
            g = coeff * X[t, j] * scale
            w[j] = w[j] - eta * (g + (2.0 * f * s) * noise_g[t, j])
            iterates[t + 1, j] = w[j]
    return iterates, thresholds, clipped


@njit(**_JIT)
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
    T = noise_g.shape[0]
    d = X.shape[1]
    iterates = np.empty((T + 1, d))
    thresholds = np.empty(T)
    gammas = np.empty(T)
    w = w0.copy()
    for j in range(d):
        iterates[0, j] = w[j]
    resid = np.empty(m)
    avg = np.empty(d)
    clipped = 0
    for t in range(T):
        tau = t * (b + m)
        for i in range(m):
            z = _dot(X[tau + i], w)
            pred = z if z > 0.0 else 0.0
            resid[i] = abs(pred - y[tau + i])
        gamma = _search(resid, grid, count_noise_std, noise_u[t])
        s = clip_mult * gamma
        gammas[t] = gamma
        thresholds[t] = s
        for j in range(d):
            avg[j] = 0.0
        for i in range(b):
            row = tau + m + i
            z = _dot(X[row], w)
            pred = z if z > 0.0 else 0.0
            coeff = pred - y[row]
            if use_indicator and z <= 0.0:
                coeff = 0.0
            sq = 0.0
            for j in range(d):
                gj = coeff * X[row, j]
                sq += gj * gj
            norm = np.sqrt(sq)
            scale = 1.0
            if norm > s:
                scale = s / norm
                clipped += 1
            for j in range(d):
                avg[j] += coeff * X[row, j] * scale
        for j in range(d):
            w[j] = w[j] - eta * (avg[j] / b) - (2.0 * f * s * eta / b) * noise_g[t, j]
            iterates[t + 1, j] = w[j]
    return iterates, thresholds, gammas, clipped, T * b


def warmup():
    """Trigger compilation of every kernel on tiny inputs."""
    X = np.ones((4, 2))
    y = np.ones(4)
    glmtron_path(X, y, 0.1, np.zeros(2), False)
    dp_glmtron_path(
        X, y, X, y, np.array([1.0, 2.0]), 0.1, 0.0, np.zeros((4, 2)), False, np.zeros(2)
    )
    dp_minibatch_path(
        X,
        y,
        np.array([1.0, 2.0]),
        0.1,
        0.0,
        1,
        1,
        1.0,
        0.0,
        np.zeros((2, 2)),
        np.zeros((2, 2)),
        False,
        np.zeros(2),
    )

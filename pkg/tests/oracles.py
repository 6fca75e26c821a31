"""Independent reference computations used by the tests.

Nothing here imports siabf; each routine follows the defining formula
directly so it can check the library's faster paths.
"""
import cmath
import math

import numpy as np


def direct_dft(x):
    """All N complex DFT coefficients by direct O(N^2) summation."""
    x = [float(v) for v in x]
    n = len(x)
    out = []
    for w in range(n):
        acc = 0j
        for s, xs in enumerate(x):
            acc += xs * cmath.exp(-2j * math.pi * w * s / n)
        out.append(acc)
    return out


def direct_dft_vectorized(x):
    """Same summation as ``direct_dft`` with an explicit N x N kernel matrix."""
    x = np.asarray(x, dtype=float)
    n = x.size
    ws = np.outer(np.arange(n), np.arange(n))
    kernel = np.exp(-2j * np.pi * (ws % n) / n)
    return kernel @ x


def half_amplitudes(x):
    n = len(x)
    coeffs = direct_dft_vectorized(x)
    return np.abs(coeffs[: (n - 1) // 2 + 1])


def index_from_sorted(b, k=10):
    """Sum of the k largest consecutive drops over the first entry."""
    drops = sorted((b[i] - b[i + 1] for i in range(len(b) - 1)), reverse=True)
    return sum(drops[:k]) / b[0]


def lasso_objective(X, y, xi, lam):
    r = y - X @ xi
    return 0.5 * float(r @ r) / len(y) + lam * float(np.sum(np.abs(xi)))


def grid_search_scalar(theta, y, lam, lo=-2.0, hi=2.0, step=1e-5):
    """Minimize the one-column L1 objective over a dense grid."""
    grid = np.arange(lo, hi + step / 2, step)
    n = len(y)
    yy, ty, tt = y @ y, theta @ y, theta @ theta
    obj = 0.5 * (yy - 2 * grid * ty + grid ** 2 * tt) / n + lam * np.abs(grid)
    return grid[np.argmin(obj)]


def grid_search_2d(X, y, lam, box=3.0, coarse=0.01, fine=2.5e-4, window=0.05):
    """Two-column L1 objective minimized by a coarse grid then a fine local grid."""
    n = len(y)
    G = X.T @ X
    b = X.T @ y
    yy = y @ y

    def obj(a, c):
        quad = G[0, 0] * a * a + 2 * G[0, 1] * a * c + G[1, 1] * c * c
        return 0.5 * (yy - 2 * (b[0] * a + b[1] * c) + quad) / n + lam * (np.abs(a) + np.abs(c))

    g = np.arange(-box, box + coarse / 2, coarse)
    A, C = np.meshgrid(g, g, indexing="ij")
    k = np.unravel_index(np.argmin(obj(A, C)), A.shape)
    a0, c0 = g[k[0]], g[k[1]]
    fa = np.arange(a0 - window, a0 + window + fine / 2, fine)
    fc = np.arange(c0 - window, c0 + window + fine / 2, fine)
    A, C = np.meshgrid(fa, fc, indexing="ij")
    k = np.unravel_index(np.argmin(obj(A, C)), A.shape)
    return np.array([fa[k[0]], fc[k[1]]])


def basis_entry(label_kind, period, t, origin=0.0, trend_scale=1.0):
    """One dictionary entry from scalar math calls."""
    tau = t - origin
    if label_kind == "sin":
        return math.sin(2 * math.pi * tau / period)
    if label_kind == "cos":
        return math.cos(2 * math.pi * tau / period)
    if label_kind == "1":
        return 1.0
    if label_kind == "t":
        return tau / trend_scale
    raise ValueError(label_kind)


def four_tone(t, noise_sigma=0.0, rng=None):
    x = 5 * np.sin(t) + 3 * np.cos(2 * t) - 2.3 * np.sin(5 * t) + 1.2 * np.cos(7 * t)
    if noise_sigma:
        x = x + noise_sigma * rng.standard_normal(np.shape(t))
    return x

"""Kernel dispatch: compiled coordinate descent when the extension is built,
otherwise the pure-Python loop below.

Set ``SIABF_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

try:
    from ._cd import coordinate_descent as _cd_compiled
except ImportError:  # extension not built
    _cd_compiled = None

if _cd_compiled is not None and not os.environ.get("SIABF_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"


def coordinate_descent_py(X, y, lam, xi, max_iter, tol):
    """Same contract as the compiled kernel: ``xi`` is updated in place."""
    n, p = X.shape
    inv_n = 1.0 / n
    r = y - X @ xi
    col_sq = np.einsum("ij,ij->j", X, X) * inv_n
    history = [0.5 * (r @ r) * inv_n + lam * np.abs(xi).sum()]
    converged = False
    sweeps = 0
    for sweep in range(max_iter):
        change = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                new = 0.0
            else:
                rho = (X[:, j] @ r) * inv_n + col_sq[j] * xi[j]
                new = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[j]
            delta = new - xi[j]
            if delta != 0.0:
                r -= X[:, j] * delta
                xi[j] = new
                change = max(change, abs(delta))
        sweeps = sweep + 1
        history.append(0.5 * (r @ r) * inv_n + lam * np.abs(xi).sum())
        if change < tol:
            converged = True
            break
    return sweeps, converged, np.array(history)


def coordinate_descent(X, y, lam, xi, max_iter, tol, backend=None):
    backend = backend or BACKEND
    if backend == "cython":
        if _cd_compiled is None:
            raise RuntimeError("compiled kernel not available; build the extension")
        Xf = np.asfortranarray(X, dtype=float)
        return _cd_compiled(Xf, np.ascontiguousarray(y, dtype=float), float(lam), xi, int(max_iter), float(tol))
    if backend == "python":
        return coordinate_descent_py(np.asarray(X, dtype=float), np.asarray(y, dtype=float), lam, xi, max_iter, tol)
    raise ValueError(f"unknown backend {backend!r}")

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cyclic coordinate descent for the L1-penalized least squares
objective ``(1/2n) ||y - X xi||^2 + lam ||xi||_1``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from scipy.linalg.cython_blas cimport daxpy, ddot

cnp.import_array()


cdef inline double _soft(double z, double t) nogil:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def coordinate_descent(const double[::1, :] X, const double[::1] y, double lam,
                       double[::1] xi, int max_iter, double tol):
    """Update ``xi`` in place. Returns ``(sweeps, converged, objectives)``.

    ``objectives[k]`` is the objective after sweep ``k``; ``objectives[0]``
    is the value at the starting point.
    """
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1]
    cdef Py_ssize_t i, j
    cdef int n_int = <int>n, one = 1
    cdef double step
    cdef int sweep, sweeps = 0
    cdef bint converged = False
    cdef double inv_n = 1.0 / n
    cdef double rho, new, delta, change, acc, pen
    cdef double[::1] r = np.empty(n)
    cdef double[::1] col_sq = np.empty(p)
    history = np.empty(max_iter + 1)
    cdef double[::1] hist = history

    with nogil:
        for i in range(n):
            r[i] = y[i]
        for j in range(p):
            acc = 0.0
            for i in range(n):
                acc = acc + X[i, j] * X[i, j]
            col_sq[j] = acc * inv_n
            if xi[j] != 0.0:
                for i in range(n):
                    r[i] = r[i] - X[i, j] * xi[j]
        acc = 0.0
        for i in range(n):
            acc = acc + r[i] * r[i]
        pen = 0.0
        for j in range(p):
            pen = pen + fabs(xi[j])
        hist[0] = 0.5 * acc * inv_n + lam * pen

        for sweep in range(max_iter):
            change = 0.0
            for j in range(p):
                if col_sq[j] == 0.0:
                    new = 0.0
                else:
                    acc = ddot(&n_int, <double*>&X[0, j], &one, &r[0], &one)
                    rho = acc * inv_n + col_sq[j] * xi[j]
                    new = _soft(rho, lam) / col_sq[j]
                delta = new - xi[j]
                if delta != 0.0:
                    step = -delta
                    daxpy(&n_int, &step, <double*>&X[0, j], &one, &r[0], &one)
                    xi[j] = new
                    if fabs(delta) > change:
                        change = fabs(delta)
            acc = 0.0
            for i in range(n):
                acc = acc + r[i] * r[i]
            pen = 0.0
            for j in range(p):
                pen = pen + fabs(xi[j])
            sweeps = sweep + 1
            hist[sweeps] = 0.5 * acc * inv_n + lam * pen
            if change < tol:
                converged = True
                break

    return sweeps, bool(converged), history[:sweeps + 1].copy()

"""Sparse coefficient estimation over a design matrix.

Two solvers are provided:

* ``L1CoordinateDescent`` minimizes ``(1/2n) ||y - X xi||^2 + lam ||xi||_1``
  by cyclic coordinate descent with soft-threshold updates.
* ``ThresholdedLeastSquares`` alternates least squares on the active set with
  zeroing of coefficients whose magnitude is at most ``threshold_eps``.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .basis import DesignMatrix
from .errors import ConvergenceWarning, DimensionMismatch, InsufficientData

L1 = "L1CoordinateDescent"
STLSQ = "ThresholdedLeastSquares"
SOLVER_ALIASES = {"l1": L1, "lasso": L1, L1: L1, "stlsq": STLSQ, STLSQ: STLSQ}


@dataclass(frozen=True)
class FitConfig:
    """Solver settings.

    ``refit_support`` replaces the L1 coefficients by an ordinary least
    squares fit restricted to the columns the L1 solver kept (removes the
    shrinkage bias; off by default).
    """

    lam: float = 5e-4
    threshold_eps: float = 1e-2
    max_iterations: int = 10_000
    convergence_tol: float = 1e-8
    cv_grid: Tuple[float, ...] = ()
    cv_holdout_fraction: float = 0.2
    refit_support: bool = False

    def __post_init__(self):
        object.__setattr__(self, "cv_grid", tuple(float(v) for v in self.cv_grid))
        if self.lam < 0 or self.threshold_eps < 0:
            raise ValueError("lam and threshold_eps must be non-negative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if any(v < 0 for v in self.cv_grid):
            raise ValueError("cv_grid values must be non-negative")
        if not 0 < self.cv_holdout_fraction <= 0.5:
            raise ValueError("cv_holdout_fraction must be in (0, 0.5]")


@dataclass
class SparseCoefficients:
    xi: np.ndarray
    lambda_used: float
    solver_id: str
    converged: bool = True
    n_sweeps: int = 0
    underdetermined: bool = False
    singular: bool = False
    refit: bool = False
    objective_history: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.xi))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.xi)

    def to_dict(self) -> dict:
        return {
            "xi": [float(v) for v in self.xi],
            "lambda_used": float(self.lambda_used),
            "solver_id": self.solver_id,
            "converged": bool(self.converged),
            "n_sweeps": int(self.n_sweeps),
            "underdetermined": bool(self.underdetermined),
            "singular": bool(self.singular),
            "refit": bool(self.refit),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SparseCoefficients":
        return cls(
            xi=np.array(data["xi"], dtype=float),
            lambda_used=float(data["lambda_used"]),
            solver_id=str(data["solver_id"]),
            converged=bool(data["converged"]),
            n_sweeps=int(data["n_sweeps"]),
            underdetermined=bool(data["underdetermined"]),
            singular=bool(data["singular"]),
            refit=bool(data["refit"]),
        )


def _check(design, target):
    X = design.entries if isinstance(design, DesignMatrix) else np.asarray(design, dtype=float)
    y = np.asarray(target, dtype=float).ravel()
    if X.ndim != 2:
        raise DimensionMismatch(f"design must be 2-D, got shape {X.shape}")
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"design has {X.shape[0]} rows but target has {y.size} entries")
    if not np.all(np.isfinite(y)):
        raise ValueError("target must be finite")
    if not np.all(np.isfinite(X)):
        raise ValueError("design must be finite")
    return X, y


def _restricted_lstsq(X, y, active):
    """Least squares on the ``active`` columns; returns (xi, rank_deficient)."""
    xi = np.zeros(X.shape[1])
    if not active.any():
        return xi, False
    sub = X[:, active]
    coef, _, rank, _ = np.linalg.lstsq(sub, y, rcond=None)
    xi[active] = coef
    return xi, rank < sub.shape[1]


def lasso_objective(X, y, xi, lam) -> float:
    r = y - X @ xi
    return 0.5 * float(r @ r) / y.size + lam * float(np.abs(xi).sum())


def kkt_violation(X, y, xi, lam) -> float:
    """Largest violation of the subgradient optimality conditions."""
    X = np.asarray(X, dtype=float)
    grad = X.T @ (y - X @ xi) / y.size
    active = xi != 0
    v_active = np.abs(grad[active] - lam * np.sign(xi[active]))
    v_zero = np.maximum(np.abs(grad[~active]) - lam, 0.0)
    return float(max(v_active.max(initial=0.0), v_zero.max(initial=0.0)))


def fit_l1(design, target, config: FitConfig = FitConfig(), backend: Optional[str] = None) -> SparseCoefficients:
    X, y = _check(design, target)
    n, p = X.shape
    xi = np.zeros(p)
    sweeps, converged, history = _kernels.coordinate_descent(
        X, y, config.lam, xi, config.max_iterations, config.convergence_tol, backend=backend
    )
    if not converged:
        warnings.warn(
            f"coordinate descent stopped after {sweeps} sweeps without reaching tol={config.convergence_tol}",
            ConvergenceWarning,
            stacklevel=2,
        )
    result = SparseCoefficients(
        xi=xi,
        lambda_used=config.lam,
        solver_id=L1,
        converged=converged,
        n_sweeps=sweeps,
        underdetermined=n < p,
        objective_history=history,
    )
    if config.refit_support:
        result.xi, result.singular = _restricted_lstsq(X, y, xi != 0)
        result.refit = True
    return result


def fit_stlsq(design, target, config: FitConfig = FitConfig()) -> SparseCoefficients:
    X, y = _check(design, target)
    n, p = X.shape
    eps = config.threshold_eps
    active = np.ones(p, dtype=bool)
    xi, singular = _restricted_lstsq(X, y, active)
    sweeps = 0
    for _ in range(config.max_iterations):
        keep = active & (np.abs(xi) > eps)
        sweeps += 1
        if np.array_equal(keep, active):
            break
        active = keep
        xi, singular = _restricted_lstsq(X, y, active)
    if singular:
        warnings.warn("rank-deficient active set; using the minimum-norm solution", stacklevel=2)
    return SparseCoefficients(
        xi=xi,
        lambda_used=eps,
        solver_id=STLSQ,
        n_sweeps=sweeps,
        underdetermined=n < p,
        singular=singular,
    )


def fit_coefficients(design, target, config: FitConfig, solver: str = L1) -> SparseCoefficients:
    solver = SOLVER_ALIASES[solver]
    if solver == L1:
        return fit_l1(design, target, config)
    return fit_stlsq(design, target, config)


def cross_validate_lambda(
    design,
    target,
    config: FitConfig,
    grid: Optional[Sequence[float]] = None,
    n_jobs: int = 1,
):
    """Pick ``lam`` by holding out the final ``cv_holdout_fraction`` of rows.

    Returns ``(best_lambda, [(lam, holdout_rmse), ...])`` with the table in
    grid order. Ties go to the larger ``lam``.
    """
    X, y = _check(design, target)
    grid = tuple(config.cv_grid if grid is None else grid)
    if not grid:
        raise ValueError("cross-validation needs a non-empty lambda grid")
    n = y.size
    n_val = max(1, int(round(config.cv_holdout_fraction * n)))
    n_fit = n - n_val
    if n_fit < 1:
        raise InsufficientData(f"{n} rows cannot be split into fit and holdout parts")
    X_fit, y_fit, X_val, y_val = X[:n_fit], y[:n_fit], X[n_fit:], y[n_fit:]

    def score(lam):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            coef = fit_l1(X_fit, y_fit, replace(config, lam=lam))
        resid = y_val - X_val @ coef.xi
        rmse = math.sqrt(float(resid @ resid) / n_val)
        return rmse if math.isfinite(rmse) else math.inf

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            scores = list(pool.map(score, grid))
    else:
        scores = [score(lam) for lam in grid]
    table = list(zip(grid, scores))
    best_lam, best_rmse = None, math.inf
    for lam, rmse in sorted(table, key=lambda row: -row[0]):
        if best_lam is None or rmse < best_rmse:
            best_lam, best_rmse = lam, rmse
    return best_lam, table

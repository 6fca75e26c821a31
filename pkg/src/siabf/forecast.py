"""End-to-end fitting, algebraic forecasting and forecast metrics."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .basis import BasisSpec, build_spec, evaluate_offsets
from .errors import DegenerateSpectrum, LengthMismatch, ModelFileError
from .solver import L1, SOLVER_ALIASES, FitConfig, SparseCoefficients, cross_validate_lambda, fit_coefficients
from .spectrum import DEFAULT_Q, AdaptivePeriods, analyze, classify_suitability, refine_periods
from .timeseries import StandardizationStats, TimeSeries, destandardize, interpolate_gaps, standardize

MODEL_FORMAT = "siabf-model"
MODEL_FORMAT_VERSION = 1
DEFAULT_MAPE_EPS = 1e-8


@dataclass
class SparseModel:
    spec: BasisSpec
    coefficients: SparseCoefficients
    stats: StandardizationStats
    training_start: float
    n_train: int
    sample_interval: float
    Q: int
    quasi_periodic_index: Optional[float] = None
    suitability: Optional[str] = None
    periods: Optional[AdaptivePeriods] = None
    cv_table: list = field(default_factory=list)

    def __post_init__(self):
        if self.coefficients.xi.size != self.spec.n_columns:
            raise ValueError("coefficient count does not match the basis")
        if not self.sample_interval > 0 or self.n_train < 2:
            raise ValueError("model needs a positive interval and at least 2 training samples")

    @property
    def training_end(self) -> float:
        return self.training_start + (self.n_train - 1) * self.sample_interval

    def active_terms(self):
        """``(label, coefficient)`` for every nonzero coefficient, in column order."""
        return [(self.spec.column_labels[j], float(self.coefficients.xi[j])) for j in self.coefficients.support]

    def active_periods(self) -> list:
        periods = {self.spec.column_period(j) for j in self.coefficients.support}
        return sorted(T for T in periods if T is not None)

    def amplitude(self, period: float) -> float:
        """Amplitude of the fitted sinusoid at ``period`` in signal units."""
        q = self.spec.fourier_periods.index(period)
        a, b = self.coefficients.xi[2 * q: 2 * q + 2]
        return float(math.hypot(a, b) * self.stats.std)

    # serialization

    def to_dict(self) -> dict:
        out = {
            "format": MODEL_FORMAT,
            "format_version": MODEL_FORMAT_VERSION,
            "library_version": __version__,
            "spec": self.spec.to_dict(),
            "coefficients": self.coefficients.to_dict(),
            "stats": self.stats.to_dict(),
            "training_span": [self.training_start, self.training_end],
            "n_train": self.n_train,
            "sample_interval": self.sample_interval,
            "Q": self.Q,
            "quasi_periodic_index": self.quasi_periodic_index,
            "suitability": self.suitability,
            "terms": [{"label": lab, "coefficient": c} for lab, c in self.active_terms()],
        }
        if self.periods is not None:
            out["adaptive_periods"] = self.periods.to_dict()
        if self.cv_table:
            out["cv_table"] = [{"lambda": lam, "holdout_rmse": rmse} for lam, rmse in self.cv_table]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SparseModel":
        try:
            if data.get("format") != MODEL_FORMAT:
                raise ModelFileError(f"not a model file (format={data.get('format')!r})")
            if data.get("format_version") != MODEL_FORMAT_VERSION:
                raise ModelFileError(f"unsupported format_version {data.get('format_version')!r}")
            coefficients = SparseCoefficients.from_dict(data["coefficients"])
            spec = BasisSpec.from_dict(data["spec"])
            stats = StandardizationStats(float(data["stats"]["mean"]), float(data["stats"]["std"]))
            if not stats.std > 0 or not math.isfinite(stats.mean):
                raise ModelFileError("invalid standardization stats")
            if not np.all(np.isfinite(coefficients.xi)):
                raise ModelFileError("non-finite coefficients")
            if coefficients.solver_id not in SOLVER_ALIASES:
                raise ModelFileError(f"unknown solver {coefficients.solver_id!r}")
            start, end = (float(v) for v in data["training_span"])
            model = cls(
                spec=spec,
                coefficients=coefficients,
                stats=stats,
                training_start=start,
                n_train=int(data["n_train"]),
                sample_interval=float(data["sample_interval"]),
                Q=int(data["Q"]),
                quasi_periodic_index=data.get("quasi_periodic_index"),
                suitability=data.get("suitability"),
                cv_table=[(row["lambda"], row["holdout_rmse"]) for row in data.get("cv_table", [])],
            )
            if not math.isclose(model.training_end, end, rel_tol=1e-9, abs_tol=1e-9):
                raise ModelFileError("training_span inconsistent with n_train and sample_interval")
            return model
        except ModelFileError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ModelFileError(f"model file failed validation: {exc!r}") from None


def save_model(model: SparseModel, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_model(path: Union[str, Path]) -> SparseModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"{path}: cannot read model file ({exc})") from None
    if not isinstance(data, dict):
        raise ModelFileError(f"{path}: top level must be an object")
    return SparseModel.from_dict(data)


def fit(
    series: TimeSeries,
    Q: int = DEFAULT_Q,
    config: FitConfig = FitConfig(),
    solver: str = L1,
    include_intercept: bool = True,
    trend_degree: int = 0,
    refine: bool = True,
    alpha: Optional[float] = 1e-3,
) -> SparseModel:
    """Fit a sparse Fourier model to ``series``.

    Steps: fill gaps, standardize, take the amplitude spectrum and its
    quasi-periodic index, pick ``Q`` adaptive periods (sub-bin refined unless
    ``refine=False``, in which case raw DFT bin periods are used; ``alpha``
    is the significance level that ends refined extraction), build the
    dictionary on the training clock and solve for sparse coefficients. When
    ``config.cv_grid`` is set, ``lam`` is chosen by time-ordered holdout.
    """
    solver = SOLVER_ALIASES[solver]
    series = interpolate_gaps(series)
    z, stats = standardize(series)
    report, bin_periods = analyze(z, Q)
    index = report.quasi_periodic_index
    if refine:
        try:
            periods = refine_periods(z, Q, alpha=alpha)
        except DegenerateSpectrum:
            periods = bin_periods
    else:
        periods = bin_periods

    n, d = len(series), series.sample_interval
    spec = build_spec(
        periods,
        include_intercept=include_intercept,
        trend_degree=trend_degree,
        time_origin=series.start_time,
        trend_scale=(n - 1) * d,
    )
    design = evaluate_offsets(spec, np.arange(n) * d)
    y = np.asarray(z.values)

    cv_table = []
    if config.cv_grid:
        if solver != L1:
            raise ValueError("lambda cross-validation applies to the L1 solver only")
        best, cv_table = cross_validate_lambda(design, y, config)
        config = replace(config, lam=best)
    coefficients = fit_coefficients(design, y, config, solver)

    return SparseModel(
        spec=spec,
        coefficients=coefficients,
        stats=stats,
        training_start=series.start_time,
        n_train=n,
        sample_interval=d,
        Q=Q,
        quasi_periodic_index=index,
        suitability=classify_suitability(index).value if index is not None else None,
        periods=periods,
        cv_table=cv_table,
    )


def _steps(model: SparseModel, horizon_steps: int, start_step: int) -> np.ndarray:
    if horizon_steps < 1:
        raise ValueError("horizon_steps must be >= 1")
    if start_step < 1:
        raise ValueError("start_step must be >= 1")
    return np.arange(start_step, start_step + horizon_steps)


def prediction_times(model: SparseModel, horizon_steps: int, start_step: int = 1) -> np.ndarray:
    k = _steps(model, horizon_steps, start_step)
    return model.training_start + (model.n_train - 1 + k) * model.sample_interval


def predict(model: SparseModel, horizon_steps: int, start_step: int = 1) -> np.ndarray:
    """Forecast the samples ``start_step .. start_step + horizon_steps - 1``
    after the end of training.

    Each value is the basis evaluated at that instant times the
    coefficients; no observed or previously predicted value is used, so the
    result for step ``k`` is the same however the horizon is split.
    """
    k = _steps(model, horizon_steps, start_step)
    offsets = (model.n_train - 1 + k) * model.sample_interval
    theta = evaluate_offsets(model.spec, offsets)
    z = np.zeros(k.size)
    # column-by-column accumulation keeps every element's arithmetic identical
    for j in model.coefficients.support:
        z = z + model.coefficients.xi[j] * theta[:, j]
    out = destandardize(z, model.stats)
    if not np.all(np.isfinite(out)):
        warnings.warn("non-finite predictions (overflow on an extreme horizon?)", RuntimeWarning, stacklevel=2)
    return out


def fitted_values(model: SparseModel) -> np.ndarray:
    """In-sample reconstruction on the training grid."""
    offsets = np.arange(model.n_train) * model.sample_interval
    theta = evaluate_offsets(model.spec, offsets)
    z = np.zeros(model.n_train)
    for j in model.coefficients.support:
        z = z + model.coefficients.xi[j] * theta[:, j]
    return destandardize(z, model.stats)


@dataclass(frozen=True)
class EvaluationReport:
    """Forecast accuracy. ``r2`` is None when the truth is constant."""

    rmse: float
    mae: float
    r2: Optional[float]
    mape_median: float
    elapsed_seconds: float = 0.0

    @property
    def r2_defined(self) -> bool:
        return self.r2 is not None

    def to_dict(self) -> dict:
        return {
            "rmse": self.rmse,
            "mae": self.mae,
            "r2": self.r2,
            "r2_defined": self.r2_defined,
            "mape_median": self.mape_median,
            "elapsed_seconds": self.elapsed_seconds,
        }

    def summary(self) -> str:
        r2 = f"{self.r2:.6g}" if self.r2 is not None else "undefined"
        return (
            f"RMSE={self.rmse:.6g} MAE={self.mae:.6g} R2={r2} "
            f"MAPE(median)={self.mape_median:.6g}% elapsed={self.elapsed_seconds:.3f}s"
        )


def evaluate(
    predictions: Sequence[float],
    truth: Sequence[float],
    epsilon: float = DEFAULT_MAPE_EPS,
    elapsed_seconds: float = 0.0,
) -> EvaluationReport:
    """RMSE, MAE, R^2 and the median absolute percentage error.

    The percentage error of each sample is ``|y - yhat| / (|y| + epsilon)``,
    reported as a percentage; ``epsilon`` keeps near-zero truths from
    dominating.
    """
    yhat = np.asarray(predictions, dtype=float).ravel()
    y = np.asarray(truth, dtype=float).ravel()
    if yhat.size != y.size:
        raise LengthMismatch(f"{yhat.size} predictions vs {y.size} truth values")
    if y.size < 1:
        raise LengthMismatch("need at least one value")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    resid = y - yhat
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    mae = float(np.mean(np.abs(resid)))
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = None
    mape = float(np.median(np.abs(resid) / (np.abs(y) + epsilon)) * 100.0)
    return EvaluationReport(rmse, mae, r2, mape, float(elapsed_seconds))

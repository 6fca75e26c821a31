"""Robustness check: refit on training data with deleted and perturbed
samples and compare forecast accuracy against the clean fit."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InsufficientData
from .forecast import DEFAULT_MAPE_EPS, EvaluationReport, evaluate, fit, predict, prediction_times
from .solver import L1, FitConfig
from .spectrum import DEFAULT_Q
from .timeseries import TimeSeries, interpolate_gaps

RMSE_DEGRADATION_BOUND = 0.10
METRICS = ("rmse", "mae", "r2", "mape_median")


@dataclass(frozen=True)
class CorruptionConfig:
    deletion_fraction: float = 0.05
    noise_scale: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.deletion_fraction <= 0.5:
            raise ValueError("deletion_fraction must be in [0, 0.5]")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")


def deletion_indices(n: int, config: CorruptionConfig, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Sorted interior indices to delete (never the first or last sample)."""
    rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
    k = min(int(np.floor(n * config.deletion_fraction)), max(n - 2, 0))
    if k == 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(rng.choice(np.arange(1, n - 1), size=k, replace=False))


def corrupt(series: TimeSeries, config: CorruptionConfig) -> TimeSeries:
    """Delete random interior samples, interpolate them back, then add
    uniform noise on ``[-a, a]`` with ``a = noise_scale * std(series)``."""
    if series.has_gaps:
        raise ValueError("corrupt expects a gap-free series")
    rng = np.random.default_rng(config.rng_seed)
    n = len(series)
    deleted = deletion_indices(n, config, rng)
    values = np.array(series.values)
    values[deleted] = np.nan
    filled = interpolate_gaps(TimeSeries(values, series.start_time, series.sample_interval))
    out = np.array(filled.values)
    if config.noise_scale > 0:
        a = config.noise_scale * float(np.std(series.values))
        out = out + rng.uniform(-a, a, size=n)
    return TimeSeries(out, series.start_time, series.sample_interval)


@dataclass
class RobustnessReport:
    control: EvaluationReport
    treated: EvaluationReport
    deltas: dict
    verdict: bool
    times: np.ndarray
    truth: np.ndarray
    control_predictions: np.ndarray
    treated_predictions: np.ndarray
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "control": self.control.to_dict(),
            "treated": self.treated.to_dict(),
            "deltas": self.deltas,
            "rmse_degradation_bound": RMSE_DEGRADATION_BOUND,
            "verdict": self.verdict,
        }


def _deltas(control: EvaluationReport, treated: EvaluationReport) -> dict:
    out = {}
    for name in METRICS:
        a, b = getattr(control, name), getattr(treated, name)
        out[name] = None if a is None or b is None else b - a
    return out


def _run(train: TimeSeries, horizon: int, Q, config, solver, fit_kwargs):
    t0 = time.perf_counter()
    model = fit(train, Q=Q, config=config, solver=solver, **fit_kwargs)
    pred = predict(model, horizon)
    return model, pred, time.perf_counter() - t0


def run_robustness(
    series: TimeSeries,
    train_fraction: float = 0.8,
    Q: int = DEFAULT_Q,
    config: FitConfig = FitConfig(),
    corruption: CorruptionConfig = CorruptionConfig(),
    solver: str = L1,
    mape_eps: float = DEFAULT_MAPE_EPS,
    **fit_kwargs,
) -> RobustnessReport:
    """Fit the clean and the corrupted training prefix, forecast the same
    test horizon with both and score them against the clean truth.

    The verdict is true when the corrupted fit's RMSE is at most 10% above
    the clean fit's.
    """
    series = interpolate_gaps(series)
    n = len(series)
    n_train = int(np.floor(n * train_fraction))
    if n_train < 2 or n - n_train < 2:
        raise InsufficientData(f"train fraction {train_fraction} of {n} samples leaves fewer than 2 on one side")
    train, test = series.head(n_train), series.tail(n_train)
    horizon = len(test)
    truth = np.asarray(test.values)

    treated_train = corrupt(train, corruption)
    control_model, control_pred, t_control = _run(train, horizon, Q, config, solver, fit_kwargs)
    _, treated_pred, t_treated = _run(treated_train, horizon, Q, config, solver, fit_kwargs)

    control = evaluate(control_pred, truth, mape_eps, t_control)
    treated = evaluate(treated_pred, truth, mape_eps, t_treated)
    return RobustnessReport(
        control=control,
        treated=treated,
        deltas=_deltas(control, treated),
        verdict=bool(treated.rmse <= control.rmse * (1.0 + RMSE_DEGRADATION_BOUND)),
        times=prediction_times(control_model, horizon),
        truth=truth,
        control_predictions=control_pred,
        treated_predictions=treated_pred,
        seed=corruption.rng_seed,
    )

"""Adaptive dictionary: Fourier pairs at the selected periods, an intercept
and an optional linear trend, evaluated over a time grid.

Column order is fixed: ``sin, cos`` for every period in rank order, then the
intercept, then the trend.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

from .errors import EmptySpec
from .spectrum import AdaptivePeriods

DUPLICATE_RTOL = 1e-12


def _fmt_period(T: float) -> str:
    return f"{T:.10g}"


@dataclass(frozen=True)
class BasisSpec:
    """Which columns the dictionary has and how time maps onto them.

    Fourier and trend columns are evaluated on ``t - time_origin``; the trend
    column is further divided by ``trend_scale`` (the training window length)
    so it runs from 0 to 1 over the training data.
    """

    fourier_periods: Tuple[float, ...] = ()
    include_intercept: bool = True
    trend_degree: int = 0
    time_origin: float = 0.0
    trend_scale: float = 1.0
    column_labels: Tuple[str, ...] = field(init=False)

    def __post_init__(self):
        periods = tuple(float(T) for T in self.fourier_periods)
        if any(not (np.isfinite(T) and T > 0) for T in periods):
            raise ValueError(f"periods must be finite and positive, got {periods}")
        if self.trend_degree not in (0, 1):
            raise ValueError(f"trend_degree must be 0 or 1, got {self.trend_degree}")
        if not (np.isfinite(self.trend_scale) and self.trend_scale > 0):
            raise ValueError("trend_scale must be positive")
        object.__setattr__(self, "fourier_periods", periods)
        labels = []
        for T in periods:
            labels += [f"sin T={_fmt_period(T)}", f"cos T={_fmt_period(T)}"]
        if self.include_intercept:
            labels.append("1")
        if self.trend_degree == 1:
            labels.append("t")
        if not labels:
            raise EmptySpec("basis has no columns: no periods, no intercept, no trend")
        object.__setattr__(self, "column_labels", tuple(labels))

    @property
    def n_columns(self) -> int:
        return len(self.column_labels)

    @property
    def intercept_index(self):
        return 2 * len(self.fourier_periods) if self.include_intercept else None

    @property
    def trend_index(self):
        return self.n_columns - 1 if self.trend_degree == 1 else None

    def column_period(self, j: int):
        """Period backing column ``j``, or None for intercept/trend."""
        if j < 2 * len(self.fourier_periods):
            return self.fourier_periods[j // 2]
        return None

    def to_dict(self) -> dict:
        return {
            "fourier_periods": list(self.fourier_periods),
            "include_intercept": self.include_intercept,
            "trend_degree": self.trend_degree,
            "time_origin": self.time_origin,
            "trend_scale": self.trend_scale,
            "column_labels": list(self.column_labels),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BasisSpec":
        spec = cls(
            fourier_periods=tuple(data["fourier_periods"]),
            include_intercept=bool(data["include_intercept"]),
            trend_degree=int(data["trend_degree"]),
            time_origin=float(data["time_origin"]),
            trend_scale=float(data["trend_scale"]),
        )
        if "column_labels" in data and list(data["column_labels"]) != list(spec.column_labels):
            raise ValueError("column_labels do not match the periods and flags")
        return spec


@dataclass(frozen=True)
class DesignMatrix:
    entries: np.ndarray
    time_grid: np.ndarray
    spec: BasisSpec

    @property
    def shape(self):
        return self.entries.shape


def _dedupe(periods: Sequence[float]) -> list:
    kept: list = []
    for T in periods:
        if not any(abs(T - U) <= DUPLICATE_RTOL * max(abs(T), abs(U)) for U in kept):
            kept.append(float(T))
    return kept


def build_spec(
    periods: Union[AdaptivePeriods, Sequence[float]] = (),
    include_intercept: bool = True,
    trend_degree: int = 0,
    time_origin: float = 0.0,
    trend_scale: float = 1.0,
) -> BasisSpec:
    """Register a sin/cos pair for every distinct period (strongest first)."""
    if isinstance(periods, AdaptivePeriods):
        periods = periods.periods
    return BasisSpec(
        fourier_periods=tuple(_dedupe(np.asarray(periods, dtype=float).ravel())),
        include_intercept=include_intercept,
        trend_degree=trend_degree,
        time_origin=time_origin,
        trend_scale=trend_scale,
    )


def evaluate_offsets(spec: BasisSpec, offsets) -> np.ndarray:
    """Design entries at times ``time_origin + offsets``."""
    tau = np.asarray(offsets, dtype=float).ravel()
    out = np.empty((tau.size, spec.n_columns))
    for q, T in enumerate(spec.fourier_periods):
        phase = (2.0 * np.pi / T) * tau
        out[:, 2 * q] = np.sin(phase)
        out[:, 2 * q + 1] = np.cos(phase)
    if spec.include_intercept:
        out[:, spec.intercept_index] = 1.0
    if spec.trend_degree == 1:
        out[:, spec.trend_index] = tau / spec.trend_scale
    return out


def evaluate(spec: BasisSpec, time_grid) -> DesignMatrix:
    grid = np.asarray(time_grid, dtype=float).ravel()
    if grid.size == 0 or not np.all(np.isfinite(grid)):
        raise ValueError("time grid must be non-empty and finite")
    return DesignMatrix(evaluate_offsets(spec, grid - spec.time_origin), grid, spec)

"""Uniformly sampled scalar series: CSV ingestion, gap filling, standardization."""
from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    BoundaryGap,
    MalformedFile,
    NonUniformSampling,
    TooShort,
    ZeroVariance,
)

SPACING_RTOL = 1e-6


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeries:
    """Scalar series sampled every ``sample_interval`` time units.

    Missing samples are stored as NaN in ``values`` and flagged in
    ``gap_mask``. Arrays are read-only after construction.
    """

    values: np.ndarray
    start_time: float = 0.0
    sample_interval: float = 1.0
    gap_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if values.size < 2:
            raise TooShort(f"series needs at least 2 samples, got {values.size}")
        if not (self.sample_interval > 0 and math.isfinite(self.sample_interval)):
            raise ValueError(f"sample_interval must be positive, got {self.sample_interval}")
        if self.gap_mask is None:
            mask = np.isnan(values)
        else:
            mask = np.array(self.gap_mask, dtype=bool, copy=True)
            if mask.shape != values.shape:
                raise ValueError("gap_mask must match values in length")
        if not np.all(np.isfinite(values[~mask])):
            raise ValueError("non-gap values must be finite")
        values = values.copy()
        values[mask] = np.nan
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "gap_mask", mask)
        object.__setattr__(self, "start_time", float(self.start_time))
        object.__setattr__(self, "sample_interval", float(self.sample_interval))

    def __len__(self) -> int:
        return self.values.size

    @property
    def has_gaps(self) -> bool:
        return bool(self.gap_mask.any())

    @property
    def end_time(self) -> float:
        return self.time_at(len(self) - 1)

    def time_at(self, index):
        return self.start_time + np.asarray(index, dtype=float) * self.sample_interval

    @property
    def times(self) -> np.ndarray:
        return self.time_at(np.arange(len(self)))

    def head(self, n: int) -> "TimeSeries":
        """First ``n`` samples as a new series."""
        return TimeSeries(self.values[:n], self.start_time, self.sample_interval, self.gap_mask[:n])

    def tail(self, start: int) -> "TimeSeries":
        return TimeSeries(
            self.values[start:], self.time_at(start).item(), self.sample_interval, self.gap_mask[start:]
        )

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(values, self.start_time, self.sample_interval)


@dataclass(frozen=True)
class StandardizationStats:
    mean: float
    std: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std}


def _parse_time(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        pass
    # ISO dates/datetimes are converted to fractional days since the epoch.
    stamp = datetime.fromisoformat(text.strip())
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.timestamp() / 86400.0


def _infer_grid(times: np.ndarray):
    """Return (start, d, integer sample positions) for ``times``."""
    diffs = np.diff(times)
    if np.any(diffs <= 0):
        bad = int(np.argmax(diffs <= 0)) + 1
        raise NonUniformSampling(f"timestamps not strictly increasing at row {bad}")
    # Lower median so that a single missing row in a short file does not
    # pull the estimate off the true interval.
    d0 = statistics.median_low(diffs.tolist())
    steps = np.rint(diffs / d0)
    if np.any(np.abs(diffs - steps * d0) > SPACING_RTOL * steps * d0):
        bad = int(np.argmax(np.abs(diffs - steps * d0) > SPACING_RTOL * steps * d0)) + 1
        raise NonUniformSampling(
            f"row {bad}: spacing {diffs[bad - 1]!r} is not a multiple of interval {d0!r}"
        )
    positions = np.concatenate([[0], np.cumsum(steps)]).astype(np.int64)
    d = float(times[-1] - times[0]) / float(positions[-1])
    return float(times[0]), d, positions


def ingest_csv(path: Union[str, Path], time_column: str = "time", value_column: str = "value") -> TimeSeries:
    """Read a two-column time series from a headed CSV file.

    Rows must be sorted by time. Timestamps are either numbers or ISO dates
    (converted to days). Rows missing from an otherwise uniform grid become
    gaps in the returned series.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise MalformedFile(f"{path}: empty file or missing header row")
            for col in (time_column, value_column):
                if col not in reader.fieldnames:
                    raise MalformedFile(f"{path}: column {col!r} not in header {reader.fieldnames}")
            times, values = [], []
            for lineno, row in enumerate(reader, start=2):
                try:
                    times.append(_parse_time(row[time_column]))
                    values.append(float(row[value_column]))
                except (TypeError, ValueError) as exc:
                    raise MalformedFile(f"{path}:{lineno}: cannot parse row ({exc})") from None
    except UnicodeDecodeError as exc:
        raise MalformedFile(f"{path}: not UTF-8 ({exc})") from None
    if len(times) < 2:
        raise TooShort(f"{path}: need at least 2 rows, got {len(times)}")
    times = np.asarray(times)
    values = np.asarray(values)
    if not np.all(np.isfinite(times)) or not np.all(np.isfinite(values)):
        raise MalformedFile(f"{path}: non-finite time or value")
    start, d, positions = _infer_grid(times)
    full = np.full(positions[-1] + 1, np.nan)
    full[positions] = values
    return TimeSeries(full, start, d)


def write_csv(series: TimeSeries, path: Union[str, Path], time_column: str = "time", value_column: str = "value") -> None:
    """Write the non-gap samples of ``series``; gaps are simply omitted rows."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([time_column, value_column])
        for t, v, gap in zip(series.times, series.values, series.gap_mask):
            if not gap:
                writer.writerow([repr(float(t)), repr(float(v))])


def interpolate_gaps(series: TimeSeries) -> TimeSeries:
    """Fill gaps by linear interpolation between the bracketing samples."""
    if not series.has_gaps:
        return series
    mask = series.gap_mask
    if mask[0] or mask[-1]:
        raise BoundaryGap("cannot interpolate a gap at the first or last sample")
    idx = np.arange(len(series))
    filled = np.array(series.values)
    filled[mask] = np.interp(idx[mask], idx[~mask], filled[~mask])
    return TimeSeries(filled, series.start_time, series.sample_interval)


def standardize(series: TimeSeries):
    """Return ``(standardized series, stats)`` using the population std."""
    if series.has_gaps:
        raise ValueError("standardize needs a gap-free series; call interpolate_gaps first")
    x = series.values
    mean = float(np.mean(x))
    std = float(np.std(x))
    if std == 0.0 or std <= 1e-15 * max(1.0, abs(mean)):
        raise ZeroVariance(f"series has zero variance (constant value {mean!r})")
    stats = StandardizationStats(mean, std)
    return series.with_values((x - mean) / std), stats


def destandardize(values: Sequence[float], stats: StandardizationStats) -> np.ndarray:
    if not stats.std > 0:
        raise ZeroVariance("cannot destandardize with std = 0")
    return np.asarray(values, dtype=float) * stats.std + stats.mean

"""DFT amplitude spectrum, sorting diagram, adaptive periods and the
quasi-periodic index.

The amplitude at bin ``w`` is ``|sum_s x[s] exp(-2j pi w s / N)|`` for
``w = 0 .. (N-1)//2``, at frequency ``w / (N d)`` where ``d`` is the sampling
interval. Only the non-negative half of the spectrum is kept.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .errors import DegenerateSpectrum, TooShort
from .timeseries import TimeSeries

DEFAULT_Q = 50
MODEL_BASED_THRESHOLD = 0.8
DATA_DRIVEN_THRESHOLD = 0.5
N_SLOPES = 10


@dataclass(frozen=True)
class SpectrumReport:
    amplitudes: np.ndarray
    frequencies: np.ndarray
    n_samples: int
    sample_interval: float
    sorted_ranks: Optional[np.ndarray] = None
    quasi_periodic_index: Optional[float] = None

    @property
    def n_bins(self) -> int:
        return self.amplitudes.size

    def to_dict(self) -> dict:
        out = {
            "n_samples": self.n_samples,
            "sample_interval": self.sample_interval,
            "bins": [
                {"bin": w, "frequency": float(f), "period": (1.0 / f if f > 0 else None), "amplitude": float(a)}
                for w, (f, a) in enumerate(zip(self.frequencies, self.amplitudes))
            ],
        }
        if self.sorted_ranks is not None:
            out["sorted_ranks"] = [int(r) for r in self.sorted_ranks]
        if self.quasi_periodic_index is not None:
            out["quasi_periodic_index"] = self.quasi_periodic_index
        return out


@dataclass(frozen=True)
class AdaptivePeriods:
    """Candidate periods, strongest first.

    ``source_bins`` holds the DFT bin each period came from; for refined
    periods it is the bin the search started at.
    """

    periods: np.ndarray
    source_amplitudes: np.ndarray
    source_bins: np.ndarray
    Q: int
    refined: bool = False

    def __len__(self) -> int:
        return self.periods.size

    @property
    def frequencies(self) -> np.ndarray:
        return 1.0 / self.periods

    def to_dict(self) -> dict:
        return {
            "Q": self.Q,
            "refined": self.refined,
            "periods": [
                {"rank": i + 1, "period": float(T), "frequency": float(1.0 / T), "amplitude": float(a), "bin": int(b)}
                for i, (T, a, b) in enumerate(zip(self.periods, self.source_amplitudes, self.source_bins))
            ],
        }


class Suitability(str, enum.Enum):
    MODEL_BASED_FAVORED = "ModelBasedFavored"
    CONTESTED = "Contested"
    DATA_DRIVEN_FAVORED = "DataDrivenFavored"


def _require_clean(series: TimeSeries) -> np.ndarray:
    if series.has_gaps:
        raise ValueError("spectrum needs a gap-free series; call interpolate_gaps first")
    if len(series) < 2:
        raise TooShort("need at least 2 samples")
    return np.asarray(series.values, dtype=float)


def dft_spectrum(series: TimeSeries) -> SpectrumReport:
    x = _require_clean(series)
    n = x.size
    n_bins = (n - 1) // 2 + 1
    amplitudes = np.abs(np.fft.rfft(x))[:n_bins]
    frequencies = np.arange(n_bins) / (n * series.sample_interval)
    return SpectrumReport(amplitudes, frequencies, n, series.sample_interval)


def rank_descending(amplitudes) -> np.ndarray:
    """Indices ordering ``amplitudes`` from largest to smallest; ties keep index order."""
    return np.argsort(-np.asarray(amplitudes, dtype=float), kind="stable")


def sorting_diagram(report: SpectrumReport) -> SpectrumReport:
    return replace(report, sorted_ranks=rank_descending(report.amplitudes))


def _ranks(report: SpectrumReport) -> np.ndarray:
    return report.sorted_ranks if report.sorted_ranks is not None else rank_descending(report.amplitudes)


def adaptive_periods(report: SpectrumReport, Q: int = DEFAULT_Q) -> AdaptivePeriods:
    """Periods of the ``Q`` strongest non-DC bins, ``T = 1 / f_w``."""
    if Q < 1:
        raise ValueError(f"Q must be a positive integer, got {Q}")
    ranks = _ranks(report)
    bins = ranks[ranks != 0][:Q]
    return AdaptivePeriods(
        periods=1.0 / report.frequencies[bins],
        source_amplitudes=report.amplitudes[bins],
        source_bins=bins.astype(np.int64),
        Q=Q,
    )


def quasi_periodic_index_from_sorted(sorted_amplitudes, n_slopes: int = N_SLOPES) -> float:
    """Sum of the ``n_slopes`` largest consecutive declines over the maximum.

    ``sorted_amplitudes`` must already be in descending order.
    """
    b = np.asarray(sorted_amplitudes, dtype=float)
    if b.size == 0 or not b[0] > 0:
        raise DegenerateSpectrum("maximum amplitude is zero; index undefined")
    declines = b[:-1] - b[1:]
    top = np.sort(declines)[::-1][:n_slopes]
    return float(np.sum(top) / b[0])


def quasi_periodic_index(report: SpectrumReport) -> float:
    """Quasi-periodic index of the non-DC part of the spectrum."""
    ranks = _ranks(report)
    ranks = ranks[ranks != 0]
    if ranks.size < 1:
        raise DegenerateSpectrum("spectrum has no non-DC bins")
    return quasi_periodic_index_from_sorted(report.amplitudes[ranks])


def classify_suitability(index: float) -> Suitability:
    if not np.isfinite(index) or index < 0:
        raise ValueError(f"index must be finite and non-negative, got {index}")
    if index >= MODEL_BASED_THRESHOLD:
        return Suitability.MODEL_BASED_FAVORED
    if index <= DATA_DRIVEN_THRESHOLD:
        return Suitability.DATA_DRIVEN_FAVORED
    return Suitability.CONTESTED


def analyze(series: TimeSeries, Q: int = DEFAULT_Q):
    """Spectrum with ranks and index filled, plus the top-``Q`` bin periods."""
    report = sorting_diagram(dft_spectrum(series))
    try:
        index = quasi_periodic_index(report)
    except DegenerateSpectrum:
        index = None
    report = replace(report, quasi_periodic_index=index)
    return report, adaptive_periods(report, Q)


# Sub-bin period refinement
#
# Raw bin periods are all divisors of the window length N*d, so a tone that
# falls between bins is represented by a cluster of leaking bins and cannot
# be extrapolated. The routine below extracts peaks one at a time from the
# residual spectrum, moves each to the frequency that maximizes the energy
# captured by a sine/cosine pair, and then re-tunes all of them cyclically
# with the other components subtracted.

_GRID_POINTS = 33


def _pair_energy(t: np.ndarray, r: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    """Energy of ``r`` captured by span{cos 2 pi f t, sin 2 pi f t} beyond
    a constant, for each f."""
    phase = 2.0 * np.pi * np.outer(freqs, t)
    c, s = np.cos(phase), np.sin(phase)
    c -= c.mean(axis=1, keepdims=True)
    s -= s.mean(axis=1, keepdims=True)
    r = r - r.mean()
    cc = np.einsum("ij,ij->i", c, c)
    ss = np.einsum("ij,ij->i", s, s)
    cs = np.einsum("ij,ij->i", c, s)
    bc, bs = c @ r, s @ r
    det = cc * ss - cs * cs
    with np.errstate(divide="ignore", invalid="ignore"):
        energy = (ss * bc * bc - 2.0 * cs * bc * bs + cc * bs * bs) / det
    return np.where(det > 1e-12 * cc * ss, energy, 0.0)


def _tune(t, r, lo, hi, xatol) -> float:
    grid = np.linspace(lo, hi, _GRID_POINTS)
    energy = _pair_energy(t, r, grid)
    k = int(np.argmax(energy))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, _GRID_POINTS - 1)]
    res = minimize_scalar(
        lambda f: -_pair_energy(t, r, np.array([f]))[0],
        bounds=(a, b),
        method="bounded",
        options={"xatol": xatol, "maxiter": 200},
    )
    return float(res.x) if -res.fun >= energy[k] else float(grid[k])


def _joint_fit(t, x, freqs):
    cols = [np.ones_like(t)]
    for f in freqs:
        cols += [np.sin(2 * np.pi * f * t), np.cos(2 * np.pi * f * t)]
    design = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(design, x, rcond=None)
    return coef, design


def _relax(t, x, freqs, bw, f_lo, f_hi, xatol, cycles):
    """Re-tune each frequency with all other components subtracted."""
    for _ in range(cycles):
        coef, design = _joint_fit(t, x, freqs)
        fitted = design @ coef
        shift = 0.0
        for k in range(freqs.size):
            part = design[:, 1 + 2 * k: 3 + 2 * k] @ coef[1 + 2 * k: 3 + 2 * k]
            r_raw = x - fitted + part
            r = r_raw - r_raw.mean()
            f_old = freqs[k]
            f_new = _tune(t, r, max(f_old - 0.5 * bw, f_lo), min(f_old + 0.5 * bw, f_hi), xatol)
            others = np.delete(freqs, k)
            if others.size and np.min(np.abs(others - f_new)) < 0.1 * bw:
                continue
            freqs[k] = f_new
            shift = max(shift, abs(f_new - f_old))
            pair = np.column_stack([np.sin(2 * np.pi * f_new * t), np.cos(2 * np.pi * f_new * t)])
            ab, *_ = np.linalg.lstsq(pair, r, rcond=None)
            design[:, 1 + 2 * k: 3 + 2 * k] = pair
            coef[1 + 2 * k: 3 + 2 * k] = ab
            fitted = x - r_raw + pair @ ab
        if shift < 1e3 * xatol:
            break
    return freqs


def _polish(t, x, freqs, bw, f_lo, f_hi):
    """Joint least-squares refinement of all frequencies.

    Amplitudes are projected out (variable projection); the Jacobian uses
    Kaufman's approximation ``-(I - P) d(Phi beta)/df``.
    """
    two_pi_t = 2.0 * np.pi * t

    def basis(f):
        phase = np.outer(two_pi_t, f)
        design = np.empty((t.size, 1 + 2 * f.size))
        design[:, 0] = 1.0
        design[:, 1::2] = np.sin(phase)
        design[:, 2::2] = np.cos(phase)
        return design

    def fun(f):
        design = basis(f)
        coef, *_ = np.linalg.lstsq(design, x, rcond=None)
        return x - design @ coef

    def jac(f):
        design = basis(f)
        q, _ = np.linalg.qr(design)
        coef, *_ = np.linalg.lstsq(design, x, rcond=None)
        a, b = coef[1::2], coef[2::2]
        g = two_pi_t[:, None] * (design[:, 2::2] * a - design[:, 1::2] * b)
        return -(g - q @ (q.T @ g))

    lo = np.maximum(freqs - bw, f_lo)
    hi = np.minimum(freqs + bw, f_hi)
    start = np.clip(freqs, lo, hi)
    res = least_squares(fun, start, jac=jac, bounds=(lo, hi), method="trf",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=100)
    before = fun(start)
    if res.cost <= 0.5 * float(before @ before):
        return np.array(res.x)
    return freqs


def _peak_is_noise(power: np.ndarray, peak_power: float, alpha: float) -> bool:
    """Max-periodogram test against a white-noise residual.

    Under white noise the ordinates are exponential with scale
    ``median / ln 2``; the largest of ``M`` exceeds ``scale * ln(M / alpha)``
    with probability about ``alpha``.
    """
    scale = float(np.median(power)) / np.log(2.0)
    if scale <= 0:
        return False
    return peak_power < scale * np.log(power.size / alpha)


def refine_periods(
    series: TimeSeries,
    Q: int = DEFAULT_Q,
    alpha: Optional[float] = 1e-3,
    relax_cycles: int = 5,
    rel_floor: float = 1e-9,
) -> AdaptivePeriods:
    """Up to ``Q`` adaptive periods with sub-bin frequency accuracy.

    Peaks are taken one at a time from the spectrum of the residual left
    after a least-squares fit of the periods found so far. Each new peak is
    tuned within one bin of its DFT bin and then every period found so far
    is re-tuned. Extraction stops after ``Q`` periods, once the residual
    peak falls below ``rel_floor`` times the first peak, or (when ``alpha``
    is not None) once the residual peak is not significant at level
    ``alpha`` against white noise.
    """
    if Q < 1:
        raise ValueError(f"Q must be a positive integer, got {Q}")
    x = _require_clean(series)
    n = x.size
    d = series.sample_interval
    t = np.arange(n) * d
    n_bins = (n - 1) // 2 + 1
    if n_bins < 2:
        raise DegenerateSpectrum("series too short to carry a non-DC period")
    bw = 1.0 / (n * d)
    f_lo = 0.2 * bw
    f_hi = 0.5 / d - 0.2 * bw
    xatol = 1e-10 * bw

    freqs = np.empty(0)
    bins: list = []
    resid = x - x.mean()
    first_peak = None
    while freqs.size < Q:
        amps = np.abs(np.fft.rfft(resid))[1:n_bins]
        w = int(np.argmax(amps)) + 1
        peak = amps[w - 1]
        if first_peak is None:
            first_peak = peak
        if not peak > rel_floor * first_peak:
            break
        if alpha is not None and freqs.size and _peak_is_noise(amps ** 2, peak ** 2, alpha):
            break
        f0 = w * bw
        f = _tune(t, resid, max(f0 - bw, f_lo), min(f0 + bw, f_hi), xatol)
        if freqs.size and np.min(np.abs(freqs - f)) < 0.1 * bw:
            break
        freqs = np.append(freqs, f)
        bins.append(w)
        freqs = _relax(t, x, freqs, bw, f_lo, f_hi, xatol, relax_cycles)
        freqs = _polish(t, x, freqs, bw, f_lo, f_hi)
        coef, design = _joint_fit(t, x, freqs)
        resid = x - design @ coef

    if not freqs.size:
        raise DegenerateSpectrum("no non-DC energy in series")

    coef, _ = _joint_fit(t, x, freqs)
    amplitude = 0.5 * n * np.hypot(coef[1::2], coef[2::2])
    order = np.argsort(-amplitude, kind="stable")
    return AdaptivePeriods(
        periods=1.0 / freqs[order],
        source_amplitudes=amplitude[order],
        source_bins=np.asarray(bins, dtype=np.int64)[order],
        Q=Q,
        refined=True,
    )

"""Sparse system identification with adaptive Fourier basis functions.

Periods are discovered from the DFT amplitude spectrum of a series, turned
into a sine/cosine dictionary and combined by L1-sparse regression into an
algebraic model of time that forecasts any horizon without iteration.
"""
__version__ = "0.1.0"

from .basis import BasisSpec, DesignMatrix, build_spec, evaluate as evaluate_basis, evaluate_offsets
from .errors import *  # noqa: F401,F403
from .forecast import (
    EvaluationReport,
    SparseModel,
    evaluate as evaluate_forecast,
    fit,
    load_model,
    predict,
    prediction_times,
    save_model,
)
from .robustness import CorruptionConfig, RobustnessReport, corrupt, run_robustness
from .solver import FitConfig, SparseCoefficients, cross_validate_lambda, fit_l1, fit_stlsq
from .spectrum import (
    AdaptivePeriods,
    SpectrumReport,
    Suitability,
    adaptive_periods,
    analyze,
    classify_suitability,
    dft_spectrum,
    quasi_periodic_index,
    refine_periods,
    sorting_diagram,
)
from .timeseries import (
    StandardizationStats,
    TimeSeries,
    destandardize,
    ingest_csv,
    interpolate_gaps,
    standardize,
    write_csv,
)

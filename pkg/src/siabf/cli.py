"""Command-line interface: ``siabf {analyze,fit,predict,evaluate,robustness}``.

Settings come from built-in defaults, overridden by a JSON ``--config`` file,
overridden by command-line flags. Exit codes: 0 success, 1 user or data
error, 2 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import traceback
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from . import __version__
from .errors import LengthMismatch, MalformedFile, SiabfError
from .forecast import DEFAULT_MAPE_EPS, evaluate, fit, load_model, predict, prediction_times, save_model
from .robustness import RMSE_DEGRADATION_BOUND, CorruptionConfig, run_robustness
from .solver import FitConfig
from .spectrum import DEFAULT_Q, analyze, classify_suitability, refine_periods
from .timeseries import ingest_csv, interpolate_gaps


@dataclass
class RunConfig:
    """Every setting the commands read, with its default."""

    input: Optional[str] = None
    time_col: str = "time"
    value_col: str = "value"
    q: int = DEFAULT_Q
    lam: float = 5e-4
    cv_grid: Tuple[float, ...] = ()
    solver: str = "l1"
    threshold_eps: float = 1e-2
    refit: bool = False
    refine: bool = True
    alpha: Optional[float] = 1e-3
    intercept: bool = True
    trend: int = 0
    horizon: int = 100
    train_fraction: float = 0.8
    mape_eps: float = DEFAULT_MAPE_EPS
    delete_frac: float = 0.05
    noise_scale: float = 0.05
    seed: int = 0
    repeat: int = 1
    out: str = "."
    model: Optional[str] = None
    predictions: Optional[str] = None
    truth: Optional[str] = None

    def fit_config(self) -> FitConfig:
        return FitConfig(lam=self.lam, threshold_eps=self.threshold_eps, cv_grid=self.cv_grid, refit_support=self.refit)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_grid(text: str) -> Tuple[float, ...]:
    """``"1e-4,1e-3"`` or ``"logspace:LO:HI:COUNT"``."""
    text = text.strip()
    if text.startswith("logspace:"):
        try:
            lo, hi, count = text.split(":")[1:]
            return tuple(float(v) for v in np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(count)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad logspace grid {text!r}") from None
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def _add_common(p, *names):
    add = {
        "input": lambda: p.add_argument("--input", "-i", help="input CSV"),
        "cols": lambda: (
            p.add_argument("--time-col", dest="time_col", help="time column name (default: time)"),
            p.add_argument("--value-col", dest="value_col", help="value column name (default: value)"),
        ),
        "q": lambda: p.add_argument("--q", type=int, help=f"number of adaptive periods (default: {DEFAULT_Q})"),
        "periods": lambda: (
            p.add_argument("--no-refine", dest="refine", action="store_const", const=False,
                           help="use raw DFT bin periods instead of sub-bin refined ones"),
            p.add_argument("--alpha", type=float,
                           help="significance level that stops period extraction (default: 1e-3; 0 disables)"),
        ),
        "fit": lambda: (
            p.add_argument("--lambda", dest="lam", type=float, help="L1 penalty (default: 5e-4)"),
            p.add_argument("--cv-grid", dest="cv_grid", type=parse_grid,
                           help="lambda grid for holdout selection: 'a,b,c' or 'logspace:LO:HI:N'"),
            p.add_argument("--solver", choices=["l1", "stlsq"], help="sparse solver (default: l1)"),
            p.add_argument("--threshold", dest="threshold_eps", type=float, help="STLSQ threshold (default: 1e-2)"),
            p.add_argument("--refit", action="store_const", const=True,
                           help="least-squares refit on the L1 support"),
            p.add_argument("--trend", type=int, choices=[0, 1], help="include a linear trend column (default: 0)"),
            p.add_argument("--no-intercept", dest="intercept", action="store_const", const=False),
        ),
        "seed": lambda: p.add_argument("--seed", type=int, help="RNG seed (default: 0)"),
        "out": lambda: p.add_argument("--out", "-o", help="output directory (default: .)"),
        "eps": lambda: p.add_argument("--mape-eps", dest="mape_eps", type=float, help="MAPE epsilon (default: 1e-8)"),
    }
    for name in names:
        add[name]()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="siabf", description="Sparse adaptive-Fourier identification and long-horizon forecasting.")
    parser.add_argument("--version", action="version", version=f"siabf {__version__}")
    parser.add_argument("--config", help="JSON file of settings (flags take precedence)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="spectrum, sorting diagram, adaptive periods, quasi-periodic index")
    _add_common(p, "input", "cols", "q", "periods", "out")

    p = sub.add_parser("fit", help="fit a sparse model and write model.json")
    _add_common(p, "input", "cols", "q", "periods", "fit", "out")

    p = sub.add_parser("predict", help="forecast from a model file")
    p.add_argument("--model", "-m", help="model file written by 'fit'")
    p.add_argument("--horizon", type=int, help="number of steps after the training window (default: 100)")
    _add_common(p, "out")

    p = sub.add_parser("evaluate", help="score predictions against truth")
    p.add_argument("--predictions", help="CSV with a 'prediction' column")
    p.add_argument("--truth", help="CSV with the true values")
    _add_common(p, "cols", "eps", "out")

    p = sub.add_parser("robustness", help="clean versus corrupted training comparison")
    _add_common(p, "input", "cols", "q", "periods", "fit", "seed", "eps", "out")
    p.add_argument("--train-fraction", dest="train_fraction", type=float, help="training prefix share (default: 0.8)")
    p.add_argument("--delete-frac", dest="delete_frac", type=float, help="share of training rows deleted (default: 0.05)")
    p.add_argument("--noise-scale", dest="noise_scale", type=float,
                   help="uniform noise half-width as a share of training std (default: 0.05)")
    p.add_argument("--repeat", type=int, help="number of seeds seed..seed+repeat-1 (default: 1)")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedFile(f"cannot read config {args.config}: {exc}") from None
        unknown = set(data) - known
        if unknown:
            raise MalformedFile(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            setattr(cfg, key, tuple(value) if key == "cv_grid" else value)
    for key, value in vars(args).items():
        if key in known and value is not None:
            setattr(cfg, key, value)
    if cfg.alpha == 0:
        cfg.alpha = None
    return cfg


def _need(cfg: RunConfig, name: str):
    value = getattr(cfg, name)
    if value is None:
        raise SiabfError(f"--{name.replace('_', '-')} is required")
    return value


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _load_series(cfg: RunConfig):
    return interpolate_gaps(ingest_csv(_need(cfg, "input"), cfg.time_col, cfg.value_col))


def _fit_kwargs(cfg: RunConfig) -> dict:
    return dict(
        Q=cfg.q,
        config=cfg.fit_config(),
        solver=cfg.solver,
        include_intercept=cfg.intercept,
        trend_degree=cfg.trend,
        refine=cfg.refine,
        alpha=cfg.alpha,
    )


def _period_note(T: float, d: float) -> str:
    return f"{T / d:.4g} samples"


def cmd_analyze(cfg: RunConfig) -> int:
    series = _load_series(cfg)
    report, periods = analyze(series, cfg.q)
    out = _out_dir(cfg)
    d = series.sample_interval
    index = report.quasi_periodic_index
    suitability = classify_suitability(index).value if index is not None else None
    refined = None
    if cfg.refine:
        refined = refine_periods(series, cfg.q, alpha=cfg.alpha)

    data = {
        "spectrum": report.to_dict(),
        "adaptive_periods": periods.to_dict(),
        "quasi_periodic_index": index,
        "suitability": suitability,
    }
    if refined is not None:
        data["refined_periods"] = refined.to_dict()
    _write_json(out / "spectrum.json", data)
    _write_csv(
        out / "sorting_diagram.csv",
        ["rank", "amplitude", "bin"],
        [(r + 1, float(report.amplitudes[w]), int(w)) for r, w in enumerate(report.sorted_ranks)],
    )
    table = refined if refined is not None else periods
    _write_csv(
        out / "periods.csv",
        ["rank", "period", "frequency", "amplitude", "bin", "note"],
        [
            (i + 1, float(T), float(1.0 / T), float(a), int(b), _period_note(T, d))
            for i, (T, a, b) in enumerate(zip(table.periods, table.source_amplitudes, table.source_bins))
        ],
    )
    print(f"N={report.n_samples} d={d!r} bins={report.n_bins}")
    print(f"quasi-periodic index I10 = {index if index is None else round(index, 6)} ({suitability})")
    print(f"{'rank':>4}  {'period':>14}  {'amplitude':>14}  note")
    for i, (T, a) in enumerate(zip(table.periods[:10], table.source_amplitudes[:10])):
        print(f"{i + 1:>4}  {T:>14.6g}  {a:>14.6g}  {_period_note(T, d)}")
    return 0


def cmd_fit(cfg: RunConfig) -> int:
    series = _load_series(cfg)
    t0 = time.perf_counter()
    model = fit(series, **_fit_kwargs(cfg))
    elapsed = time.perf_counter() - t0
    out = _out_dir(cfg)
    save_model(model, out / "model.json")
    if model.cv_table:
        _write_csv(out / "cv_table.csv", ["lambda", "holdout_rmse"], model.cv_table)
        print(f"{'lambda':>14}  {'holdout RMSE':>14}")
        for lam, rmse in model.cv_table:
            print(f"{lam:>14.6g}  {rmse:>14.6g}")
    coef = model.coefficients
    print(f"solver={coef.solver_id} lambda={coef.lambda_used:.6g} nonzero={coef.nonzero_count}/{coef.xi.size}"
          f" converged={coef.converged}")
    print(f"I10={model.quasi_periodic_index} ({model.suitability})")
    print(f"{'term':>24}  {'coefficient':>14}")
    for label, value in model.active_terms():
        print(f"{label:>24}  {value:>14.6g}")
    print(f"elapsed {elapsed:.3f}s")
    return 0


def cmd_predict(cfg: RunConfig) -> int:
    model = load_model(_need(cfg, "model"))
    horizon = int(cfg.horizon)
    if horizon < 1:
        raise SiabfError("--horizon must be >= 1")
    values = predict(model, horizon)
    times = prediction_times(model, horizon)
    out = _out_dir(cfg)
    _write_csv(out / "predictions.csv", ["time", "prediction"], zip(times.tolist(), values.tolist()))
    print(f"wrote {horizon} predictions to {out / 'predictions.csv'}")
    return 0


def _read_column(path: str, column: str) -> np.ndarray:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or column not in reader.fieldnames:
                raise MalformedFile(f"{path}: missing column {column!r}")
            return np.array([float(row[column]) for row in reader])
    except (ValueError, TypeError) as exc:
        raise MalformedFile(f"{path}: {exc}") from None


def cmd_evaluate(cfg: RunConfig) -> int:
    pred = _read_column(_need(cfg, "predictions"), "prediction")
    truth = ingest_csv(_need(cfg, "truth"), cfg.time_col, cfg.value_col)
    if truth.has_gaps:
        raise MalformedFile(f"{cfg.truth}: truth file has missing rows")
    if pred.size != len(truth):
        raise LengthMismatch(f"{pred.size} predictions vs {len(truth)} truth values")
    report = evaluate(pred, truth.values, cfg.mape_eps)
    _write_json(_out_dir(cfg) / "metrics.json", report.to_dict())
    print(report.summary())
    return 0


def cmd_robustness(cfg: RunConfig) -> int:
    series = _load_series(cfg)
    out = _out_dir(cfg)
    kwargs = _fit_kwargs(cfg)
    runs, traces = [], []
    for k in range(max(1, int(cfg.repeat))):
        seed = cfg.seed + k
        report = run_robustness(
            series,
            train_fraction=cfg.train_fraction,
            corruption=CorruptionConfig(cfg.delete_frac, cfg.noise_scale, seed),
            mape_eps=cfg.mape_eps,
            **kwargs,
        )
        runs.append(report.to_dict())
        traces += [
            (seed, float(t), float(y), float(c), float(e))
            for t, y, c, e in zip(report.times, report.truth, report.control_predictions, report.treated_predictions)
        ]
        print(f"seed {seed}: control {report.control.summary()}")
        print(f"seed {seed}: treated {report.treated.summary()}")
        print(f"seed {seed}: verdict {'not significantly weaker' if report.verdict else 'WEAKER'}")
    control_rmse = float(np.mean([r["control"]["rmse"] for r in runs]))
    treated_rmse = float(np.mean([r["treated"]["rmse"] for r in runs]))
    aggregate = {
        "mean_control_rmse": control_rmse,
        "mean_treated_rmse": treated_rmse,
        "relative_rmse_change": treated_rmse / control_rmse - 1.0 if control_rmse > 0 else None,
        "verdict": bool(treated_rmse <= control_rmse * (1.0 + RMSE_DEGRADATION_BOUND)),
    }
    if len(runs) > 1:
        print(f"mean over {len(runs)} seeds: control RMSE {control_rmse:.6g}, treated RMSE {treated_rmse:.6g},"
              f" verdict {'not significantly weaker' if aggregate['verdict'] else 'WEAKER'}")
    settings = {k: v for k, v in asdict(cfg).items() if k not in ("out", "config")}
    _write_json(out / "robustness.json", {"settings": settings, "runs": runs, "aggregate": aggregate})
    _write_csv(out / "robustness_traces.csv", ["seed", "time", "truth", "control", "treated"], traces)
    return 0


COMMANDS = {
    "analyze": cmd_analyze,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "robustness": cmd_robustness,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (SiabfError, OSError, ValueError) as exc:
        print(f"siabf {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except Exception:  # invariant violations and bugs
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())

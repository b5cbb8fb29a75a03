"""Benchmark harness: the full model comparison under one protocol.

One experiment draws several random training samples from a demand
series, trains the evolving fuzzy network in a single pass and the
feedforward network with both trainers on each sample, fits the
seasonal Box-Jenkins model once on the contiguous training series, and
scores every model on the held-out final two days (96 half-hours).
Following the source protocol, the headline number per model is the
worst test RMSE over the samples; per-sample detail is retained.

emit_report writes four files: a comparison table (report.csv), the
per-period forecasts in demand units (forecast.csv), per-epoch training
curves (convergence.csv), and a small hand-rolled SVG chart. Report
numbers contain no wall-clock values, so identical seeds reproduce the
CSV files byte for byte.
"""

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import arima as arima_mod
from . import dataset, mlp
from .dataset import FEATURE_NAMES, HALF_HOURS_PER_DAY, NormStats
from .efunn import EfunnConfig, EfunnModel
from .errors import ConfigError, DataError
from .flops import FlopCounter
from .fuzzy import build_partition
from .mlp import BpConfig

MODEL_NAMES = ("efunn", "mlp-bp", "mlp-scg", "arima")


def default_arima_spec() -> arima_mod.ArimaSpec:
    """Weekly pre-differencing, then (1,1,1)(1,0,1) at the daily period."""
    return arima_mod.ArimaSpec(p=1, d=1, q=1, sp=1, sd=0, sq=1, season=48,
                               pre_diff_lag=336)


@dataclass
class ExperimentConfig:
    """Data source, sampling protocol, and per-model settings for one run."""

    csv_path: Optional[str] = None
    synth_days: int = 90
    synth_config: Optional[dataset.SynthConfig] = None
    seed: int = 0
    training_fraction: float = 0.2
    n_samples: int = 3
    test_periods: int = 96
    epochs: int = 2500
    mlp_layers: tuple = (6, 40, 40, 1)
    bp_epsilon: float = 0.01
    bp_alpha: float = 0.9
    mf_count: int = 4
    efunn: EfunnConfig = field(default_factory=EfunnConfig)
    arima: arima_mod.ArimaSpec = field(default_factory=default_arima_spec)
    models: tuple = MODEL_NAMES

    def __post_init__(self):
        if not 0.0 < self.training_fraction <= 1.0:
            raise ConfigError(
                f"training fraction must be in (0, 1], got {self.training_fraction}"
            )
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.test_periods < 1:
            raise ConfigError(f"test_periods must be >= 1, got {self.test_periods}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        unknown = [m for m in self.models if m not in MODEL_NAMES]
        if unknown:
            raise ConfigError(f"unknown model names {unknown}; pick from {MODEL_NAMES}")
        if not self.models:
            raise ConfigError("at least one model must be enabled")


@dataclass
class SampleOutcome:
    """One model trained on one sample, scored on the test window."""

    model: str
    sample: int
    epochs: int
    train_rmse: Optional[float]
    test_rmse: float
    flops: int
    wall_time: float
    predictions: np.ndarray
    trace: Optional[list] = None
    nodes: Optional[int] = None


@dataclass
class BenchReport:
    config: ExperimentConfig
    outcomes: list
    worst: dict
    actuals: np.ndarray
    timestamps: list
    test_start: int
    norm: NormStats
    training_examples: int


def count_flops(counter: FlopCounter) -> int:
    """Flops accumulated in an instrumented scope (see module flops)."""
    return counter.total


def make_partitions(mf_count: int = 4):
    """Input and output membership partitions over the normalized range."""
    inputs = [
        build_partition(0.0, 1.0, mf_count, "gaussian", name)
        for name in FEATURE_NAMES
    ]
    output = build_partition(0.0, 1.0, mf_count, "gaussian", dataset.TARGET_NAME)
    return inputs, output


def _recursive_forecast(records, stats, predict_fn, test_start, periods):
    """Normalized and demand-unit predictions over the test window.

    Lag-48 inputs falling inside the window use the model's own earlier
    predictions; everything before the window uses recorded demand.
    """
    predicted = {}
    norm_preds = []
    demand_preds = []
    for ri in range(test_start, test_start + periods):
        prev_ri = ri - HALF_HOURS_PER_DAY
        if prev_ri >= test_start:
            prev = predicted[prev_ri]
        else:
            prev = records[prev_ri].demand
        raw = dataset.encode_features(records, ri, prev_demand=prev)
        nv = dataset.apply_norm(raw, stats)
        yhat = float(predict_fn(nv.x))
        demand = dataset.denorm_target(yhat, stats)
        predicted[ri] = demand
        norm_preds.append(yhat)
        demand_preds.append(demand)
    return norm_preds, np.asarray(demand_preds)


def run_experiment(config: ExperimentConfig) -> BenchReport:
    """Train and score every enabled model; returns the full report."""
    if config.csv_path is not None:
        records = dataset.parse_csv(config.csv_path)
    else:
        records = dataset.synthesize(config.synth_days, config.seed,
                                     config.synth_config)
    n = len(records)
    minimum = 336 + config.test_periods + HALF_HOURS_PER_DAY
    if n < minimum:
        raise DataError(
            f"need at least {minimum} records (weekly lag + test window + "
            f"lookback), got {n}"
        )
    test_start = n - config.test_periods

    pool_raw = [
        dataset.encode_features(records, i)
        for i in range(HALF_HOURS_PER_DAY, test_start)
    ]
    stats = dataset.fit_norm(pool_raw)
    pool = [dataset.apply_norm(v, stats) for v in pool_raw]
    samples = dataset.sample_training(
        pool, config.training_fraction, config.seed, config.n_samples
    )
    for idx in samples:
        # test-window isolation: sampled vectors must end before the window
        assert int(idx.max()) + HALF_HOURS_PER_DAY < test_start

    actual = np.array([records[i].demand for i in range(test_start, n)])
    actual_norm = [dataset.norm_target(d, stats) for d in actual]
    timestamps = [records[i].timestamp for i in range(test_start, n)]

    outcomes = []
    arima_outcome = None
    if "arima" in config.models:
        counter = FlopCounter()
        t0 = time.perf_counter()
        fit = arima_mod.fit(
            np.array([r.demand for r in records[:test_start]]),
            config.arima, counter,
        )
        preds = arima_mod.forecast(fit, config.test_periods)
        wall = time.perf_counter() - t0
        preds_norm = [dataset.norm_target(d, stats) for d in preds]
        arima_outcome = dict(
            epochs=fit.iterations,
            test_rmse=mlp.rmse(preds_norm, actual_norm),
            flops=counter.total,
            wall_time=wall,
            predictions=preds,
        )

    for s, idx in enumerate(samples):
        train_x = np.stack([pool[i].x for i in idx])
        train_y = np.array([pool[i].y for i in idx])
        for name in config.models:
            if name == "efunn":
                outcomes.append(
                    _run_efunn(config, records, stats, train_x, train_y,
                               test_start, s)
                )
            elif name in ("mlp-bp", "mlp-scg"):
                outcomes.append(
                    _run_mlp(config, records, stats, train_x, train_y,
                             test_start, s, name)
                )
            else:
                outcomes.append(
                    SampleOutcome(model="arima", sample=s,
                                  train_rmse=None, **arima_outcome)
                )

    worst = {}
    for name in config.models:
        rows = [o for o in outcomes if o.model == name]
        worst[name] = max(rows, key=lambda o: o.test_rmse)
    return BenchReport(
        config=config,
        outcomes=outcomes,
        worst=worst,
        actuals=actual,
        timestamps=timestamps,
        test_start=test_start,
        norm=stats,
        training_examples=len(samples[0]),
    )


def _run_efunn(config, records, stats, train_x, train_y, test_start, s):
    counter = FlopCounter()
    inputs, output = make_partitions(config.mf_count)
    model = EfunnModel(config.efunn, inputs, output, counter=counter)
    t0 = time.perf_counter()
    for x, y in zip(train_x, train_y):
        model.learn_one(x, y)
    wall = time.perf_counter() - t0
    training_flops = counter.total
    model.counter = None
    train_pred = [model.predict(x) for x in train_x]
    norm_preds, demand_preds = _recursive_forecast(
        records, stats, model.predict, test_start, config.test_periods
    )
    actual_norm = [
        dataset.norm_target(records[i].demand, stats)
        for i in range(test_start, test_start + config.test_periods)
    ]
    return SampleOutcome(
        model="efunn", sample=s, epochs=1,
        train_rmse=mlp.rmse(train_pred, list(train_y)),
        test_rmse=mlp.rmse(norm_preds, actual_norm),
        flops=training_flops, wall_time=wall,
        predictions=demand_preds, nodes=model.n_nodes,
    )


def _run_mlp(config, records, stats, train_x, train_y, test_start, s, name):
    counter = FlopCounter()
    seed = config.seed * 1000 + 101 + s
    model = mlp.init_mlp(config.mlp_layers, seed)
    t0 = time.perf_counter()
    if name == "mlp-bp":
        cfg = BpConfig(epsilon=config.bp_epsilon, alpha=config.bp_alpha,
                       epochs=config.epochs)
        trace = mlp.bp_train(model, (train_x, train_y), cfg, counter)
    else:
        trace = mlp.scg_train(model, (train_x, train_y), config.epochs,
                              counter=counter)
    wall = time.perf_counter() - t0
    train_pred = mlp.forward_batch(model, train_x)
    norm_preds, demand_preds = _recursive_forecast(
        records, stats, lambda x: mlp.forward(model, x), test_start,
        config.test_periods,
    )
    actual_norm = [
        dataset.norm_target(records[i].demand, stats)
        for i in range(test_start, test_start + config.test_periods)
    ]
    return SampleOutcome(
        model=name, sample=s, epochs=config.epochs,
        train_rmse=mlp.rmse(train_pred, train_y),
        test_rmse=mlp.rmse(norm_preds, actual_norm),
        flops=counter.total, wall_time=wall,
        predictions=demand_preds, trace=trace,
    )


# -- report files ----------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def emit_report(report: BenchReport, out_dir) -> list:
    """Write report.csv, forecast.csv, convergence.csv, forecast.svg."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = [
            _write_report_csv(report, out / "report.csv"),
            _write_forecast_csv(report, out / "forecast.csv"),
            _write_convergence_csv(report, out / "convergence.csv"),
            _write_forecast_svg(report, out / "forecast.svg"),
        ]
    except OSError as exc:
        raise OSError(f"cannot write report into {out}: {exc}") from exc
    return paths


def _write_report_csv(report: BenchReport, path: Path) -> Path:
    cfg = report.config
    lines = [
        "# demand forecasting benchmark",
        f"# protocol: worst of {cfg.n_samples} training samples of "
        f"{report.training_examples} examples; test window = final "
        f"{cfg.test_periods} half-hours; RMSE on the normalized [0,1] "
        "demand scale",
        "# mlp test forecasts reuse their own predictions for lag-48 inputs "
        "inside the test window",
        "# arima: positive MA signs (y_t = ... + e_t + theta_1 e_{t-1}); "
        "fitted once on the contiguous training series, so per-sample "
        "columns repeat it; its epochs column counts estimation iterations",
    ]
    header = ["model", "learning_epochs", "train_rmse", "test_rmse", "flops"]
    for s in range(cfg.n_samples):
        header += [f"train_rmse_s{s}", f"test_rmse_s{s}", f"flops_s{s}"]
    lines.append(",".join(header))
    for name in cfg.models:
        w = report.worst[name]
        row = [name, _fmt(w.epochs), _fmt(w.train_rmse), _fmt(w.test_rmse),
               _fmt(w.flops)]
        per_sample = {o.sample: o for o in report.outcomes if o.model == name}
        for s in range(cfg.n_samples):
            o = per_sample[s]
            row += [_fmt(o.train_rmse), _fmt(o.test_rmse), _fmt(o.flops)]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_forecast_csv(report: BenchReport, path: Path) -> Path:
    cols = ["period", "timestamp", "actual_mwh"]
    for name in report.config.models:
        cols.append(name.replace("-", "_") + "_mwh")
    lines = [",".join(cols)]
    for k in range(report.config.test_periods):
        row = [str(k + 1), report.timestamps[k].isoformat(),
               _fmt(report.actuals[k])]
        for name in report.config.models:
            row.append(_fmt(report.worst[name].predictions[k]))
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_convergence_csv(report: BenchReport, path: Path) -> Path:
    lines = ["trainer,epoch,rmse"]
    for name in ("mlp-bp", "mlp-scg"):
        if name in report.worst and report.worst[name].trace:
            for epoch, value in enumerate(report.worst[name].trace, start=1):
                lines.append(f"{name},{epoch},{_fmt(value)}")
    path.write_text("\n".join(lines) + "\n")
    return path


_SVG_COLORS = {
    "actual": "#222222",
    "efunn": "#c0392b",
    "mlp-bp": "#2980b9",
    "mlp-scg": "#27ae60",
    "arima": "#8e44ad",
}


def _write_forecast_svg(report: BenchReport, path: Path) -> Path:
    """Minimal polyline chart of the test window, no plotting library."""
    width, height = 960, 420
    left, right, top, bottom = 60, 150, 20, 40
    plot_w = width - left - right
    plot_h = height - top - bottom
    series = [("actual", report.actuals)]
    for name in report.config.models:
        series.append((name, report.worst[name].predictions))
    lo = min(float(np.min(v)) for _, v in series)
    hi = max(float(np.max(v)) for _, v in series)
    if hi <= lo:
        hi = lo + 1.0
    npts = report.config.test_periods

    def sx(i):
        return left + plot_w * i / max(1, npts - 1)

    def sy(v):
        return top + plot_h * (1.0 - (v - lo) / (hi - lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" '
        'stroke="#999"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" '
        f'y2="{top + plot_h}" stroke="#999"/>',
    ]
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        y = sy(v)
        parts.append(
            f'<text x="{left - 8:.1f}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-size="11" fill="#555">{v:.0f}</text>'
        )
        parts.append(
            f'<line x1="{left}" y1="{y:.1f}" x2="{left + plot_w}" '
            f'y2="{y:.1f}" stroke="#eee"/>'
        )
    for k in range(0, npts, 12):
        x = sx(k)
        parts.append(
            f'<text x="{x:.1f}" y="{top + plot_h + 16}" text-anchor="middle" '
            f'font-size="11" fill="#555">{k + 1}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 6}" '
        'text-anchor="middle" font-size="12" fill="#333">half-hour period'
        "</text>"
    )
    for row, (name, values) in enumerate(series):
        pts = " ".join(
            f"{sx(i):.2f},{sy(float(v)):.2f}" for i, v in enumerate(values)
        )
        color = _SVG_COLORS.get(name, "#555")
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            'stroke-width="1.5"/>'
        )
        ly = top + 14 + 18 * row
        lx = left + plot_w + 12
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-size="12" '
            f'fill="#333">{name}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")
    return path

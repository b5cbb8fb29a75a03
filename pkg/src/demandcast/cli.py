"""Command-line front end.

Five subcommands: ``synth`` writes a synthetic demand CSV, ``train``
fits one model and writes a text snapshot, ``forecast`` replays a
snapshot against a CSV, ``bench`` runs the full comparison, and
``rules`` prints the linguistic rules of a trained fuzzy network.

train and forecast share a holdout convention: the final 96 half-hours
(two days) of the CSV are never trained on, and forecast predicts
exactly that window. Exit codes: 0 on success, 1 for usage, config, or
data problems, 2 when an estimator fails to converge.
"""

import argparse
import sys

import numpy as np

from . import __version__
from . import arima as arima_mod
from . import bench, dataset, mlp, snapshot
from .bench import _recursive_forecast
from .dataset import HALF_HOURS_PER_DAY, NormStats
from .efunn import EfunnConfig, EfunnModel
from .errors import (ConfigError, ConvergenceError, DataError,
                     DemandcastError, DivergenceError)

HOLDOUT_PERIODS = 96

_EFUNN_KEYS = ("sthr", "errthr", "lr1", "lr2", "lr3", "ss", "tc",
               "max_nodes", "m_mode", "activation", "mf_count")
_ARIMA_KEYS = ("p", "d", "q", "sp", "sd", "sq", "season", "pre_diff_lag")
_MLP_KEYS = ("layers", "epsilon", "alpha")
_BENCH_KEYS = ("training_fraction", "n_samples", "test_periods", "mf_count",
               "bp_epsilon", "bp_alpha", "mlp_layers", "models")


class _Parser(argparse.ArgumentParser):
    # usage problems are exit code 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_kv(path) -> dict:
    """key=value lines, # comments and blanks ignored."""
    out = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                if "=" not in stripped:
                    raise ConfigError(
                        f"{path}:{lineno}: expected key=value, got {stripped!r}"
                    )
                key, _, value = stripped.partition("=")
                key = key.strip()
                if key in out:
                    raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
                out[key] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return out


def _check_keys(kv: dict, allowed, context: str) -> None:
    unknown = sorted(set(kv) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown {context} config keys {unknown}; allowed: {sorted(allowed)}"
        )


def _parse_layers(text: str) -> tuple:
    try:
        sizes = tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"bad layer list {text!r}") from None
    if len(sizes) < 2 or sizes[0] != 6 or sizes[-1] != 1:
        raise ConfigError(
            f"layer list must run from 6 inputs to 1 output, got {sizes}"
        )
    return sizes


def _norm_extra(stats: NormStats) -> dict:
    return {
        "norm.mins": snapshot.format_array(stats.mins),
        "norm.maxs": snapshot.format_array(stats.maxs),
    }


def _stats_from_extra(extra: dict, path) -> NormStats:
    if "norm.mins" not in extra or "norm.maxs" not in extra:
        raise DataError(
            f"snapshot {path} lacks normalization stats; retrain to forecast"
        )
    return NormStats(snapshot.parse_array(extra["norm.mins"]),
                     snapshot.parse_array(extra["norm.maxs"]))


def _load_records(path, minimum: int):
    records = dataset.parse_csv(path)
    if len(records) < minimum:
        raise DataError(
            f"{path}: need at least {minimum} records, got {len(records)}"
        )
    return records


# -- subcommands -----------------------------------------------------------


def _cmd_synth(args) -> int:
    cfg = dataset.SynthConfig.from_file(args.config) if args.config else None
    records = dataset.synthesize(args.days, args.seed, cfg)
    dataset.write_csv(records, args.out)
    print(f"wrote {len(records)} half-hourly records "
          f"({args.days} days, seed {args.seed}) to {args.out}")
    return 0


def _training_pool(records):
    """Normalized feature vectors for everything before the holdout window."""
    test_start = len(records) - HOLDOUT_PERIODS
    raw = [dataset.encode_features(records, i)
           for i in range(HALF_HOURS_PER_DAY, test_start)]
    stats = dataset.fit_norm(raw)
    return [dataset.apply_norm(v, stats) for v in raw], stats, test_start


def _cmd_train(args) -> int:
    kv = _read_kv(args.config) if args.config else {}

    if args.model == "arima":
        _check_keys(kv, _ARIMA_KEYS, "arima")
        spec_kwargs = {k: int(v) for k, v in kv.items()}
        spec = (arima_mod.ArimaSpec(**spec_kwargs) if spec_kwargs
                else bench.default_arima_spec())
        records = _load_records(args.data, HOLDOUT_PERIODS + 1)
        demand = np.array([r.demand for r in records])
        fit = arima_mod.fit(demand[:-HOLDOUT_PERIODS], spec)
        arima_mod.save(fit, args.out, extra={"trained.rows": str(len(records))})
        print(f"fitted arima {spec.label()} in {fit.iterations} iterations "
              f"(sigma2 {fit.sigma2:.6g}); snapshot {args.out}")
        return 0

    records = _load_records(
        args.data, HALF_HOURS_PER_DAY + HOLDOUT_PERIODS + 1
    )
    pool, stats, _ = _training_pool(records)
    train_x = np.stack([v.x for v in pool])
    train_y = np.array([v.y for v in pool])
    extra = _norm_extra(stats)
    extra["trained.examples"] = str(len(pool))

    if args.model == "efunn":
        _check_keys(kv, _EFUNN_KEYS, "efunn")
        mf_count = int(kv.pop("mf_count", 4))
        cfg_kwargs = {}
        for key, value in kv.items():
            if key in ("m_mode", "activation"):
                cfg_kwargs[key] = value
            elif key == "max_nodes":
                cfg_kwargs[key] = int(value)
            else:
                cfg_kwargs[key] = float(value)
        inputs, output = bench.make_partitions(mf_count)
        model = EfunnModel(EfunnConfig(**cfg_kwargs), inputs, output)
        for x, y in zip(train_x, train_y):
            model.learn_one(x, y)
        train_rmse = mlp.rmse([model.predict(x) for x in train_x],
                              list(train_y))
        model.save(args.out, extra=extra)
        print(f"trained efunn in 1 pass over {len(pool)} examples: "
              f"{model.n_nodes} rule nodes, train rmse {train_rmse:.4f}; "
              f"snapshot {args.out}")
        return 0

    # mlp-bp / mlp-scg
    _check_keys(kv, _MLP_KEYS, "mlp")
    layers = _parse_layers(kv.get("layers", "6,40,40,1"))
    model = mlp.init_mlp(layers, args.seed)
    if args.model == "mlp-bp":
        cfg = mlp.BpConfig(epsilon=float(kv.get("epsilon", 0.01)),
                           alpha=float(kv.get("alpha", 0.9)),
                           epochs=args.epochs)
        trace = mlp.bp_train(model, (train_x, train_y), cfg)
    else:
        trace = mlp.scg_train(model, (train_x, train_y), args.epochs)
    train_rmse = mlp.rmse(mlp.forward_batch(model, train_x), train_y)
    mlp.save(model, args.out, extra=extra)
    print(f"trained {args.model} for {args.epochs} epochs over {len(pool)} "
          f"examples: train rmse {train_rmse:.4f} (first epoch "
          f"{trace[0]:.4f}); snapshot {args.out}")
    return 0


def _cmd_forecast(args) -> int:
    try:
        with open(args.snapshot) as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read snapshot {args.snapshot}: {exc}") from exc
    kind = snapshot.parse_header(text.splitlines()[0] if text else "")

    if kind == "arima":
        fit, _ = arima_mod.from_text(text)
        records = _load_records(args.data, HOLDOUT_PERIODS + 1)
        preds = arima_mod.forecast(fit, HOLDOUT_PERIODS)
    else:
        records = _load_records(
            args.data, HALF_HOURS_PER_DAY + HOLDOUT_PERIODS + 1
        )
        if kind == "efunn":
            model, extra = EfunnModel.from_text(text)
            predict = model.predict
        elif kind == "mlp":
            model, extra = mlp.from_text(text)
            predict = lambda x: mlp.forward(model, x)
        else:
            raise DataError(f"cannot forecast from snapshot kind {kind!r}")
        stats = _stats_from_extra(extra, args.snapshot)
        test_start = len(records) - HOLDOUT_PERIODS
        _, preds = _recursive_forecast(records, stats, predict, test_start,
                                       HOLDOUT_PERIODS)

    test_start = len(records) - HOLDOUT_PERIODS
    actual = np.array([r.demand for r in records[test_start:]])
    lines = ["period,timestamp,actual_mwh,predicted_mwh"]
    for k in range(HOLDOUT_PERIODS):
        ts = records[test_start + k].timestamp.isoformat()
        lines.append(f"{k + 1},{ts},{snapshot.format_float(actual[k])},"
                     f"{snapshot.format_float(preds[k])}")
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    err = mlp.rmse(list(preds), list(actual))
    print(f"forecast {HOLDOUT_PERIODS} periods from {kind} snapshot: "
          f"rmse {err:.1f} MWh; wrote {args.out}")
    return 0


def _cmd_bench(args) -> int:
    kv = _read_kv(args.config) if args.config else {}
    _check_keys(kv, _BENCH_KEYS, "bench")
    cfg_kwargs = dict(seed=args.seed, epochs=args.epochs)
    if args.data:
        cfg_kwargs["csv_path"] = args.data
    else:
        cfg_kwargs["synth_days"] = args.days
    for key, value in kv.items():
        if key == "models":
            cfg_kwargs[key] = tuple(
                t for t in value.replace(",", " ").split() if t
            )
        elif key == "mlp_layers":
            cfg_kwargs[key] = _parse_layers(value)
        elif key in ("n_samples", "test_periods", "mf_count"):
            cfg_kwargs[key] = int(value)
        else:
            cfg_kwargs[key] = float(value)
    config = bench.ExperimentConfig(**cfg_kwargs)
    report = bench.run_experiment(config)
    paths = bench.emit_report(report, args.out)
    print(f"benchmark on {report.test_start + config.test_periods} records "
          f"({report.training_examples} training examples per sample, "
          f"worst of {config.n_samples}):")
    for name in config.models:
        w = report.worst[name]
        detail = f"{w.nodes} rule nodes" if name == "efunn" else f"{w.epochs} epochs"
        print(f"  {name:8s} test rmse {w.test_rmse:.4f}  ({detail})")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_rules(args) -> int:
    model, _ = EfunnModel.load(args.snapshot)
    rules = model.extract_rules()
    lines = [r.text() for r in rules]
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
        print(f"wrote {len(lines)} rules to {args.out}")
    else:
        for line in lines:
            print(line)
    return 0


# -- wiring ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="demandcast",
                     description="short-term electricity demand forecasting")
    parser.add_argument("--version", action="version",
                        version=f"demandcast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic demand CSV")
    p.add_argument("--days", type=int, default=90)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="generator settings, key=value lines")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser(
        "train",
        help="train one model, holding out the final 96 half-hours",
    )
    p.add_argument("--model", required=True,
                   choices=["efunn", "mlp-bp", "mlp-scg", "arima"])
    p.add_argument("--data", required=True, help="demand CSV")
    p.add_argument("--out", required=True, help="snapshot path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=2500)
    p.add_argument("--config", help="model settings, key=value lines")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser(
        "forecast",
        help="predict the final 96 half-hours of a CSV from a snapshot",
    )
    p.add_argument("--snapshot", required=True)
    p.add_argument("--data", required=True,
                   help="demand CSV (for arima, the training CSV)")
    p.add_argument("--out", required=True, help="forecast CSV path")
    p.set_defaults(func=_cmd_forecast)

    p = sub.add_parser("bench", help="run the full model comparison")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--data", help="demand CSV; default is synthetic data")
    src.add_argument("--days", type=int, default=90,
                     help="synthetic series length")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=2500)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--config", help="protocol settings, key=value lines")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("rules", help="print the rules of a fuzzy snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out", help="write rules here instead of stdout")
    p.set_defaults(func=_cmd_rules)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version, or a usage error
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConvergenceError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DemandcastError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

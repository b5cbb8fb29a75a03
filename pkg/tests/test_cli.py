import subprocess
import sys

import pytest

from demandcast import dataset
from demandcast.cli import main


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "demand.csv"
    assert main(["synth", "--days", "40", "--seed", "3",
                 "--out", str(path)]) == 0
    return path


def test_synth_writes_parseable_csv(data_csv):
    records = dataset.parse_csv(data_csv)
    assert len(records) == 40 * 48


def test_synth_accepts_generator_config(tmp_path):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("base=5000\nweekend_drop=200\n")
    out = tmp_path / "demand.csv"
    assert main(["synth", "--days", "2", "--seed", "0", "--out", str(out),
                 "--config", str(cfg)]) == 0
    assert len(dataset.parse_csv(out)) == 96


def test_train_and_forecast_efunn(data_csv, tmp_path, capsys):
    snap = tmp_path / "efunn.snap"
    assert main(["train", "--model", "efunn", "--data", str(data_csv),
                 "--out", str(snap)]) == 0
    assert snap.read_text().startswith("demandcast-snapshot v1 kind=efunn")
    out = capsys.readouterr().out
    assert "1 pass" in out

    fc = tmp_path / "fc.csv"
    assert main(["forecast", "--snapshot", str(snap), "--data", str(data_csv),
                 "--out", str(fc)]) == 0
    lines = fc.read_text().splitlines()
    assert lines[0] == "period,timestamp,actual_mwh,predicted_mwh"
    assert len(lines) == 97


def test_train_and_forecast_mlp(data_csv, tmp_path):
    snap = tmp_path / "mlp.snap"
    assert main(["train", "--model", "mlp-scg", "--data", str(data_csv),
                 "--out", str(snap), "--epochs", "3", "--seed", "1"]) == 0
    assert snap.read_text().startswith("demandcast-snapshot v1 kind=mlp")
    fc = tmp_path / "fc.csv"
    assert main(["forecast", "--snapshot", str(snap), "--data", str(data_csv),
                 "--out", str(fc)]) == 0
    assert len(fc.read_text().splitlines()) == 97


def test_train_and_forecast_arima(data_csv, tmp_path):
    snap = tmp_path / "arima.snap"
    assert main(["train", "--model", "arima", "--data", str(data_csv),
                 "--out", str(snap)]) == 0
    assert snap.read_text().startswith("demandcast-snapshot v1 kind=arima")
    fc = tmp_path / "fc.csv"
    assert main(["forecast", "--snapshot", str(snap), "--data", str(data_csv),
                 "--out", str(fc)]) == 0
    assert len(fc.read_text().splitlines()) == 97


def test_train_arima_accepts_order_config(data_csv, tmp_path):
    cfg = tmp_path / "order.cfg"
    cfg.write_text("p=0\nd=1\nq=0\n")
    snap = tmp_path / "rw.snap"
    assert main(["train", "--model", "arima", "--data", str(data_csv),
                 "--out", str(snap), "--config", str(cfg)]) == 0
    assert "spec.d=1" in snap.read_text()


def test_rules_prints_if_then_lines(data_csv, tmp_path, capsys):
    snap = tmp_path / "efunn.snap"
    main(["train", "--model", "efunn", "--data", str(data_csv),
          "--out", str(snap)])
    capsys.readouterr()
    assert main(["rules", "--snapshot", str(snap)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("IF ")
    assert "THEN demand is" in out

    rules_file = tmp_path / "rules.txt"
    assert main(["rules", "--snapshot", str(snap),
                 "--out", str(rules_file)]) == 0
    assert rules_file.read_text().startswith("IF ")


def test_bench_writes_report_directory(tmp_path):
    out = tmp_path / "rep"
    cfg = tmp_path / "bench.cfg"
    cfg.write_text("n_samples=2\nmodels=efunn arima\n")
    assert main(["bench", "--days", "40", "--seed", "2", "--epochs", "4",
                 "--out", str(out), "--config", str(cfg)]) == 0
    for name in ("report.csv", "forecast.csv", "convergence.csv",
                 "forecast.svg"):
        assert (out / name).exists()


def test_usage_problems_exit_1(tmp_path, capsys):
    assert main([]) == 1
    assert main(["nonsense"]) == 1
    assert main(["train", "--model", "efunn"]) == 1  # missing required flags
    assert main(["train", "--model", "tree", "--data", "x", "--out", "y"]) == 1
    capsys.readouterr()


def test_missing_and_malformed_data_exit_1(tmp_path, capsys):
    assert main(["train", "--model", "efunn", "--data",
                 str(tmp_path / "absent.csv"), "--out",
                 str(tmp_path / "m.snap")]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("wrong,header\n")
    assert main(["train", "--model", "efunn", "--data", str(bad),
                 "--out", str(tmp_path / "m.snap")]) == 1
    err = capsys.readouterr().err
    assert "error:" in err


def test_short_series_exits_1(tmp_path, capsys):
    short = tmp_path / "short.csv"
    main(["synth", "--days", "2", "--seed", "0", "--out", str(short)])
    assert main(["train", "--model", "efunn", "--data", str(short),
                 "--out", str(tmp_path / "m.snap")]) == 1
    capsys.readouterr()


def test_unknown_config_key_exits_1(data_csv, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("warp_speed=9\n")
    assert main(["train", "--model", "efunn", "--data", str(data_csv),
                 "--out", str(tmp_path / "m.snap"),
                 "--config", str(cfg)]) == 1
    capsys.readouterr()


def test_divergent_training_exits_2(data_csv, tmp_path, capsys):
    cfg = tmp_path / "hot.cfg"
    cfg.write_text("epsilon=1e9\nalpha=0.9\n")
    code = main(["train", "--model", "mlp-bp", "--data", str(data_csv),
                 "--out", str(tmp_path / "m.snap"), "--epochs", "50",
                 "--config", str(cfg)])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_forecast_without_norm_stats_exits_1(data_csv, tmp_path, capsys):
    from demandcast import mlp
    snap = tmp_path / "bare.snap"
    mlp.save(mlp.init_mlp((6, 4, 1), seed=0), snap)  # no extras
    assert main(["forecast", "--snapshot", str(snap),
                 "--data", str(data_csv),
                 "--out", str(tmp_path / "fc.csv")]) == 1
    capsys.readouterr()


def test_version_exits_0(capsys):
    assert main(["--version"]) == 0
    capsys.readouterr()


def test_console_script_is_installed():
    proc = subprocess.run([sys.executable, "-m", "demandcast", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "demandcast" in proc.stdout

import csv
import json

import pytest

from regimecast.cli import main
from regimecast.series import load_csv

FAST = [
    "--set", "synthetic.regimes=sine:length=60,period=20.0 | trend:length=60,start=1.0,slope=0.02",
    "--set", "synthetic.cycles=2",
    "--set", "train.epochs=15",
    "--set", "train.fine_tune_epochs=10",
]


def read_report(out_dir):
    with open(out_dir / "report.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "runout"
    code = main(["run", "--strategy", "offline_tune", "--seed", "3",
                 "--out", str(out), *FAST])
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"config.txt", "report.csv", "report.json",
            "trace_offline_tune_linear_ar.jsonl",
            "events_offline_tune_linear_ar.jsonl",
            "summary_offline_tune_linear_ar.json"} <= names
    rows = read_report(out)
    assert len(rows) == 1
    assert rows[0]["strategy"] == "offline_tune"
    assert rows[0]["dataset"] == "synthetic"
    assert float(rows[0]["nrmse"]) > 0
    stdout = capsys.readouterr().out
    assert "nrmse=" in stdout and str(out) in stdout


def test_set_and_seed_visible_in_config_echo(tmp_path):
    out = tmp_path / "echo"
    assert main(["run", "--strategy", "base", "--seed", "9",
                 "--out", str(out), *FAST]) == 0
    text = (out / "config.txt").read_text()
    assert "seed = 9" in text
    assert "train.epochs = 15" in text


def test_error_exit_codes(tmp_path, capsys):
    assert main(["run", "--set", "train.epoch=5", "--out", str(tmp_path / "a")]) == 1
    assert "unknown config key" in capsys.readouterr().err
    assert main(["run", "--data", str(tmp_path / "missing.csv"),
                 "--out", str(tmp_path / "b")]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["compare", "--strategies", "base", "--out", str(tmp_path / "c")]) == 1
    assert main(["compare", "--strategies", "base,base", "--out", str(tmp_path / "d")]) == 1
    assert main(["compare", "--strategies", "base,warp", "--out", str(tmp_path / "e")]) == 1
    assert main(["no-such-command"]) == 1
    assert main(["--help"]) == 0
    capsys.readouterr()


def test_compare_zero_timings_byte_identical(tmp_path, capsys):
    args = ["compare", "--strategies", "base,offline_tune", "--seed", "4",
            "--zero-timings", *FAST]
    out1, out2 = tmp_path / "one", tmp_path / "two"
    assert main([*args, "--out", str(out1)]) == 0
    assert main([*args, "--out", str(out2)]) == 0
    assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    capsys.readouterr()


def test_compare_workers_match_serial(tmp_path, capsys):
    args = ["compare", "--strategies", "base,offline_tune", "--seed", "5",
            "--zero-timings", *FAST,
            "--variant", "lin:model.kind=linear_ar",
            "--variant", "mlp4:model.kind=mlp,model.hidden=4"]
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    assert main([*args, "--workers", "1", "--out", str(serial)]) == 0
    assert main([*args, "--workers", "2", "--out", str(parallel)]) == 0
    assert (serial / "report.csv").read_bytes() == (parallel / "report.csv").read_bytes()
    echo = (serial / "config.txt").read_text()
    assert "# variant lin: model.kind=linear_ar" in echo
    assert "# variant mlp4:" in echo
    models = {r["model"] for r in read_report(serial)}
    assert models == {"lin", "mlp4"}
    capsys.readouterr()


def test_compare_plot_data_files(tmp_path, capsys):
    out = tmp_path / "plots"
    assert main(["compare", "--strategies", "base,offline_tune", "--seed", "1",
                 "--plot-data", "--out", str(out), *FAST]) == 0
    files = sorted(p.name for p in (out / "plot_data").iterdir())
    assert files == ["errors_synthetic_linear_ar_base.csv",
                     "errors_synthetic_linear_ar_offline_tune.csv"]
    capsys.readouterr()


def test_variant_name_collisions_rejected(tmp_path, capsys):
    base = ["compare", "--strategies", "base,offline_tune", "--out", str(tmp_path)]
    assert main([*base, "--variant", "a:seed=1", "--variant", "a:seed=2"]) == 1
    assert "duplicate" in capsys.readouterr().err
    capsys.readouterr()


def test_synth_round_trip(tmp_path, capsys):
    csv_path = tmp_path / "series.csv"
    assert main(["synth", str(csv_path), "--seed", "2", *FAST]) == 0
    series = load_csv(csv_path, column="value")
    assert series.name == "series"
    assert len(series.values) == 240
    out = tmp_path / "fromfile"
    assert main(["run", "--strategy", "base", "--data", str(csv_path),
                 "--column", "value", "--out", str(out), *FAST]) == 0
    rows = read_report(out)
    assert rows[0]["dataset"] == "series"
    capsys.readouterr()


def test_inspect_clusters_outputs(tmp_path, capsys):
    out = tmp_path / "clusters"
    assert main(["inspect-clusters", "--seed", "0", "--out", str(out), *FAST]) == 0
    payload = json.loads((out / "clusters.json").read_text())
    assert payload["dataset"] == "synthetic"
    assert payload["window_len"] == 10
    assert payload["novelty_threshold"] > 0
    k = payload["clustering"]["k"]
    assert k >= 1
    traces = sorted(p.name for p in out.iterdir() if p.name.startswith("cluster_"))
    assert len(traces) == k
    assert "clusters over" in capsys.readouterr().out


def test_pool_save_then_load_matches_fresh(tmp_path, capsys):
    pool_path = tmp_path / "pool.json"
    fresh = tmp_path / "fresh"
    loaded = tmp_path / "loaded"
    common = ["--strategy", "offline_tune", "--seed", "6", "--zero-timings", *FAST]
    assert main(["run", *common, "--save-pool", str(pool_path),
                 "--out", str(fresh)]) == 0
    assert pool_path.is_file()
    assert main(["run", *common, "--load-pool", str(pool_path),
                 "--out", str(loaded)]) == 0
    assert read_report(fresh)[0]["nrmse"] == read_report(loaded)[0]["nrmse"]
    capsys.readouterr()


def test_pool_flags_reject_base_strategy(tmp_path, capsys):
    assert main(["run", "--strategy", "base", "--save-pool", str(tmp_path / "p.json"),
                 "--out", str(tmp_path / "x"), *FAST]) == 1
    assert "pool strategy" in capsys.readouterr().err


def test_load_pool_model_mismatch(tmp_path, capsys):
    pool_path = tmp_path / "pool.json"
    assert main(["run", "--strategy", "offline_tune", "--seed", "1", *FAST,
                 "--save-pool", str(pool_path), "--out", str(tmp_path / "a")]) == 0
    code = main(["run", "--strategy", "offline_tune", "--seed", "1", *FAST,
                 "--set", "model.kind=mlp", "--set", "model.hidden=4",
                 "--load-pool", str(pool_path), "--out", str(tmp_path / "b")])
    assert code == 1
    assert "loaded pool was built for" in capsys.readouterr().err

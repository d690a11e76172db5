import json

import pytest

import tsrcv.cli as cli
from tsrcv.cli import main
from tsrcv.curves import derive_seed, read_curve
from tsrcv.errors import NotPositiveDefinite


@pytest.fixture
def small(tmp_path):
    out = tmp_path / "data"
    assert main(["generate", "--seed", "7", "--n-train", "40", "--n-oos", "8", "--out-dir", str(out)]) == 0
    return out


def test_generate_defaults(tmp_path):
    assert main(["generate", "--seed", "42", "--out-dir", str(tmp_path)]) == 0
    assert len((tmp_path / "train.csv").read_text().splitlines()) == 1001
    assert len((tmp_path / "oos.csv").read_text().splitlines()) == 251
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 42
    assert manifest["config"]["ou"] == {"n_train": 1000, "n_oos": 250, "dt": 0.1, "t0": 0.0, "mu": 5.0}
    assert set(manifest["outputs"]) == {"train.csv", "oos.csv"}


def test_generate_no_oos(tmp_path):
    assert main(["generate", "--seed", "1", "--n-oos", "0", "--n-train", "20", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "oos.csv").read_text() == "t,y\n"


def test_generate_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["generate", "--seed", "5", "--n-train", "100", "--out-dir", str(tmp_path / d)]) == 0
    for name in ("train.csv", "oos.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_rcv_toy(small, tmp_path, capsys):
    out = tmp_path / "r"
    code = main(["rcv", str(small / "train.csv"), str(small / "oos.csv"), "--seed", "3",
                 "--k", "2", "--residuals", "--out-dir", str(out)])
    assert code == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    fields = dict(part.split("=") for part in line.split())
    report = json.loads((out / "report.json").read_text())
    agg = report["aggregate"]
    assert float(fields["g_r"]) == agg["g_r"] and float(fields["g_p"]) == agg["g_p"]
    assert agg["g_rcv"] == agg["g_r"] * agg["g_p"]
    assert len((out / "residuals.csv").read_text().splitlines()) == 41
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"report.json", "residuals.csv"}
    assert len(manifest["inputs"]) == 2


def test_malformed_csv_names_row(small, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,y\n0,5\n0.1,5.2\n0.2,oops\n")
    code = main(["rcv", str(bad), str(small / "oos.csv"), "--seed", "1", "--out-dir", str(tmp_path)])
    assert code == 1
    assert "bad.csv:4" in capsys.readouterr().err


def test_missing_file_is_io_error(tmp_path):
    assert main(["rcv", str(tmp_path / "nope.csv"), str(tmp_path / "x.csv"), "--seed", "1"]) == 3


def test_seed_required(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("RCV_SEED", raising=False)
    assert main(["generate", "--out-dir", str(tmp_path)]) == 1
    assert "seed" in capsys.readouterr().err


def test_env_seed_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("RCV_SEED", "5")
    assert main(["generate", "--n-train", "100", "--out-dir", str(tmp_path / "env")]) == 0
    monkeypatch.delenv("RCV_SEED")
    assert main(["generate", "--seed", "5", "--n-train", "100", "--out-dir", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "env" / "train.csv").read_bytes() == (tmp_path / "flag" / "train.csv").read_bytes()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 9, "ou": {"n_train": 30, "n_oos": 5}, "kernel": {"ridge": 0.5}}))
    assert main(["generate", "--config", str(cfg), "--n-oos", "3", "--out-dir", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 9
    assert manifest["config"]["ou"]["n_train"] == 30 and manifest["config"]["ou"]["n_oos"] == 3
    assert manifest["config"]["kernel"]["ridge"] == 0.5


@pytest.mark.parametrize("doc", [{"ou": {"n_trian": 3}}, {"bogus": {}}, {"ou": {"dt": -1}, "seed": 1}])
def test_bad_config(tmp_path, doc):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    assert main(["generate", "--config", str(cfg), "--seed", "1", "--out-dir", str(tmp_path)]) == 1


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["rcv"])
    assert info.value.code == 1


def test_numerical_failure_exit_code(small, tmp_path, monkeypatch):
    def fail(*a, **kw):
        raise NotPositiveDefinite("fold 1 of 10: factorization failed")

    monkeypatch.setattr(cli, "run_rcv", fail)
    assert main(["rcv", str(small / "train.csv"), str(small / "oos.csv"), "--seed", "1",
                 "--out-dir", str(tmp_path)]) == 2


def test_manifest_reproduces_run(small, tmp_path):
    args = [str(small / "train.csv"), str(small / "oos.csv")]
    assert main(["rcv", *args, "--seed", "11", "--k", "4", "--ridge", "0.7", "--out-dir", str(tmp_path / "a")]) == 0
    assert main(["rcv", *args, "--config", str(tmp_path / "a" / "manifest.json"),
                 "--out-dir", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_sweep_single_k_matches_rcv(small, tmp_path, capsys):
    args = [str(small / "train.csv"), str(small / "oos.csv")]
    assert main(["sweep", *args, "--seed", "42", "--k", "10", "--replicates", "1",
                 "--out-dir", str(tmp_path / "s")]) == 0
    (point,) = read_curve(tmp_path / "s" / "curve.csv").points
    seed = derive_seed(42, 10, 0)
    assert main(["rcv", *args, "--seed", str(seed), "--k", "10", "--out-dir", str(tmp_path / "r")]) == 0
    agg = json.loads((tmp_path / "r" / "report.json").read_text())["aggregate"]
    assert (point.g_r_mean, point.g_p_mean, point.g_rcv_mean) == (agg["g_r"], agg["g_p"], agg["g_rcv"])
    manifest = json.loads((tmp_path / "s" / "manifest.json").read_text())
    assert manifest["notes"]["derived_seeds"] == {"10": [seed]}


def test_sweep_k_range(small, tmp_path):
    args = [str(small / "train.csv"), str(small / "oos.csv")]
    assert main(["sweep", *args, "--seed", "1", "--k-range", "2:4", "--replicates", "2",
                 "--out-dir", str(tmp_path)]) == 0
    assert read_curve(tmp_path / "curve.csv").ks() == [2, 3, 4]
    assert main(["sweep", *args, "--seed", "1", "--k-range", "2,6", "--replicates", "1",
                 "--out-dir", str(tmp_path)]) == 0
    assert read_curve(tmp_path / "curve.csv").ks() == [2, 6]


def test_module_entry_point_help():
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0

import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from corrx import cli
from corrx.exceptions import EstimationError


def schema(name):
    return json.loads(resources.files("corrx").joinpath(f"schemas/{name}.schema.json").read_text())


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert cli.main(["simulate", "--T", "1300", "--seed", "4", "--out-dir", str(out)]) == 0
    return out


def common(sim_dir):
    return ["--input", str(sim_dir / "returns.csv"), "--input-kind", "returns",
            "--exog", str(sim_dir / "exog.csv")]


def test_simulate_outputs(sim_dir):
    cfg = json.loads((sim_dir / "sim_config.json").read_text())
    jsonschema.validate(cfg, schema("sim_config"))
    lines = (sim_dir / "returns.csv").read_text().splitlines()
    assert lines[0] == "date,A1,A2,A3" and len(lines) == 1301


def test_stats(sim_dir, tmp_path, capsys):
    assert cli.main(["stats", *common(sim_dir), "--out-dir", str(tmp_path)]) == 0
    rows = (tmp_path / "stats.csv").read_text().splitlines()
    assert rows[0] == "series,mean,std,skewness,kurtosis" and len(rows) == 5


def test_estimate_report_and_schema(sim_dir, tmp_path, capsys):
    assert cli.main(["estimate", *common(sim_dir), "--spec", "none,tpu", "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    for token in ("Panel a", "Panel b", "Panel c", "AIC", "BIC", "LR vs DCC", "theta3"):
        assert token in out
    for name in ("DCC", "DCC-X_TPU"):
        jsonschema.validate(json.loads((tmp_path / f"fit_{name}.json").read_text()), schema("fit"))
    head = (tmp_path / "rpath_DCC.csv").read_text().splitlines()
    assert head[0] == "date,asset_i,asset_j,rho" and len(head) == 1 + 1300 * 3


def test_custom_spec_rows(sim_dir, tmp_path, capsys):
    exog = tmp_path / "exog3.csv"
    base = (sim_dir / "exog.csv").read_text().splitlines()
    rng = np.random.default_rng(0)
    lines = ["date,TPU,VIX,EPU"] + [f"{l},{rng.lognormal():.6f},{rng.lognormal():.6f}" for l in base[1:]]
    exog.write_text("\n".join(lines) + "\n")
    args = ["estimate", "--input", str(sim_dir / "returns.csv"), "--input-kind", "returns",
            "--exog", str(exog), "--spec", "custom", "--regressors", "TPU,VIX,EPU",
            "--out-dir", str(tmp_path)]
    assert cli.main(args) == 0
    out = capsys.readouterr().out
    assert "theta3" in out and "theta4" in out and "theta5" in out


def test_deterministic_outputs(sim_dir, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["estimate", *common(sim_dir), "--spec", "tpu", "--out-dir", str(a)]) == 0
    assert cli.main(["estimate", *common(sim_dir), "--spec", "tpu", "--out-dir", str(b),
                     "--jobs", "2"]) == 0
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_forecast_evaluate(sim_dir, tmp_path, capsys):
    args = [*common(sim_dir), "--out-dir", str(tmp_path)]
    assert cli.main(["forecast", *args, "--spec", "none,tpu", "--split", "2004-11-30"]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    jsonschema.validate(manifest, schema("manifest"))
    assert manifest["rows"]["DCC"] > 0
    assert cli.main(["evaluate", *args, "--bootstrap-reps", "500"]) == 0
    for loss in ("frobenius", "qlike", "gmv", "rpv"):
        res = json.loads((tmp_path / f"mcs_{loss}.json").read_text())
        jsonschema.validate(res, schema("mcs"))
    first = (tmp_path / "mcs_gmv.json").read_bytes()
    assert cli.main(["evaluate", *args, "--bootstrap-reps", "500"]) == 0
    assert (tmp_path / "mcs_gmv.json").read_bytes() == first


def test_evaluate_identical_forecasts(sim_dir, tmp_path):
    args = [*common(sim_dir), "--out-dir", str(tmp_path)]
    assert cli.main(["forecast", *args, "--spec", "tpu", "--split", "2004-11-30"]) == 0
    src = tmp_path / "forecast_DCC-X_TPU.csv"
    (tmp_path / "copy.csv").write_bytes(src.read_bytes())
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    manifest["models"].append("copy")
    manifest["files"]["copy"] = "copy.csv"
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    assert cli.main(["evaluate", *args, "--bootstrap-reps", "200", "--losses", "qlike"]) == 0
    res = json.loads((tmp_path / "mcs_qlike.json").read_text())
    assert res["pvalues"] == {"DCC-X_TPU": 1.0, "copy": 1.0}


def test_irf_and_roll(sim_dir, tmp_path):
    args = [*common(sim_dir), "--out-dir", str(tmp_path)]
    assert cli.main(["irf", *args, "--spec", "tpu", "--pair", "A1,A2", "--horizon", "80"]) == 0
    jsonschema.validate(json.loads((tmp_path / "irf.json").read_text()), schema("irf"))
    assert len((tmp_path / "irf.csv").read_text().splitlines()) == 82
    assert cli.main(["roll", *args, "--spec", "tpu", "--window", "1200", "--step", "50"]) == 0
    assert (tmp_path / "rolling_corr.csv").read_text().startswith("date,value,flag\n")
    assert (tmp_path / "rolling_theta.csv").read_text().startswith("date,theta3,converged\n")


def test_irf_default_spec(sim_dir, tmp_path):
    args = [*common(sim_dir), "--out-dir", str(tmp_path)]
    assert cli.main(["irf", *args, "--regressor", "TPU"]) == 0
    assert json.loads((tmp_path / "irf.json").read_text())["regressor"] == "TPU"
    assert cli.main(["irf", *args, "--regressor", "missing"]) == 2


def test_break_sign(tmp_path, capsys):
    sim = tmp_path / "sim"
    assert cli.main(["simulate", "--T", "3000", "--seed", "2", "--theta", "0.05,0.9,0.04",
                     "--break-index", "1500", "--break-delta", "-0.03", "--out-dir", str(sim)]) == 0
    from corrx.simulate import business_days

    bd = str(business_days("2000-01-03", 3000)[1500])
    args = ["break-test", "--input", str(sim / "returns.csv"), "--input-kind", "returns",
            "--exog", str(sim / "exog.csv"), "--break-dates", bd, "--out-dir", str(tmp_path)]
    assert cli.main(args) == 0
    res = json.loads((tmp_path / "break.json").read_text())
    jsonschema.validate(res, schema("break"))
    assert res["results"][0]["delta"] < 0


def test_config_file_and_flag_precedence(sim_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input": str(sim_dir / "returns.csv"), "input_kind": "returns",
                               "out_dir": str(tmp_path / "fromcfg"), "spec": "none"}))
    assert cli.main(["stats", "--config", str(cfg)]) == 0
    assert (tmp_path / "fromcfg" / "stats.csv").exists()
    assert cli.main(["stats", "--config", str(cfg), "--out-dir", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "stats.csv").exists()
    cfg.write_text(json.dumps({"bogus": 1}))
    assert cli.main(["stats", "--config", str(cfg)]) == 2


@pytest.mark.parametrize("argv", [
    ["stats", "--input", "/nonexistent.csv"],
    ["estimate"],
    ["forecast", "--input", "x.csv"],
])
def test_input_errors_exit_2(argv, tmp_path, capsys):
    assert cli.main([*argv, "--out-dir", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_spec_and_missing_manifest(sim_dir, tmp_path):
    assert cli.main(["estimate", *common(sim_dir), "--spec", "bogus", "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["evaluate", *common(sim_dir), "--out-dir", str(tmp_path / "empty")]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["nosuchcommand"])
    assert info.value.code == 2


def test_computational_failure_exit_1(sim_dir, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise EstimationError("did not converge")

    monkeypatch.setattr(cli, "two_step_fit", boom)
    assert cli.main(["estimate", *common(sim_dir), "--spec", "tpu", "--out-dir", str(tmp_path)]) == 1

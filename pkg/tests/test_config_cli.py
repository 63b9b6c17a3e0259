import json
from pathlib import Path

import pytest

from infocap.cli import main
from infocap.config import (ConfigError, dumps_config, load_config,
                            loads_config)
from infocap.scenarios import run_scenario

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
SHIPPED = sorted(CONFIG_DIR.glob("*.toml"))


def test_shipped_configs_exist():
    assert len(SHIPPED) >= 7


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.stem)
def test_config_roundtrip(path):
    cfg = load_config(path)
    again = loads_config(dumps_config(cfg))
    assert again.data == cfg.data
    assert again.kind == cfg.kind and again.seed == cfg.seed


def test_unknown_top_level_key_rejected():
    with pytest.raises(ConfigError, match="unknown key 'bogus'"):
        loads_config('kind = "fisher"\nbogus = 1\n')


def test_unknown_table_key_rejected():
    text = 'kind = "fisher"\n[model]\nfamily = "gaussian"\ntypo_key = 2\n'
    with pytest.raises(ConfigError, match="typo_key"):
        loads_config(text)


def test_unknown_table_for_kind_rejected():
    text = 'kind = "fourier"\n[estimator]\nname = "identity"\n'
    with pytest.raises(ConfigError, match=r"\[estimator\] not allowed"):
        loads_config(text)


def test_unknown_kind_rejected():
    with pytest.raises(ConfigError, match="unknown scenario kind"):
        loads_config('kind = "alchemy"\n')


def test_wrong_type_rejected():
    with pytest.raises(ConfigError, match="type"):
        loads_config('kind = "fisher"\nseed = "ten"\n')


def test_missing_kind_rejected():
    with pytest.raises(ConfigError, match="kind"):
        loads_config('seed = 1\n')


def test_cli_run_pass(tmp_path):
    rc = main(["run", str(CONFIG_DIR / "gaussian_cr.toml"),
               "--out", str(tmp_path), "--format", "csv"])
    assert rc == 0
    report = json.loads((tmp_path / "gaussian_cr.report.json").read_text())
    assert report["passed"] is True
    assert any(c["name"] == "regularity_identity" for c in report["checks"])
    assert (tmp_path / "gaussian_cr.table.csv").exists()


def test_cli_run_minkowski_findings(tmp_path):
    rc = main(["run", str(CONFIG_DIR / "minkowski_gaussian.toml"),
               "--out", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "minkowski_gaussian.report.json").read_text())
    assert report["results"]["capacity"] == pytest.approx(-2.0, abs=1e-8)
    names = {f["name"] for f in report["findings"]}
    assert "causality_violation" in names and "stam_undefined" in names


def test_cli_malformed_config_exit_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('kind = "fisher"\nmystery = 3\n')
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 2


def test_cli_missing_file_exit_2(tmp_path):
    assert main(["run", str(tmp_path / "nope.toml")]) == 2


def test_cli_missing_field_key_exit_2(tmp_path):
    cfg = tmp_path / "incomplete.toml"
    cfg.write_text("""
kind = "kinematic"

[metric]
kind = "euclidean"
dim = 1

[grid]
extents = [[-1.0, 1.0]]
points = [32]

[field]
constructor = "gaussian"
""")
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 2


def test_cli_numerical_failure_exit_1(tmp_path):
    # impossible tolerance override forces a failing check
    cfg = tmp_path / "strict.toml"
    cfg.write_text("""
kind = "kinematic"
seed = 5

[metric]
kind = "euclidean"
dim = 1

[grid]
extents = [[-10.0, 10.0]]
points = [128]
boundary = "truncated"

[field]
constructor = "gaussian"
widths = [1.0]

[tolerances]
normalization = 1e-300
""")
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 1


def test_cli_sweep(tmp_path):
    rc = main(["sweep", str(CONFIG_DIR / "sweep_euclidean.toml"),
               "--n-max", "3", "--out", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "sweep_euclidean.report.json").read_text())
    rows = report["results"]["rows"]
    assert [r["channels"] for r in rows] == [1, 2, 3]
    assert rows[-1]["capacity"] == pytest.approx(9.0)
    assert report["results"]["monotone"] is True
    assert (tmp_path / "sweep_euclidean.table.csv").exists()


def test_cli_sweep_single_row(tmp_path):
    rc = main(["sweep", str(CONFIG_DIR / "sweep_euclidean.toml"),
               "--n-max", "1", "--out", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "sweep_euclidean.report.json").read_text())
    assert len(report["results"]["rows"]) == 1


def test_cli_sweep_minkowski_not_applicable(tmp_path):
    cfg = tmp_path / "mink_sweep.toml"
    cfg.write_text("""
kind = "sweep"
seed = 3

[model]
family = "gaussian"
channels = 1
obs_dim = 4
theta = [[0.0, 0.0, 0.0, 0.0]]
covariance = 1.0

[metric]
kind = "minkowski"
dim = 4

[method]
name = "analytic"

[sweep]
n_max = 3
""")
    rc = main(["sweep", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "mink_sweep.report.json").read_text())
    assert report["results"]["monotone"] is None
    assert any(f["name"] == "monotonicity_not_applicable"
               for f in report["findings"])


def test_cli_sweep_rejects_other_kinds(tmp_path):
    assert main(["sweep", str(CONFIG_DIR / "gaussian_cr.toml"),
                 "--out", str(tmp_path)]) == 2


def test_cli_run_rejects_sweep_kind(tmp_path):
    assert main(["run", str(CONFIG_DIR / "sweep_euclidean.toml"),
                 "--out", str(tmp_path)]) == 2


def test_report_determinism():
    cfg = load_config(CONFIG_DIR / "gaussian_cr.toml")

    def render():
        rep = run_scenario(cfg)
        rep.pop("_csv_rows", None)
        rep.pop("timestamp_utc")
        return json.dumps(rep, indent=2, sort_keys=True)

    assert render() == render()


def test_seed_override_changes_mc_results():
    cfg = load_config(CONFIG_DIR / "gaussian_cr.toml")
    a = run_scenario(cfg, seed_override=1)
    b = run_scenario(cfg, seed_override=2)
    assert a["results"]["per_channel"][0]["sigma2"] \
        != b["results"]["per_channel"][0]["sigma2"]


def test_cli_verify_filter(tmp_path, capsys):
    rc = main(["verify", "--filter", "mass", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "[PASS] 07" in out
    summary = json.loads((tmp_path / "verify.json").read_text())
    assert summary["passed"] is True
    tags = {c["tag"] for c in summary["criteria"]}
    assert tags == {"mass", "euclidean-mass"}


def test_cli_verify_unknown_filter(tmp_path):
    assert main(["verify", "--filter", "zzz", "--out", str(tmp_path)]) == 2


def test_out_dir_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv("INFOCAP_OUT", str(tmp_path / "envout"))
    rc = main(["run", str(CONFIG_DIR / "maxwell_mode.toml")])
    assert rc == 0
    assert (tmp_path / "envout" / "maxwell_mode.report.json").exists()

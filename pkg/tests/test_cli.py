"""Command-line interface: config handling, scenarios, exit codes."""

import json
import math
import os

import numpy as np
import pytest

from qscatter import cli
from qscatter.errors import ConfigError

FAST = dict(d=3, n_modes=8, n_mc=16)


def _cfg(scenario="baseline", **kw):
    merged = dict(FAST, scenario=scenario)
    merged.update(kw)
    return cli.ScenarioConfig(**merged)


@pytest.mark.parametrize("overrides", [
    {"scenario": "nonsense"},
    {"d": 4},
    {"d": 11, "n_modes": 8},
    {"exposure": 0.0},
    {"exposure": -5.0},
    {"dark_rate": -0.1},
    {"reference_amplitude": 0.0},
    {"n_mc": -1},
    {"scan_family": "tilted:0"},
    {"scan_family": "mub:7"},
    {"seed": 1.5},
])
def test_scenario_config_rejects_bad_settings(overrides):
    with pytest.raises(ConfigError):
        _cfg(**overrides)


def test_config_dict_round_trip():
    cfg = _cfg("tomography", exposure=math.inf, seed=9, scan_family="mub:1")
    data = cli.config_to_dict(cfg)
    assert data["exposure"] == "inf"
    back = cli.config_from_dict(data)
    assert back == cfg
    finite = _cfg("baseline", exposure=2e4)
    assert cli.config_from_dict(cli.config_to_dict(finite)) == finite


def test_run_scenario_baseline_noiseless(tmp_path):
    out = str(tmp_path / "base")
    report = cli.run_scenario(_cfg(exposure=math.inf), out)
    assert report["schema"] == "report_v1"
    assert report["scenario"] == "baseline"
    res = report["results"]
    assert res["method"] == "exact"
    assert res["fidelity"] == pytest.approx(1.0, abs=1e-9)
    assert res["d_ent"] == 3
    assert res["entangled"] is True
    assert os.path.exists(os.path.join(out, "config.json"))
    assert os.path.exists(os.path.join(out, "report.json"))
    assert os.path.exists(os.path.join(out, "tables", "standard.csv"))
    assert os.path.exists(os.path.join(out, "tables", "mub_2.csv"))
    with open(os.path.join(out, "report.json"), encoding="ascii") as fh:
        on_disk = json.load(fh)
    assert on_disk["results"]["d_ent"] == 3


def test_run_scenario_scramble_kills_correlations(tmp_path):
    report = cli.run_scenario(_cfg("scramble", exposure=math.inf, seed=3),
                              str(tmp_path))
    res = report["results"]
    assert res["fidelity"] < 1 / 3
    assert res["d_ent"] <= 1
    assert res["certified"] is False


def test_run_scenario_unscramble_certify_restores(tmp_path):
    report = cli.run_scenario(
        _cfg("unscramble-certify", exposure=math.inf, seed=2),
        str(tmp_path))
    res = report["results"]
    assert res["d_ent"] == 3
    assert os.path.exists(os.path.join(str(tmp_path), "t_hat.csv"))
    assert os.path.exists(
        os.path.join(str(tmp_path), "unscramble", "w_alice.csv"))
    assert os.path.exists(
        os.path.join(str(tmp_path), "scans", "s_step3.csv"))


def test_run_scenario_two_channel_equivalence(tmp_path):
    report = cli.run_scenario(_cfg("two-channel", exposure=math.inf, seed=4),
                              str(tmp_path))
    res = report["results"]
    assert res["equivalence_residual"] < 1e-12
    assert res["d_ent"] == 3


def test_main_run_exit_codes(tmp_path):
    ok = cli.main(["run", "--scenario", "baseline", "--d", "3",
                   "--n-modes", "8", "--exposure", "inf", "--n-mc", "0",
                   "--out", str(tmp_path / "a")])
    assert ok == 0
    bad_d = cli.main(["run", "--scenario", "baseline", "--d", "4",
                      "--n-modes", "8", "--out", str(tmp_path / "b")])
    assert bad_d == 2
    unmet = cli.main(["run", "--scenario", "scramble", "--d", "3",
                      "--n-modes", "8", "--exposure", "inf", "--n-mc", "0",
                      "--require-dent", "2", "--out", str(tmp_path / "c")])
    assert unmet == 4


def test_main_config_file_with_flag_overrides(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(
        {"d": 3, "n_modes": 8, "exposure": "inf", "n_mc": 0, "seed": 1}))
    out = tmp_path / "out"
    code = cli.main(["run", "--scenario", "baseline",
                     "--config", str(cfg_path), "--seed", "5",
                     "--out", str(out)])
    assert code == 0
    with open(out / "config.json", encoding="ascii") as fh:
        stored = json.load(fh)
    assert stored["seed"] == 5
    assert stored["d"] == 3
    garbled = tmp_path / "garbled.json"
    garbled.write_text("not json")
    assert cli.main(["run", "--scenario", "baseline",
                     "--config", str(garbled), "--out", str(out)]) == 2


def test_subcommand_chain(tmp_path):
    sim = str(tmp_path / "sim")
    assert cli.main(["simulate", "--d", "3", "--n-modes", "8",
                     "--exposure", "2e4", "--seed", "5", "--n-mc", "0",
                     "--out", sim]) == 0
    assert os.path.exists(os.path.join(sim, "scans", "meta.json"))
    assert os.path.exists(os.path.join(sim, "tables", "mub_1.csv"))

    rec = str(tmp_path / "rec")
    assert cli.main(["tomo", "--scans", os.path.join(sim, "scans"),
                     "--out", rec]) == 0
    assert os.path.exists(os.path.join(rec, "t_hat.csv"))

    ops = str(tmp_path / "ops")
    assert cli.main(["unscramble", "--t-hat", os.path.join(rec, "t_hat.csv"),
                     "--out", ops]) == 0
    assert os.path.exists(os.path.join(ops, "unscramble", "w_alice.csv"))
    assert os.path.exists(os.path.join(ops, "unscramble", "zeta.json"))
    assert os.path.exists(
        os.path.join(ops, "unscramble", "predicted_standard.csv"))

    cert = str(tmp_path / "cert")
    u_dir = os.path.join(ops, "unscramble")
    argv = ["certify", "--standard", os.path.join(u_dir, "predicted_standard.csv"),
            "--n-mc", "32", "--out", cert]
    for r in range(3):
        argv += ["--table", os.path.join(u_dir, f"predicted_mub_{r}.csv")]
    assert cli.main(argv) == 0
    with open(os.path.join(cert, "report.json"), encoding="ascii") as fh:
        report = json.load(fh)
    assert report["results"]["method"] == "exact"
    assert report["results"]["d_ent"] >= 2


def test_tomo_missing_bundle_and_degenerate_reference(tmp_path):
    assert cli.main(["tomo", "--scans", str(tmp_path / "nope"),
                     "--out", str(tmp_path / "o")]) == 2
    sim = str(tmp_path / "sim")
    assert cli.main(["simulate", "--d", "3", "--n-modes", "8",
                     "--exposure", "inf", "--seed", "1", "--out", sim]) == 0
    code = cli.main(["tomo", "--scans", os.path.join(sim, "scans"),
                     "--ref-floor", "0.999", "--out", str(tmp_path / "o2")])
    assert code == 3


def test_certify_subcommand_require_dent(tmp_path):
    sim = str(tmp_path / "sim")
    assert cli.main(["simulate", "--d", "3", "--n-modes", "8",
                     "--exposure", "inf", "--seed", "2", "--out", sim,
                     "--basis", "standard", "--basis", "mub:0"]) == 0
    assert not os.path.exists(os.path.join(sim, "tables", "mub_1.csv"))
    code = cli.main(["certify",
                     "--standard", os.path.join(sim, "tables", "standard.csv"),
                     "--table", os.path.join(sim, "tables", "mub_0.csv"),
                     "--require-dent", "3", "--n-mc", "0",
                     "--out", str(tmp_path / "cert")])
    assert code == 4


def test_simulate_rerun_is_byte_identical(tmp_path):
    args = ["run", "--scenario", "unscramble-certify", "--d", "3",
            "--n-modes", "8", "--exposure", "1e4", "--seed", "6",
            "--n-mc", "16"]
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(args + ["--out", a]) == 0
    assert cli.main(args + ["--out", b]) == 0
    for root, _, files in os.walk(a):
        rel = os.path.relpath(root, a)
        for name in files:
            pa = os.path.join(root, name)
            pb = os.path.join(b, rel, name)
            with open(pa, "rb") as fa, open(pb, "rb") as fb:
                assert fa.read() == fb.read(), name


def test_report_json_is_canonical(tmp_path):
    out = str(tmp_path)
    cli.run_scenario(_cfg(exposure=math.inf), out)
    with open(os.path.join(out, "report.json"), encoding="ascii") as fh:
        text = fh.read()
    data = json.loads(text)
    assert text == json.dumps(data, indent=2, sort_keys=True,
                              allow_nan=False) + "\n"
    assert data["config"]["exposure"] == "inf"


def test_main_requires_subcommand():
    with pytest.raises(SystemExit):
        cli.main([])

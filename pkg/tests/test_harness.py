import json

import pytest

from warpgeo.errors import ConfigError
from warpgeo.harness import (CSV_HEADER, ExperimentConfig, RunReport, emit, exit_code, run_experiment,
                             to_csv, to_plotdata)


@pytest.fixture(scope="module")
def diameter_report():
    return run_experiment(ExperimentConfig.from_dict({"experiment": "diameter_bound"}))


@pytest.fixture(scope="module")
def small_vif_report():
    cfg = ExperimentConfig.from_dict({"experiment": "stability_vif", "family": "scaled_round:rho=1.05",
                                      "eta_grid": [0.1], "n_samples": 16})
    return run_experiment(cfg)


def test_config_errors(tmp_path):
    for bad in ({"experiment": "nope"}, {}, {"experiment": "rigidity", "k": []},
                {"experiment": "rigidity", "formats": ["xml"]}, {"experiment": "rigidity", "eta_grid": [0.7]},
                {"experiment": "rigidity", "family": "unknown_family"},
                {"experiment": "rigidity", "colour": "blue"}):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(bad)
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.json")


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig.from_dict({"experiment": "stability_vif", "family": "near_extremal:k=2",
                                      "k": [3, 1], "n": 4, "formats": ["csv", "json"]})
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    again = ExperimentConfig.load(path)
    assert again == cfg and again.family.n == 4


def test_csv_header_and_reproducible(diameter_report):
    text = to_csv(diameter_report)
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 7 and [ln.split(",")[0] for ln in lines[1:]] == [str(k) for k in range(1, 7)]
    again = run_experiment(ExperimentConfig.from_dict({"experiment": "diameter_bound"}))
    assert to_csv(again) == text


def test_diameter_experiment(diameter_report):
    assert diameter_report.passed and exit_code(diameter_report) == 0
    d0s = [r.extra["d0"] for r in diameter_report.rows]
    assert all(r.extra["hemisphere_length"] <= r.extra["d0"] for r in diameter_report.rows)
    assert all(x > 0 for x in d0s)


def test_plotdata_two_columns(small_vif_report):
    text = to_plotdata(small_vif_report)
    blocks = text.strip().split("\n\n")
    assert len(blocks) == 2
    for block in blocks:
        head, *rows = block.splitlines()
        assert head.startswith("#") and len(rows) == 6
        assert all(len(r.split()) == 2 for r in rows)
        [float(x) for r in rows for x in r.split()]


def test_flat_family_fails_decrease(small_vif_report):
    # every row is the same metric, so the bound cannot decrease strictly
    assert not small_vif_report.passed and exit_code(small_vif_report) == 2


def test_json_round_trip(tmp_path, small_vif_report):
    text = emit(small_vif_report, "json", tmp_path)
    assert (tmp_path / "stability_vif.json").read_text() == text
    back = RunReport.from_dict(json.loads(text))
    assert back.rows == small_vif_report.rows and back.assertions == small_vif_report.assertions
    emit(small_vif_report, "csv", tmp_path)
    emit(small_vif_report, "plotdata", tmp_path)
    assert (tmp_path / "stability_vif.csv").exists() and (tmp_path / "stability_vif.dat").exists()
    with pytest.raises(ConfigError):
        emit(small_vif_report, "xml")


def test_rigidity_on_round():
    rep = run_experiment(ExperimentConfig.from_dict({"experiment": "rigidity", "family": "round", "k": [1]}))
    assert rep.passed
    row = rep.rows[0]
    assert row.hypotheses_ok and row.extra["max_dev_from_round"] < 1e-9


def test_rigidity_not_applicable_to_ellipsoid():
    rep = run_experiment(ExperimentConfig.from_dict({"experiment": "rigidity",
                                                     "family": "ellipsoid:a_axis=1,b_axis=1.3", "k": [1]}))
    assert not rep.rows[0].hypotheses_ok and rep.passed

"""End-to-end CLI checks driven through main(argv)."""

import json

import pytest

from satrm.cli import EXIT_CONFIG, EXIT_OK, main
from satrm.harness import ResultsTable
from satrm.scenarios import load_scenario

_SMALL = [
    "--m", "60", "--n", "2", "--k", "1",
    "--snr-db", "25", "--seed", "3", "--min-mainlobe", "2",
]


def test_simulate_estimate_map_happy_path(tmp_path, capsys):
    scn_path = tmp_path / "scenario.json"
    rc = main(["simulate", *_SMALL, "--out", str(scn_path)])
    assert rc == EXIT_OK
    assert scn_path.exists()
    scn = load_scenario(scn_path)
    assert scn.config.m == 60 and scn.config.k == 1

    est_dir = tmp_path / "est"
    rc = main([
        "estimate", "--scenario", str(scn_path), "--method", "peak",
        "--out-dir", str(est_dir),
    ])
    assert rc == EXIT_OK
    report = json.loads((est_dir / "report.json").read_text())
    assert report["method"] == "peak"
    assert report["k_true"] == 1
    assert (est_dir / "estimate.json").exists()

    map_dir = tmp_path / "map"
    rc = main([
        "map", "--scenario", str(scn_path),
        "--estimate", str(est_dir / "estimate.json"),
        "--rows", "4", "--cols", "4", "--png",
        "--out-dir", str(map_dir),
    ])
    assert rc == EXIT_OK
    lines = (map_dir / "heatmap.csv").read_text().splitlines()
    assert len(lines) == 5 and lines[0].startswith("#")
    assert (map_dir / "heatmap.png").exists()
    out = capsys.readouterr().out
    assert "heatmap.csv" in out


def test_sweep_inline_flags_writes_named_csv(tmp_path):
    out_dir = tmp_path / "sweep"
    rc = main([
        "sweep", "--variable", "snr_db", "--values", "25",
        "--trials", "1", "--methods", "peak",
        "--fixed", "m=60", "--fixed", "n=2", "--fixed", "k=1",
        "--fixed", "min_mainlobe=2",
        "--out-dir", str(out_dir),
    ])
    assert rc == EXIT_OK
    table = ResultsTable.from_csv(out_dir / "sweep_snr_db.csv")
    assert len(table.rows) == 1
    assert table.rows[0]["method"] == "peak"
    assert table.rows[0]["value"] == 25


def test_sweep_spec_file(tmp_path):
    spec = {
        "variable": "n",
        "values": [2],
        "trials": 1,
        "methods": ["peak"],
        "fixed": [["m", 60], ["k", 1], ["min_mainlobe", 2]],
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    rc = main(["sweep", "--spec", str(spec_path), "--out-dir", str(tmp_path)])
    assert rc == EXIT_OK
    table = ResultsTable.from_csv(tmp_path / "sweep_n.csv")
    assert [r["variable"] for r in table.rows] == ["n"]


def test_simulate_rejects_more_active_than_total(tmp_path, capsys):
    rc = main([
        "simulate", "--m", "60", "--n", "2", "--k", "5",
        "--min-mainlobe", "2", "--out", str(tmp_path / "x.json"),
    ])
    assert rc == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_estimate_missing_scenario_file(tmp_path):
    rc = main([
        "estimate", "--scenario", str(tmp_path / "nope.json"),
        "--method", "peak", "--out-dir", str(tmp_path),
    ])
    assert rc == EXIT_CONFIG


def test_sweep_without_variable_or_spec(tmp_path):
    rc = main(["sweep", "--out-dir", str(tmp_path)])
    assert rc == EXIT_CONFIG


def test_sweep_rejects_malformed_fixed(tmp_path):
    rc = main([
        "sweep", "--variable", "snr_db", "--values", "25",
        "--fixed", "m60", "--out-dir", str(tmp_path),
    ])
    assert rc == EXIT_CONFIG


def test_unknown_subcommand_exits_config(capsys):
    assert main(["frobnicate"]) == EXIT_CONFIG
    capsys.readouterr()


def test_bad_flag_value_exits_config(tmp_path, capsys):
    rc = main(["simulate", "--m", "sixty", "--out", str(tmp_path / "x.json")])
    assert rc == EXIT_CONFIG
    capsys.readouterr()

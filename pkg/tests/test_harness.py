"""Sweep orchestration: determinism, CSV round-trips, heatmap emission."""

import math

import numpy as np
import pytest

from satrm.beams import BeamParams
from satrm.geometry import GeoPosition, ecef_from_geodetic
from satrm.harness import (
    CSV_COLUMNS,
    GridSpec,
    PipelineConfig,
    ResultsTable,
    SweepSpec,
    emit_heatmap,
    prepare_geometry,
    run_method,
    run_sweep,
    scenario_for,
)
from satrm.inference import ActiveSetEstimate, estimate_field, synthesize_rm
from satrm.scenarios import ScenarioConfig, generate_scenario

# small field, small candidate set: fast enough to rerun several times
_FAST_FIXED = (("m", 80), ("n", 3), ("k", 2), ("min_mainlobe", 2))


def _fast_spec(**kw):
    base = dict(
        variable="snr_db",
        values=(25.0,),
        trials=2,
        base_seed=0,
        methods=("peak",),
        fixed=_FAST_FIXED,
    )
    base.update(kw)
    return SweepSpec(**base)


# ---------------------------------------------------------------------------
# spec plumbing


def test_scenario_for_applies_value_seed_and_fixed():
    spec = _fast_spec(values=(17.5,), base_seed=3)
    cfg = scenario_for(spec, 17.5, trial=4)
    assert cfg.snr_db == 17.5
    assert cfg.seed == 3 + 1000 * 4
    assert cfg.m == 80 and cfg.n == 3 and cfg.k == 2


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(variable="not_a_field", values=(1,))
    with pytest.raises(ValueError):
        SweepSpec(variable="snr_db", values=())
    with pytest.raises(ValueError):
        SweepSpec(variable="snr_db", values=(25.0,), trials=0)
    with pytest.raises(ValueError):
        SweepSpec(variable="snr_db", values=(25.0,), methods=("nope",))


def test_pipeline_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(background="subtract")
    with pytest.raises(ValueError):
        PipelineConfig(k_max=0)


def test_run_method_rejects_unknown_method():
    scn = generate_scenario(ScenarioConfig(m=60, n=2, k=1, seed=1, min_mainlobe=2))
    pipe = PipelineConfig()
    y, screened, looks = prepare_geometry(scn, pipe)
    with pytest.raises(ValueError):
        run_method("magic", y, screened, looks, pipe)


# ---------------------------------------------------------------------------
# run_sweep


def test_single_cell_produces_single_row():
    spec = _fast_spec(trials=1)
    table = run_sweep(spec)
    assert len(table.rows) == 1
    row = table.rows[0]
    assert set(row) == set(CSV_COLUMNS)
    assert row["method"] == "peak"
    assert row["variable"] == "snr_db"
    assert row["seed"] == 0


def test_row_cardinality_is_methods_times_values_times_trials():
    spec = _fast_spec(values=(25.0, 30.0), trials=2, methods=("peak", "omp"))
    table = run_sweep(spec)
    assert len(table.rows) == 2 * 2 * 2


def test_methods_see_matched_seeds(tmp_path):
    spec = _fast_spec(methods=("peak", "omp"))
    table = run_sweep(spec)
    by_trial = {}
    for row in table.rows:
        by_trial.setdefault((row["value"], row["trial"]), set()).add(row["seed"])
    for seeds in by_trial.values():
        assert len(seeds) == 1


def test_rows_sorted_by_method_then_spec_value_order_then_trial():
    # the 30-block precedes the 20-block because the sweep spec lists 30 first
    spec = _fast_spec(values=(30.0, 20.0), trials=2, methods=("peak", "mp"))
    table = run_sweep(spec)
    keys = [(r["method"], r["value"], r["trial"]) for r in table.rows]
    want = [
        (m, v, t)
        for m in ("mp", "peak")
        for v in (30.0, 20.0)
        for t in (0, 1)
    ]
    assert keys == want


def test_csv_bytes_identical_across_runs_and_jobs(tmp_path):
    spec = _fast_spec(methods=("peak", "mp"))
    paths = []
    for name, jobs in (("a.csv", 1), ("b.csv", 1), ("c.csv", 2)):
        table = run_sweep(spec, jobs=jobs)
        p = tmp_path / name
        table.to_csv(p)
        paths.append(p.read_bytes())
    assert paths[0] == paths[1] == paths[2]


def test_csv_round_trip_is_exact(tmp_path):
    spec = _fast_spec(methods=("peak",))
    table = run_sweep(spec)
    p = tmp_path / "sweep.csv"
    table.to_csv(p)
    back = ResultsTable.from_csv(p)
    assert back.rows == table.rows


def test_from_csv_rejects_foreign_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("method,foo\npeak,1\n")
    with pytest.raises(ValueError):
        ResultsTable.from_csv(p)


def test_generation_failure_yields_flagged_rows():
    # m=1 cannot cover any multi-station mainlobe requirement
    spec = _fast_spec(
        methods=("peak", "omp"),
        trials=1,
        fixed=(("m", 1), ("n", 2), ("k", 1), ("min_mainlobe", 5)),
    )
    table = run_sweep(spec)
    assert len(table.rows) == 2
    for row in table.rows:
        assert row["flags"] == "scenario_error"
        assert row["k_true"] == 0 and row["k_hat"] == 0
        assert row["f1"] is None and row["rmse_rss"] is None


def test_zero_active_set_yields_zero_field_flag():
    spec = _fast_spec(trials=1, fixed=(("m", 40), ("n", 2), ("k", 0)))
    table = run_sweep(spec)
    assert [r["flags"] for r in table.rows] == ["zero_field"]


def test_timings_column_is_opt_in(tmp_path):
    spec = _fast_spec(trials=1)
    silent = run_sweep(spec, timings=False)
    timed = run_sweep(spec, timings=True)
    assert silent.rows[0]["runtime_s"] is None
    assert timed.rows[0]["runtime_s"] > 0.0
    p = tmp_path / "silent.csv"
    silent.to_csv(p)
    line = p.read_text().splitlines()[1]
    assert line.split(",")[CSV_COLUMNS.index("runtime_s")] == ""


# ---------------------------------------------------------------------------
# heatmap grids


def _one_beam_estimate():
    params = BeamParams(az0=0.4, el0=0.15, beta=math.radians(10.0), amplitude=1.2)
    return ActiveSetEstimate(
        selected=[0], params=[params], k_hat=1, round_scores=[],
        final_residual=np.zeros(0),
    )


def test_grid_spec_validation_and_region_bounds():
    with pytest.raises(ValueError):
        GridSpec(rows=0, cols=2, lat_min=0, lat_max=1, lon_min=0, lon_max=1)
    with pytest.raises(ValueError):
        GridSpec(rows=2, cols=2, lat_min=1, lat_max=0, lon_min=0, lon_max=1)
    g = GridSpec.from_region(200e3, 4, 5)
    assert g.lat_min == -g.lat_max
    assert g.lon_min == -g.lon_max
    pts = g.points()
    assert len(pts) == 20
    # row-major: the first row shares its latitude
    assert all(p.lat == pts[0].lat for p in pts[:5])


def test_heatmap_csv_matches_synthesis(tmp_path):
    est = _one_beam_estimate()
    sats = np.stack([ecef_from_geodetic(GeoPosition(0.001, 0.002, 1200e3))])
    grid = GridSpec(rows=2, cols=2, lat_min=-0.01, lat_max=0.01, lon_min=-0.01, lon_max=0.01)
    p = tmp_path / "map.csv"
    values = emit_heatmap(est, sats, grid, p)
    assert values.shape == (2, 2)
    lines = p.read_text().splitlines()
    assert lines[0].startswith("#")
    assert len(lines) == 3
    parsed = np.array([[float(tok) for tok in line.split(",")] for line in lines[1:]])
    np.testing.assert_array_equal(parsed, values)
    direct = synthesize_rm(est, sats, grid.points()).reshape(2, 2)
    np.testing.assert_array_equal(values, direct)


def test_heatmap_empty_estimate_is_all_zero(tmp_path):
    est = ActiveSetEstimate(
        selected=[], params=[], k_hat=0, round_scores=[], final_residual=np.zeros(0)
    )
    grid = GridSpec(rows=3, cols=2, lat_min=0.0, lat_max=0.01, lon_min=0.0, lon_max=0.01)
    values = emit_heatmap(est, np.zeros((1, 3)), grid, tmp_path / "zero.csv")
    np.testing.assert_array_equal(values, np.zeros((3, 2)))


def test_heatmap_value_at_station_equals_model_prediction(tmp_path):
    scn = generate_scenario(ScenarioConfig(m=60, n=2, k=1, seed=1, min_mainlobe=2))
    pipe = PipelineConfig()
    y, screened, looks = prepare_geometry(scn, pipe)
    est = run_method("peak", y, screened, looks, pipe)
    station = scn.station_positions()[7]
    grid = GridSpec(
        rows=2, cols=2,
        lat_min=station.lat, lat_max=station.lat + 1e-4,
        lon_min=station.lon, lon_max=station.lon + 1e-4,
    )
    values = emit_heatmap(est, scn.sat_ecef(), grid, tmp_path / "st.csv")
    model = estimate_field(est, looks, m=scn.config.m)
    assert values[0, 0] == model[7]


def test_heatmap_png_raster_dimensions(tmp_path):
    pytest.importorskip("PIL")
    from PIL import Image

    est = _one_beam_estimate()
    sats = np.stack([ecef_from_geodetic(GeoPosition(0.0, 0.0, 1200e3))])
    grid = GridSpec(rows=5, cols=7, lat_min=-0.01, lat_max=0.01, lon_min=-0.01, lon_max=0.01)
    png = tmp_path / "map.png"
    emit_heatmap(est, sats, grid, tmp_path / "map.csv", png_path=png, db_scale=True)
    with Image.open(png) as img:
        assert img.size == (7, 5)
        assert img.mode == "L"

"""Monte Carlo harness: per-trial estimation, sweeps, CSV tables, heatmaps.

A sweep varies one scenario field over a list of values, runs matched trials
(trial r uses seed base_seed + 1000 * r, so every method sees the identical
measurement vector), scores each method, and collects rows in a fixed column
order.  Floats are serialized with full round-trip precision and rows are
sorted deterministically, so a sweep's CSV is byte-identical across runs and
across worker counts.  Wall-clock timings are recorded only when explicitly
requested, since they would break that reproducibility.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import build_dictionary, lasso_select, mp_select, omp_select, peak_select
from .beams import BeamParams
from .fitting import FitBounds, RobustLossConfig
from .geometry import GeoPosition, VisibilityConfig, look_angles, screen_candidates
from .inference import (
    ActiveSetEstimate,
    RefineConfig,
    estimate_field,
    greedy_select,
    joint_refine,
    synthesize_rm,
)
from .metrics import NoMatches, TrialReport, detection_metrics, param_errors, rss_metrics
from .scenarios import ScenarioConfig, ScenarioError, ZeroField, generate_scenario
from .selection import SelectionConfig

METHODS = ("proposed", "lasso", "mp", "omp", "peak")

CSV_COLUMNS = [
    "method",
    "variable",
    "value",
    "trial",
    "seed",
    "k_true",
    "k_hat",
    "precision",
    "recall",
    "f1",
    "rmse_rss",
    "pearson_corr",
    "az_err_deg",
    "el_err_deg",
    "beta_err_deg",
    "runtime_s",
    "flags",
]

_INT_COLUMNS = {"trial", "seed", "k_true", "k_hat"}
_STR_COLUMNS = {"method", "variable", "flags"}


@dataclass(frozen=True)
class PipelineConfig:
    """Bundled estimator configuration shared by all methods of a sweep."""

    bounds: FitBounds = FitBounds()
    loss: RobustLossConfig = RobustLossConfig()
    selection: SelectionConfig = SelectionConfig()
    visibility: VisibilityConfig = VisibilityConfig()
    refine: RefineConfig = RefineConfig()
    k_max: int = 10
    do_refine: bool = True
    refine_each_round: bool = False
    background: str = "none"
    omp_stop_tol: float = 1e-4
    peak_threshold: float = 0.3

    def __post_init__(self):
        if self.background not in ("none", "min"):
            raise ValueError(f"unknown background mode {self.background!r}")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: which scenario field varies, over which values."""

    variable: str
    values: tuple
    trials: int = 15
    base_seed: int = 0
    methods: tuple = ("proposed",)
    fixed: tuple = ()  # extra ScenarioConfig overrides as (name, value) pairs

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "fixed", tuple(self.fixed))
        if self.variable not in ScenarioConfig.__dataclass_fields__:
            raise ValueError(f"unknown scenario field {self.variable!r}")
        if not self.values:
            raise ValueError("values must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")


@dataclass
class ResultsTable:
    """Ordered sweep rows with fixed-schema CSV round-tripping."""

    rows: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow([_format_cell(col, row[col]) for col in CSV_COLUMNS])

    @classmethod
    def from_csv(cls, path) -> "ResultsTable":
        rows = []
        with open(path, "r", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != CSV_COLUMNS:
                raise ValueError(f"unexpected CSV header {header!r}")
            for raw in reader:
                rows.append(
                    {col: _parse_cell(col, cell) for col, cell in zip(CSV_COLUMNS, raw)}
                )
        return cls(rows=rows)


def _format_cell(col: str, value) -> str:
    if value is None:
        return ""
    if col in _STR_COLUMNS:
        return str(value)
    if col in _INT_COLUMNS:
        return str(int(value))
    if col == "value" and isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _parse_cell(col: str, cell: str):
    if col in _STR_COLUMNS:
        return cell
    if cell == "":
        return None
    if col in _INT_COLUMNS:
        return int(cell)
    if col == "value":
        try:
            return int(cell)
        except ValueError:
            return float(cell)
    return float(cell)


def prepare_geometry(scenario, pipe: PipelineConfig):
    """Shared per-trial inputs: measurement vector, screened ids, look tables."""
    y = scenario.rss_vector()
    st_ecef = scenario.station_ecef()
    sat_ecef = scenario.sat_ecef()
    looks_all = [look_angles(sat_ecef[s], st_ecef) for s in range(len(scenario.sat_geodetic))]
    screened = screen_candidates(looks_all, pipe.visibility)
    looks_by_id = {s: looks_all[s] for s in screened}
    return y, screened, looks_by_id


def run_method(method: str, y, screened, looks_by_id, pipe: PipelineConfig) -> ActiveSetEstimate:
    """Run one estimator on prepared inputs and return its estimate."""
    background = 0.0
    if pipe.background == "min" and len(y):
        background = float(np.min(y))
    y_work = np.asarray(y, dtype=float) - background

    if method == "proposed":
        est = greedy_select(
            y_work,
            screened,
            looks_by_id,
            pipe.bounds,
            pipe.loss,
            pipe.selection,
            pipe.k_max,
            refine_each_round=pipe.refine_each_round,
            refine_cfg=pipe.refine,
        )
        if pipe.do_refine and est.selected and not pipe.refine_each_round:
            est = joint_refine(y_work, est, looks_by_id, pipe.bounds, pipe.refine)
    elif method in ("omp", "mp", "lasso"):
        dic = build_dictionary(y_work, screened, looks_by_id, pipe.bounds, pipe.loss)
        if method == "omp":
            est = omp_select(y_work, dic, pipe.k_max, pipe.omp_stop_tol)
        elif method == "mp":
            est = mp_select(y_work, dic, pipe.k_max, pipe.omp_stop_tol)
        else:
            est = lasso_select(y_work, dic)
    elif method == "peak":
        est = peak_select(
            y_work,
            screened,
            looks_by_id,
            pipe.bounds,
            pipe.loss,
            pipe.peak_threshold,
            pipe.k_max,
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    est.background = background
    return est


def evaluate_trial(scenario, est: ActiveSetEstimate, looks_by_id, runtime_s=None) -> TrialReport:
    """Score one estimate against the scenario's ground truth."""
    flags = []
    truth_idx = list(scenario.truth_active)
    precision, recall, f1 = detection_metrics(truth_idx, est.selected)
    est_field = estimate_field(est, looks_by_id, m=scenario.config.m)
    rmse, corr = rss_metrics(scenario.noiseless_field, est_field)
    if math.isnan(corr):
        flags.append("constant_field")
    truth_map = dict(zip(truth_idx, scenario.truth_params))
    est_map = dict(zip(est.selected, est.params))
    try:
        az_err, el_err, beta_err = param_errors(truth_map, est_map)
    except NoMatches:
        az_err = el_err = beta_err = math.nan
        flags.append("no_matches")
    if any(sc.note for sc in est.round_scores):
        flags.append("degenerate_rss")
    return TrialReport(
        k_true=len(truth_idx),
        k_hat=est.k_hat,
        precision=precision,
        recall=recall,
        f1=f1,
        rmse_rss=rmse,
        pearson_corr=corr,
        az_err_deg=az_err,
        el_err_deg=el_err,
        beta_err_deg=beta_err,
        runtime_s=runtime_s if runtime_s is not None else math.nan,
        flags=flags,
    )


def _row_from_report(method, spec, value, trial, seed, report: TrialReport, timings: bool) -> dict:
    return {
        "method": method,
        "variable": spec.variable,
        "value": value,
        "trial": trial,
        "seed": seed,
        "k_true": report.k_true,
        "k_hat": report.k_hat,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "rmse_rss": report.rmse_rss,
        "pearson_corr": report.pearson_corr,
        "az_err_deg": report.az_err_deg,
        "el_err_deg": report.el_err_deg,
        "beta_err_deg": report.beta_err_deg,
        "runtime_s": report.runtime_s if timings else None,
        "flags": "|".join(report.flags),
    }


def _degenerate_row(method, spec, value, trial, seed, flag: str) -> dict:
    row = {col: None for col in CSV_COLUMNS}
    row.update(
        method=method,
        variable=spec.variable,
        value=value,
        trial=trial,
        seed=seed,
        k_true=0,
        k_hat=0,
        flags=flag,
    )
    return row


def scenario_for(spec: SweepSpec, value, trial: int) -> ScenarioConfig:
    """Scenario config for one (value, trial) cell of a sweep."""
    overrides = dict(spec.fixed)
    overrides[spec.variable] = value
    overrides["seed"] = spec.base_seed + 1000 * trial
    return replace(ScenarioConfig(), **overrides)


def _sweep_task(args):
    spec, pipe, value, trial, timings = args
    cfg = scenario_for(spec, value, trial)
    try:
        scenario = generate_scenario(cfg)
    except (ZeroField, ScenarioError) as exc:
        flag = "zero_field" if isinstance(exc, ZeroField) else "scenario_error"
        return [
            _degenerate_row(m, spec, value, trial, cfg.seed, flag) for m in spec.methods
        ]
    y, screened, looks_by_id = prepare_geometry(scenario, pipe)
    rows = []
    for method in spec.methods:
        start = time.perf_counter()
        est = run_method(method, y, screened, looks_by_id, pipe)
        elapsed = time.perf_counter() - start
        report = evaluate_trial(scenario, est, looks_by_id, runtime_s=elapsed)
        rows.append(_row_from_report(method, spec, value, trial, cfg.seed, report, timings))
    return rows


def run_sweep(
    spec: SweepSpec,
    pipe: PipelineConfig = PipelineConfig(),
    *,
    jobs: int = 1,
    timings: bool = False,
) -> ResultsTable:
    """Run all (value, trial) cells of a sweep and collect scored rows.

    With jobs > 1 the cells run in separate processes; each cell is a pure
    function of the spec, so the assembled table is identical regardless of
    worker count.
    """
    tasks = [
        (spec, pipe, value, trial, timings)
        for value in spec.values
        for trial in range(spec.trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_sweep_task, tasks))
    else:
        chunks = [_sweep_task(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    value_order = {v: i for i, v in enumerate(spec.values)}
    rows.sort(key=lambda r: (r["method"], value_order[r["value"]], r["trial"]))
    return ResultsTable(rows=rows)


@dataclass(frozen=True)
class GridSpec:
    """Uniform latitude/longitude query grid (radians, row-major by latitude)."""

    rows: int
    cols: int
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and column")
        if self.lat_min > self.lat_max or self.lon_min > self.lon_max:
            raise ValueError("grid bounds are inverted")

    @classmethod
    def from_region(cls, region_size: float, rows: int, cols: int) -> "GridSpec":
        from .geometry import EARTH_RADIUS_M

        half = 0.5 * region_size / EARTH_RADIUS_M
        return cls(
            rows=rows, cols=cols, lat_min=-half, lat_max=half, lon_min=-half, lon_max=half
        )

    def points(self) -> list:
        lats = np.linspace(self.lat_min, self.lat_max, self.rows)
        lons = np.linspace(self.lon_min, self.lon_max, self.cols)
        return [GeoPosition(lat=float(la), lon=float(lo), alt=0.0) for la in lats for lo in lons]


def emit_heatmap(
    est: ActiveSetEstimate,
    sat_positions,
    grid: GridSpec,
    csv_path,
    *,
    png_path=None,
    db_scale: bool = False,
) -> np.ndarray:
    """Synthesize the RSS field on a grid; write CSV and optional PNG raster.

    The CSV holds one data line per grid row (row-major), preceded by a
    comment header with the grid bounds in degrees.  The optional raster is
    8-bit grayscale, min-max normalized, in linear or dB units.
    """
    values = synthesize_rm(est, sat_positions, grid.points()).reshape(grid.rows, grid.cols)
    header = (
        "# lat_min_deg={},lat_max_deg={},lon_min_deg={},lon_max_deg={},rows={},cols={}".format(
            repr(math.degrees(grid.lat_min)),
            repr(math.degrees(grid.lat_max)),
            repr(math.degrees(grid.lon_min)),
            repr(math.degrees(grid.lon_max)),
            grid.rows,
            grid.cols,
        )
    )
    lines = [header]
    for r in range(grid.rows):
        lines.append(",".join(repr(float(v)) for v in values[r]))
    Path(csv_path).write_text("\n".join(lines) + "\n")
    if png_path is not None:
        from PIL import Image

        img = values
        if db_scale:
            floor = max(float(values.max()) * 1e-6, 1e-30)
            img = 10.0 * np.log10(np.maximum(values, floor))
        lo, hi = float(img.min()), float(img.max())
        scaled = np.zeros_like(img) if hi <= lo else (img - lo) / (hi - lo)
        raster = (scaled * 255.0).round().astype(np.uint8)
        Image.fromarray(raster, mode="L").save(png_path)
    return values

"""Command-line front end.

Subcommands:

  simulate  draw a synthetic scenario and write it as JSON
  estimate  run one estimator on a scenario JSON; write estimate + report
  sweep     run a Monte Carlo sweep; write a deterministic CSV table
  map       synthesize a radio-map grid from a scenario + estimate JSON

Exit status is 0 on success and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

from .fitting import FitBounds, RobustLossConfig
from .geometry import VisibilityConfig
from .harness import (
    GridSpec,
    PipelineConfig,
    SweepSpec,
    emit_heatmap,
    evaluate_trial,
    prepare_geometry,
    run_method,
    run_sweep,
)
from .inference import RefineConfig, estimate_from_dict, estimate_to_dict
from .scenarios import (
    ConfigError,
    ScenarioConfig,
    ScenarioError,
    ZeroField,
    generate_scenario,
    load_scenario,
    save_scenario,
)
from .selection import SelectionConfig

EXIT_OK = 0
EXIT_CONFIG = 2


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--criterion", choices=("bic", "aic", "glrt"), default="glrt")
    p.add_argument("--alpha", type=float, default=SelectionConfig().alpha)
    p.add_argument("--q", type=int, default=SelectionConfig().q, choices=(3, 4))
    p.add_argument("--tau-scale", type=float, default=2.0)
    p.add_argument("--tau-const", type=float, default=None)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--psi-max-deg", type=float, default=30.0)
    p.add_argument("--m-min", type=int, default=10)
    p.add_argument("--beta-min-deg", type=float, default=4.0)
    p.add_argument("--beta-max-deg", type=float, default=20.0)
    p.add_argument("--el-max-deg", type=float, default=60.0)
    p.add_argument("--delta-az-deg", type=float, default=20.0)
    p.add_argument("--delta-el-deg", type=float, default=10.0)
    p.add_argument("--loss", choices=("huber", "student_t"), default="huber")
    p.add_argument("--no-refine", action="store_true")
    p.add_argument("--refine-each-round", action="store_true")
    p.add_argument("--background", choices=("none", "min"), default="none")


def _pipeline_from_args(args) -> PipelineConfig:
    return PipelineConfig(
        bounds=FitBounds(
            beta_min=math.radians(args.beta_min_deg),
            beta_max=math.radians(args.beta_max_deg),
            el_max=math.radians(args.el_max_deg),
            delta_az=math.radians(args.delta_az_deg),
            delta_el=math.radians(args.delta_el_deg),
        ),
        loss=RobustLossConfig(loss=args.loss),
        selection=SelectionConfig(
            criterion=args.criterion,
            alpha=args.alpha,
            q=args.q,
            tau_scale=args.tau_scale,
            tau_const=args.tau_const,
        ),
        visibility=VisibilityConfig(psi_max=math.radians(args.psi_max_deg), m_min=args.m_min),
        refine=RefineConfig(),
        k_max=args.k_max,
        do_refine=not args.no_refine,
        refine_each_round=args.refine_each_round,
        background=args.background,
    )


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--snr-db", type=float, default=25.0)
    p.add_argument("--beta-lo-deg", type=float, default=4.0)
    p.add_argument("--beta-hi-deg", type=float, default=20.0)
    p.add_argument("--region-size", type=float, default=ScenarioConfig().region_size)
    p.add_argument("--sat-altitude", type=float, default=ScenarioConfig().sat_altitude)
    p.add_argument("--min-mainlobe", type=int, default=ScenarioConfig().min_mainlobe)
    p.add_argument("--seed", type=int, default=0)


def _scenario_cfg_from_args(args) -> ScenarioConfig:
    return ScenarioConfig(
        m=args.m,
        n=args.n,
        k=args.k,
        snr_db=args.snr_db,
        beta_range=(math.radians(args.beta_lo_deg), math.radians(args.beta_hi_deg)),
        region_size=args.region_size,
        sat_altitude=args.sat_altitude,
        seed=args.seed,
        min_mainlobe=args.min_mainlobe,
    )


def _cmd_simulate(args) -> int:
    cfg = _scenario_cfg_from_args(args)
    scenario = generate_scenario(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_scenario(scenario, out)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    scenario = load_scenario(args.scenario)
    pipe = _pipeline_from_args(args)
    y, screened, looks_by_id = prepare_geometry(scenario, pipe)
    start = time.perf_counter()
    est = run_method(args.method, y, screened, looks_by_id, pipe)
    elapsed = time.perf_counter() - start
    report = evaluate_trial(scenario, est, looks_by_id, runtime_s=elapsed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "estimate.json").write_text(json.dumps(estimate_to_dict(est), indent=1))
    report_dict = {
        "method": args.method,
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
        "runtime_s": report.runtime_s,
        "flags": report.flags,
    }
    (out_dir / "report.json").write_text(json.dumps(report_dict, indent=1))
    print(f"wrote {out_dir / 'estimate.json'} and {out_dir / 'report.json'}")
    return EXIT_OK


def _spec_from_args(args) -> SweepSpec:
    if args.spec is not None:
        d = json.loads(Path(args.spec).read_text())
        return SweepSpec(
            variable=d["variable"],
            values=tuple(d["values"]),
            trials=int(d.get("trials", 15)),
            base_seed=int(d.get("base_seed", 0)),
            methods=tuple(d.get("methods", ("proposed",))),
            fixed=tuple(tuple(item) for item in d.get("fixed", ())),
        )
    if args.variable is None or args.values is None:
        raise ConfigError("either --spec or both --variable and --values are required")
    values = []
    for tok in args.values.split(","):
        tok = tok.strip()
        values.append(int(tok) if tok.lstrip("+-").isdigit() else float(tok))
    fixed = []
    for item in args.fixed or []:
        name, _, raw = item.partition("=")
        if not raw:
            raise ConfigError(f"bad --fixed entry {item!r}, expected name=value")
        fixed.append((name, int(raw) if raw.lstrip("+-").isdigit() else float(raw)))
    return SweepSpec(
        variable=args.variable,
        values=tuple(values),
        trials=args.trials,
        base_seed=args.base_seed,
        methods=tuple(args.methods.split(",")),
        fixed=tuple(fixed),
    )


def _cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    pipe = _pipeline_from_args(args)
    table = run_sweep(spec, pipe, jobs=args.jobs, timings=args.timings)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"sweep_{spec.variable}.csv"
    table.to_csv(out)
    print(f"wrote {out} ({len(table.rows)} rows)")
    return EXIT_OK


def _cmd_map(args) -> int:
    scenario = load_scenario(args.scenario)
    est = estimate_from_dict(json.loads(Path(args.estimate).read_text()))
    grid = GridSpec.from_region(scenario.config.region_size, args.rows, args.cols)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "heatmap.csv"
    png_path = out_dir / "heatmap.png" if args.png else None
    emit_heatmap(
        est,
        scenario.sat_ecef(),
        grid,
        csv_path,
        png_path=png_path,
        db_scale=args.db,
    )
    msg = f"wrote {csv_path}"
    if png_path is not None:
        msg += f" and {png_path}"
    print(msg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satrm",
        description="Identify active co-channel satellites and synthesize RSS radio maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic scenario JSON")
    _add_scenario_args(p_sim)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=_cmd_simulate)

    p_est = sub.add_parser("estimate", help="estimate the active set from a scenario JSON")
    p_est.add_argument("--scenario", required=True)
    p_est.add_argument("--method", choices=("proposed", "lasso", "mp", "omp", "peak"), default="proposed")
    _add_pipeline_args(p_est)
    p_est.add_argument("--out-dir", required=True)
    p_est.set_defaults(func=_cmd_estimate)

    p_sw = sub.add_parser("sweep", help="run a Monte Carlo sweep and write CSV results")
    p_sw.add_argument("--spec", default=None, help="sweep spec JSON file")
    p_sw.add_argument("--variable", default=None)
    p_sw.add_argument("--values", default=None, help="comma-separated values")
    p_sw.add_argument("--trials", type=int, default=15)
    p_sw.add_argument("--base-seed", type=int, default=0)
    p_sw.add_argument("--methods", default="proposed")
    p_sw.add_argument("--fixed", action="append", default=None, metavar="NAME=VALUE")
    p_sw.add_argument("--jobs", type=int, default=1)
    p_sw.add_argument("--timings", action="store_true", help="record wall-clock runtimes (breaks byte determinism)")
    _add_pipeline_args(p_sw)
    p_sw.add_argument("--out-dir", required=True)
    p_sw.set_defaults(func=_cmd_sweep)

    p_map = sub.add_parser("map", help="synthesize a radio-map grid from an estimate")
    p_map.add_argument("--scenario", required=True)
    p_map.add_argument("--estimate", required=True)
    p_map.add_argument("--rows", type=int, default=64)
    p_map.add_argument("--cols", type=int, default=64)
    p_map.add_argument("--png", action="store_true")
    p_map.add_argument("--db", action="store_true")
    p_map.add_argument("--out-dir", required=True)
    p_map.set_defaults(func=_cmd_map)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed a message; normalize config errors to 2
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError, ZeroField, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

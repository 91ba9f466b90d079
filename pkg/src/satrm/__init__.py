"""satrm: identify active co-channel satellites and synthesize RSS radio maps
from ground measurements, using a parametric squared-sinc beam model with
statistically gated greedy model-order selection."""

from .baselines import Dictionary, build_dictionary, lasso_select, mp_select, omp_select, peak_select
from .beams import BeamParams, beam_gain, predict_field, signature, wrap_angle_diff
from .fitting import (
    FitBounds,
    InsufficientSamples,
    RobustLossConfig,
    SingleFitResult,
    closed_form_amplitude,
    fit_single,
    init_from_peak,
    robust_objective,
)
from .geometry import (
    EARTH_RADIUS_M,
    GeoPosition,
    LookAngles,
    VisibilityConfig,
    ecef_from_geodetic,
    look_angles,
    screen_candidates,
)
from .harness import (
    CSV_COLUMNS,
    GridSpec,
    PipelineConfig,
    ResultsTable,
    SweepSpec,
    emit_heatmap,
    run_method,
    run_sweep,
)
from .inference import (
    ActiveSetEstimate,
    RefineConfig,
    estimate_field,
    greedy_select,
    joint_refine,
    synthesize_rm,
)
from .metrics import NoMatches, TrialReport, detection_metrics, param_errors, rss_metrics
from .scenarios import (
    ConfigError,
    Measurement,
    Scenario,
    ScenarioConfig,
    ScenarioError,
    ZeroField,
    calibrate_noise,
    generate_scenario,
    load_scenario,
    save_scenario,
)
from .selection import (
    DegenerateRss,
    InvalidDof,
    SelectionConfig,
    SelectionScore,
    acceptance_test,
    delta_criterion,
    f_cdf,
    f_quantile,
    f_statistic,
    information_criterion,
)

__version__ = "0.1.0"

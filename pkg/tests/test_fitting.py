"""Single-beam fit tests: closed-form amplitude, robust loss, recovery."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from satrm.beams import BeamParams, beam_gain, signature
from satrm.fitting import (
    FitBounds,
    InsufficientSamples,
    RobustLossConfig,
    closed_form_amplitude,
    fit_single,
    huber,
    init_from_peak,
    robust_objective,
    width_penalty,
)

from conftest import grid_looks, make_looks

EPS = 1e-12


# ---------------------------------------------------------------------------
# closed_form_amplitude


def test_amplitude_single_point_exact():
    a = closed_form_amplitude([2.0], [1.0], FitBounds(a_min=0.0, a_max=10.0), EPS)
    assert a == pytest.approx(2.0, abs=1e-9)


def test_amplitude_zero_gains_clamp_to_lower_bound():
    a = closed_form_amplitude([1.0, 2.0], [0.0, 0.0], FitBounds(), EPS)
    assert a == 0.0


def test_amplitude_unit_weight_arithmetic():
    # target values of 1 make the sqrt weights exactly 1:
    # (1*1*1 + 1*1*0.5) / (1*1 + 1*0.25) = 1.5 / 1.25
    a = closed_form_amplitude([1.0, 1.0], [1.0, 0.5], FitBounds(), EPS)
    assert a == pytest.approx(1.2, abs=1e-9)


def test_amplitude_respects_upper_clamp():
    a = closed_form_amplitude([100.0], [1.0], FitBounds(a_max=5.0), EPS)
    assert a == 5.0


def test_amplitude_negative_samples_carry_no_weight():
    # a large negative sample must not drag the estimate below zero
    a = closed_form_amplitude([2.0, -50.0], [1.0, 1.0], FitBounds(), EPS)
    assert a > 0.0


# ---------------------------------------------------------------------------
# robust_objective / huber / width_penalty


def _cfg(delta=0.1, lam=0.0):
    return RobustLossConfig(delta=delta, lambda_beta=lam)


def test_objective_zero_residuals_in_range_beta():
    v = robust_objective(np.zeros(5), math.radians(10.0), _cfg(), FitBounds())
    assert v == 0.0


def test_huber_linear_branch_value():
    delta = 0.2
    v = robust_objective(np.array([2 * delta]), math.radians(10.0), _cfg(delta), FitBounds())
    assert v == pytest.approx(1.5 * delta * delta, rel=1e-12)


def test_huber_branch_boundary_continuity():
    delta = 0.2
    v = robust_objective(np.array([delta]), math.radians(10.0), _cfg(delta), FitBounds())
    assert v == pytest.approx(0.5 * delta * delta, rel=1e-12)
    just_above = float(huber(delta * (1 + 1e-9), delta))
    assert just_above == pytest.approx(0.5 * delta * delta, rel=1e-6)


@given(st.floats(-5.0, 5.0), st.floats(0.01, 1.0))
def test_huber_matches_piecewise_definition(r, delta):
    expected = 0.5 * r * r if abs(r) <= delta else delta * (abs(r) - 0.5 * delta)
    assert float(huber(r, delta)) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_width_penalty_zero_inside_quadratic_outside():
    b = FitBounds(beta_min=math.radians(4.0), beta_max=math.radians(20.0))
    assert width_penalty(math.radians(10.0), b) == 0.0
    below = math.radians(3.0)
    assert width_penalty(below, b) == pytest.approx((b.beta_min - below) ** 2, rel=1e-12)
    above = math.radians(25.0)
    assert width_penalty(above, b) == pytest.approx((above - b.beta_max) ** 2, rel=1e-12)


def test_objective_requires_resolved_config():
    with pytest.raises(ValueError):
        robust_objective(np.zeros(3), 0.1, RobustLossConfig(), FitBounds())


def test_resolved_fills_scale_adaptive_defaults():
    target = np.array([0.0, 1.0, 4.0])
    cfg = RobustLossConfig().resolved(target)
    assert cfg.delta == pytest.approx(0.2, rel=1e-12)  # 5% of max
    assert cfg.lambda_beta == pytest.approx(1e3 * 1.0, rel=1e-12)  # median of squares


def test_student_t_loss_is_selectable():
    cfg = RobustLossConfig(delta=0.1, lambda_beta=0.0, loss="student_t")
    v = robust_objective(np.array([0.05]), math.radians(10.0), cfg, FitBounds())
    expected = 0.5 * 5.0 * math.log1p((0.05 / 0.1) ** 2 / 4.0)
    assert v == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------------------
# init_from_peak


def test_init_centers_on_argmax():
    looks = make_looks([0.1, 0.2, 0.3], [0.4, 0.5, 0.6])
    p = init_from_peak([1.0, 3.0, 2.0], looks, FitBounds())
    assert p.az0 == pytest.approx(0.2)
    assert p.el0 == pytest.approx(0.5)


def test_init_tie_breaks_to_lowest_index():
    looks = make_looks([0.1, 0.2, 0.3], [0.4, 0.5, 0.6])
    p = init_from_peak([2.0, 2.0, 2.0], looks, FitBounds())
    assert p.az0 == pytest.approx(0.1)


def test_init_beta_is_midrange():
    b = FitBounds(beta_min=math.radians(4.0), beta_max=math.radians(20.0))
    p = init_from_peak([1.0, 2.0], make_looks([0.1, 0.2], [0.3, 0.4]), b)
    assert p.beta == pytest.approx(math.radians(12.0), rel=1e-12)


# ---------------------------------------------------------------------------
# fit_single


def _noiseless_case(beta_deg=10.0, amp=2.0, az0=1.0, el0=0.35, n_side=15):
    truth = BeamParams(az0=az0, el0=el0, beta=math.radians(beta_deg), amplitude=amp)
    looks = grid_looks(az0, el0, math.radians(12.0), n_side)
    return truth, looks, signature(truth, looks)


def test_fit_recovers_noiseless_beam():
    truth, looks, y = _noiseless_case()
    res = fit_single(y, looks)
    assert res.params.beta == pytest.approx(truth.beta, rel=0.02)
    assert abs(res.params.az0 - truth.az0) < math.radians(0.1)
    assert abs(res.params.el0 - truth.el0) < math.radians(0.1)
    assert res.params.amplitude == pytest.approx(truth.amplitude, rel=0.01)


def test_fit_zero_target_returns_zero_amplitude():
    looks = grid_looks(1.0, 0.3, math.radians(10.0), 4)
    res = fit_single(np.zeros(16), looks)
    assert res.params.amplitude == 0.0
    assert res.loss_value == 0.0
    assert res.rss_value == 0.0


def test_fit_beta_at_upper_bound_stays_inside():
    truth, looks, y = _noiseless_case(beta_deg=20.0)
    res = fit_single(y, looks)
    assert res.params.beta <= FitBounds().beta_max + 1e-12
    assert res.params.beta == pytest.approx(truth.beta, rel=0.02)


def test_fit_rejects_tiny_samples():
    looks = make_looks([0.1, 0.2, 0.3], [0.1, 0.2, 0.3])
    with pytest.raises(InsufficientSamples):
        fit_single([1.0, 2.0, 3.0], looks)


def test_fit_params_always_within_bounds():
    rng = np.random.default_rng(7)
    looks = grid_looks(2.0, 0.4, math.radians(15.0), 8)
    b = FitBounds()
    for _ in range(5):
        y = rng.normal(0.0, 1.0, size=64)
        res = fit_single(y, looks, b)
        assert b.beta_min <= res.params.beta <= b.beta_max
        assert 0.0 <= res.params.el0 <= b.el_max
        assert b.a_min <= res.params.amplitude <= b.a_max


def test_fit_descent_guarantee_against_initialization():
    # the returned loss never exceeds the loss of the peak initialization
    rng = np.random.default_rng(3)
    looks = grid_looks(1.5, 0.3, math.radians(12.0), 10)
    truth = BeamParams(az0=1.45, el0=0.33, beta=math.radians(8.0), amplitude=1.5)
    y = signature(truth, looks) + rng.normal(0.0, 0.05, size=100)

    res = fit_single(y, looks)
    cfg = RobustLossConfig().resolved(y)
    init = init_from_peak(y, looks, FitBounds())
    g = beam_gain(looks, init)
    amp = closed_form_amplitude(y, g, FitBounds(), cfg.epsilon)
    init_loss = robust_objective(y - amp * g, init.beta, cfg, FitBounds())
    assert res.loss_value <= init_loss + 1e-12


def test_fit_amplitude_scaling_equivariance():
    truth, looks, y = _noiseless_case(amp=1.0)
    res1 = fit_single(y, looks)
    res3 = fit_single(3.0 * y, looks)
    assert res3.params.amplitude == pytest.approx(3.0 * res1.params.amplitude, rel=0.05)
    assert res3.params.az0 == pytest.approx(res1.params.az0, abs=1e-3)
    assert res3.params.el0 == pytest.approx(res1.params.el0, abs=1e-3)
    assert res3.params.beta == pytest.approx(res1.params.beta, rel=1e-2)


def test_fit_gradient_vanishes_at_noiseless_interior_optimum():
    truth, looks, y = _noiseless_case(beta_deg=10.0)
    res = fit_single(y, looks)
    cfg = RobustLossConfig().resolved(y)
    b = FitBounds()
    az = np.mod(np.asarray(looks.azimuth), 2 * np.pi)
    el = np.asarray(looks.offnadir)

    from satrm.beams import _gain_arrays

    def obj(v):
        g = _gain_arrays(az, el, v[0], v[1], v[2])
        amp = closed_form_amplitude(y, g, b, cfg.epsilon)
        return robust_objective(y - amp * g, v[2], cfg, b)

    v0 = np.array([res.params.az0, res.params.el0, res.params.beta])
    f0 = obj(v0)
    h = 1e-6
    grad = np.zeros(3)
    curv = np.zeros(3)
    for i in range(3):
        vp, vm = v0.copy(), v0.copy()
        vp[i] += h
        vm[i] -= h
        fp, fm = obj(vp), obj(vm)
        grad[i] = (fp - fm) / (2 * h)
        curv[i] = abs(fp - 2 * f0 + fm) / (h * h)
    # stationarity relative to the local curvature scale
    scale = max(float(np.max(curv)), 1.0)
    assert float(np.linalg.norm(grad)) < 1e-4 * scale, (
        f"gradient {grad} not stationary against curvature {curv}"
    )


def test_fit_is_deterministic():
    rng = np.random.default_rng(11)
    looks = grid_looks(0.9, 0.25, math.radians(10.0), 9)
    y = rng.normal(0.5, 0.2, size=81)
    r1 = fit_single(y, looks)
    r2 = fit_single(y, looks)
    assert r1.params == r2.params
    assert r1.rss_value == r2.rss_value


def test_fit_finds_offset_peak_through_azimuth_multistart():
    # beam center well away from the peak sample's azimuth: the multi-start
    # grid must still locate it
    truth = BeamParams(az0=2.0, el0=0.4, beta=math.radians(6.0), amplitude=1.0)
    az = np.linspace(2.0 - 0.3, 2.0 + 0.3, 40)
    el = np.full(40, 0.4)
    looks = make_looks(az, el)
    y = signature(truth, looks)
    res = fit_single(y, looks)
    assert abs(res.params.az0 - truth.az0) < math.radians(0.2)


def test_fit_bounds_validation():
    with pytest.raises(ValueError):
        FitBounds(a_min=-1.0)
    with pytest.raises(ValueError):
        FitBounds(beta_min=0.0)
    with pytest.raises(ValueError):
        FitBounds(delta_az=0.0)


def test_loss_config_validation():
    with pytest.raises(ValueError):
        RobustLossConfig(delta=0.0)
    with pytest.raises(ValueError):
        RobustLossConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        RobustLossConfig(loss="cauchy")

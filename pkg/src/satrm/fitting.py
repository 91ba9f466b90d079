"""Robust fitting of a single beam to a measurement (or residual) vector.

The beam amplitude enters the model linearly and is eliminated in closed form
by a weighted least-squares expression during the search, leaving a bounded
three-dimensional problem over (az0, el0, beta).  The data term is a Huber
loss (a Student-t surrogate is available behind a config switch) plus a soft
beamwidth plausibility penalty.  The search is a deterministic bounded
quasi-Newton descent seeded at the peak sample, repeated from a coarse grid
of azimuth offsets to handle the oscillatory sidelobe structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .beams import TWO_PI, BeamParams, _gain_arrays
from .geometry import LookAngles

_N_AZ_STARTS = 8
_MAX_ITER = 200
_FTOL = 1e-10
_GTOL = 1e-8


class InsufficientSamples(ValueError):
    """Too few samples to fit a beam (need at least 4)."""


@dataclass(frozen=True)
class FitBounds:
    """Box constraints for the single-beam fit.

    a_min / a_max       : amplitude clamp for the closed-form estimate
    beta_min / beta_max : admissible half-power beamwidth range (radians)
    el_max              : largest admissible off-nadir beam center (radians)
    delta_az / delta_el : half-widths of the search window around the
                          initialization point (radians)
    """

    a_min: float = 0.0
    a_max: float = 1e6
    beta_min: float = math.radians(4.0)
    beta_max: float = math.radians(20.0)
    el_max: float = math.radians(60.0)
    delta_az: float = math.radians(20.0)
    delta_el: float = math.radians(10.0)

    def __post_init__(self):
        if not (0 <= self.a_min < self.a_max):
            raise ValueError("need 0 <= a_min < a_max")
        if not (0 < self.beta_min < self.beta_max):
            raise ValueError("need 0 < beta_min < beta_max")
        if self.el_max <= 0 or self.delta_az <= 0 or self.delta_el <= 0:
            raise ValueError("el_max, delta_az, delta_el must be positive")


@dataclass(frozen=True)
class RobustLossConfig:
    """Data-term configuration for the robust objective.

    delta       : Huber transition point (None: 5% of the peak target value)
    lambda_beta : weight of the beamwidth plausibility penalty
                  (None: 1e3 times the median squared target value)
    epsilon     : small positive guard used in weights and denominators
    loss        : "huber" (default) or "student_t"
    student_dof : degrees of freedom of the Student-t surrogate
    """

    delta: float | None = None
    lambda_beta: float | None = None
    epsilon: float = 1e-12
    loss: str = "huber"
    student_dof: float = 4.0

    def __post_init__(self):
        if self.delta is not None and self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.lambda_beta is not None and self.lambda_beta < 0:
            raise ValueError("lambda_beta must be >= 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.loss not in ("huber", "student_t"):
            raise ValueError(f"unknown loss {self.loss!r}")

    def resolved(self, target) -> "RobustLossConfig":
        """Concrete config with data-adaptive defaults filled in from target."""
        t = np.asarray(target, dtype=float)
        delta = self.delta
        if delta is None:
            delta = 0.05 * max(float(np.max(t)) if t.size else 0.0, self.epsilon)
        lam = self.lambda_beta
        if lam is None:
            lam = 1e3 * float(np.median(t * t)) if t.size else 0.0
        return replace(self, delta=delta, lambda_beta=lam)


@dataclass(frozen=True)
class SingleFitResult:
    """Fitted beam plus diagnostics.

    rss_value  : plain sum of squared residuals at the fitted beam
    loss_value : robust objective value at the fitted beam
    converged  : whether the descent reported convergence for the best start
    """

    params: BeamParams
    rss_value: float
    loss_value: float
    converged: bool


def closed_form_amplitude(target, gains, bounds: FitBounds, eps: float) -> float:
    """Weighted least-squares amplitude for fixed beam shape, clamped to bounds.

    Weights are sqrt(max(target, eps)) so that large positive samples dominate
    and non-positive samples carry (almost) no weight.
    """
    t = np.asarray(target, dtype=float)
    g = np.asarray(gains, dtype=float)
    w = np.sqrt(np.maximum(t, eps))
    num = float(np.sum(w * t * g))
    den = float(np.sum(w * g * g)) + eps
    return float(np.clip(num / den, bounds.a_min, bounds.a_max))


def huber(r, delta: float):
    """Elementwise Huber loss: quadratic core, linear tails."""
    r = np.asarray(r, dtype=float)
    a = np.abs(r)
    return np.where(a <= delta, 0.5 * r * r, delta * (a - 0.5 * delta))


def _student_t_loss(r, delta: float, dof: float):
    r = np.asarray(r, dtype=float)
    return 0.5 * (dof + 1.0) * np.log1p((r / delta) ** 2 / dof)


def width_penalty(beta: float, bounds: FitBounds) -> float:
    """Quadratic penalty outside [beta_min, beta_max], zero inside."""
    lo = max(0.0, bounds.beta_min - beta)
    hi = max(0.0, beta - bounds.beta_max)
    return lo * lo + hi * hi


def robust_objective(residuals, beta: float, cfg: RobustLossConfig, bounds: FitBounds) -> float:
    """Robust data loss of the residuals plus the beamwidth penalty.

    cfg must be concrete (see RobustLossConfig.resolved).
    """
    if cfg.delta is None or cfg.lambda_beta is None:
        raise ValueError("loss config must be resolved before evaluation")
    if cfg.loss == "huber":
        data = float(np.sum(huber(residuals, cfg.delta)))
    else:
        data = float(np.sum(_student_t_loss(residuals, cfg.delta, cfg.student_dof)))
    return data + cfg.lambda_beta * width_penalty(beta, bounds)


def init_from_peak(target, looks: LookAngles, bounds: FitBounds) -> BeamParams:
    """Initialization: beam centered at the look angles of the peak sample.

    Ties at the peak resolve to the lowest index; beta starts mid-range and
    the amplitude starts at the (clamped) peak value.
    """
    t = np.asarray(target, dtype=float)
    idx = int(np.argmax(t))
    az = float(np.mod(np.asarray(looks.azimuth)[idx], TWO_PI))
    el = float(np.asarray(looks.offnadir)[idx])
    beta = 0.5 * (bounds.beta_min + bounds.beta_max)
    amp = float(np.clip(t[idx], bounds.a_min, bounds.a_max))
    return BeamParams(az0=az, el0=el, beta=beta, amplitude=amp)


def fit_single(
    target,
    looks: LookAngles,
    bounds: FitBounds = FitBounds(),
    cfg: RobustLossConfig = RobustLossConfig(),
    *,
    n_az_starts: int = _N_AZ_STARTS,
    max_iter: int = _MAX_ITER,
) -> SingleFitResult:
    """Fit one beam to target measurements at the given look angles.

    The amplitude is re-derived in closed form at every candidate point of the
    search.  The returned objective never exceeds the objective of the
    initialization point.

    Raises InsufficientSamples when fewer than 4 samples are provided.
    """
    t = np.asarray(target, dtype=float)
    if t.size < 4:
        raise InsufficientSamples(f"need >= 4 samples, got {t.size}")
    loss_cfg = cfg.resolved(t)
    eps = loss_cfg.epsilon

    init = init_from_peak(t, looks, bounds)
    el_lo = max(0.0, init.el0 - bounds.delta_el)
    el_hi = min(bounds.el_max, init.el0 + bounds.delta_el)
    if el_hi < el_lo:
        el_lo = el_hi = min(bounds.el_max, init.el0)
    el_c = min(max(init.el0, el_lo), el_hi)
    az_c = init.az0
    box = [
        (az_c - bounds.delta_az, az_c + bounds.delta_az),
        (el_lo, el_hi),
        (bounds.beta_min, bounds.beta_max),
    ]

    az = np.mod(np.asarray(looks.azimuth, dtype=float), TWO_PI)
    el = np.asarray(looks.offnadir, dtype=float)

    def objective(v):
        g = _gain_arrays(az, el, v[0], v[1], v[2])
        amp = closed_form_amplitude(t, g, bounds, eps)
        return robust_objective(t - amp * g, v[2], loss_cfg, bounds)

    starts = [np.array([az_c, el_c, init.beta])]
    for off in np.linspace(-bounds.delta_az, bounds.delta_az, n_az_starts):
        starts.append(np.array([az_c + off, el_c, init.beta]))

    # power-weighted centroid of the bright samples; the single peak station
    # can sit several degrees off center under sparse sampling
    bright = t >= 0.3 * float(np.max(t)) if float(np.max(t)) > 0 else np.zeros_like(t, bool)
    if int(np.count_nonzero(bright)) >= 2:
        w = t[bright]
        az_cen = float(np.angle(np.sum(w * np.exp(1j * az[bright]))))
        # keep the start inside the azimuth box, which is centered on az_c
        az_cen = az_c + float(np.angle(np.exp(1j * (az_cen - az_c))))
        el_cen = min(max(float(np.sum(w * el[bright]) / np.sum(w)), el_lo), el_hi)
        starts.append(np.array([az_cen, el_cen, init.beta]))
        starts.append(np.array([az_cen, el_cen, bounds.beta_min]))
    # narrow-width variant of the peak start: mid-range beta alone misses
    # narrow-beam basins
    starts.append(np.array([az_c, el_c, bounds.beta_min]))

    best_v = starts[0]
    best_f = objective(starts[0])
    best_converged = False
    for s in starts:
        res = minimize(
            objective,
            s,
            method="L-BFGS-B",
            bounds=box,
            options={"maxiter": max_iter, "ftol": _FTOL, "gtol": _GTOL},
        )
        if res.fun < best_f:
            best_v, best_f, best_converged = res.x, float(res.fun), bool(res.success)

    az0 = float(np.mod(best_v[0], TWO_PI))
    el0 = float(best_v[1])
    beta = float(best_v[2])
    g = _gain_arrays(az, el, az0, el0, beta)
    amp = closed_form_amplitude(t, g, bounds, eps)
    resid = t - amp * g
    rss = float(resid @ resid)
    loss_value = robust_objective(resid, beta, loss_cfg, bounds)
    params = BeamParams(az0=az0, el0=el0, beta=beta, amplitude=amp)
    return SingleFitResult(
        params=params, rss_value=rss, loss_value=loss_value, converged=best_converged
    )

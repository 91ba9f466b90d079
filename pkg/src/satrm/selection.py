"""Model-order control for greedy satellite admission.

Each greedy round asks whether adding one more beam (q extra parameters) is
statistically justified.  Three interchangeable rules are provided:

* BIC / AIC deltas compared against a slowly growing threshold
  tau(n_c) = tau_scale * ln(n_c + 1), where n_c is the number of candidates
  examined in the round;
* a nested-model GLRT whose F statistic is compared against the upper
  quantile of an F distribution at a Bonferroni-corrected level alpha / n_c.

The F distribution CDF is evaluated through a regularized incomplete beta
function computed by continued fraction, and inverted by bisection with a
secant polish, so no external special-function machinery is required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Substituted for a non-positive residual sum of squares (per sample) so that
# log/ratio formulas stay finite; callers flag the event.
RSS_FLOOR_PER_SAMPLE = 1e-30

_BETACF_TOL = 1e-12
_BETACF_MAX_ITER = 500
_TINY = 1e-300


class DegenerateRss(ValueError):
    """Residual sum of squares was zero or negative."""


class InvalidDof(ValueError):
    """Not enough samples for the requested number of parameters."""


@dataclass(frozen=True)
class SelectionConfig:
    """Configuration of the per-round acceptance rule.

    criterion : "bic", "aic" or "glrt"
    alpha     : GLRT family-wise error target, Bonferroni-split across the
                n_c candidates of a round
    q         : parameters added per admitted beam (3 when the amplitude is
                eliminated in closed form, 4 when counted explicitly)
    tau_scale : scale of the BIC/AIC acceptance threshold tau(n_c)
    tau_const : optional constant threshold overriding the log form
    """

    criterion: str = "glrt"
    alpha: float = 0.005
    q: int = 4
    tau_scale: float = 2.0
    tau_const: float | None = None

    def __post_init__(self):
        if self.criterion not in ("bic", "aic", "glrt"):
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha {self.alpha!r} outside (0, 1)")
        if self.q not in (3, 4):
            raise ValueError(f"q {self.q!r} must be 3 or 4")
        if self.tau_scale <= 0:
            raise ValueError(f"tau_scale {self.tau_scale!r} must be positive")


@dataclass(frozen=True)
class SelectionScore:
    """Outcome of one candidate's acceptance test in one greedy round."""

    candidate: int
    score: float
    threshold: float
    accepted: bool
    rss_before: float
    rss_after: float
    note: str = ""


def information_criterion(kind: str, rss: float, n: int, p: int) -> float:
    """BIC or AIC of a fit with p parameters, n samples and residual RSS.

    BIC = p ln n + n ln(rss / n);  AIC = 2 p + n ln(rss / n).
    """
    if rss <= 0:
        raise DegenerateRss(f"rss {rss!r} must be positive")
    if n < 1:
        raise ValueError(f"n {n!r} must be >= 1")
    fit_term = n * math.log(rss / n)
    if kind == "bic":
        return p * math.log(n) + fit_term
    if kind == "aic":
        return 2.0 * p + fit_term
    raise ValueError(f"unknown criterion {kind!r}")


def delta_criterion(kind: str, rss0: float, rss1: float, n: int, p_t: int, q: int) -> float:
    """Criterion improvement when q parameters reduce the RSS from rss0 to rss1.

    Positive values favor the richer model.
    """
    return information_criterion(kind, rss0, n, p_t) - information_criterion(
        kind, rss1, n, p_t + q
    )


def f_statistic(rss0: float, rss1: float, d: int, n: int, p_t: int) -> float:
    """Nested-model F statistic for d extra parameters on top of p_t.

    F = ((rss0 - rss1) / d) / (rss1 / (n - (p_t + d))).
    """
    if n <= p_t + d:
        raise InvalidDof(f"n={n} too small for p_t={p_t} plus d={d}")
    if rss1 <= 0:
        raise DegenerateRss(f"rss1 {rss1!r} must be positive")
    return ((rss0 - rss1) / d) / (rss1 / (n - (p_t + d)))


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < _BETACF_TOL:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b) for a, b > 0."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        a * math.log(x)
        + b * math.log1p(-x)
        - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    # same front factor: the exponent is symmetric under (a, x) <-> (b, 1-x)
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_cdf(x: float, d1: float, d2: float) -> float:
    """CDF of the F distribution with (d1, d2) degrees of freedom."""
    if d1 <= 0 or d2 <= 0:
        raise InvalidDof("degrees of freedom must be positive")
    if x <= 0.0:
        return 0.0
    t = d1 * x / (d1 * x + d2)
    return regularized_incomplete_beta(0.5 * d1, 0.5 * d2, t)


def f_quantile(d1: float, d2: float, prob: float) -> float:
    """Inverse CDF of the F distribution: x with CDF(x) = prob.

    Bracketing by doubling, then bisection, then a short secant polish.
    """
    if d1 <= 0 or d2 <= 0:
        raise InvalidDof("degrees of freedom must be positive")
    if not (0.0 < prob < 1.0):
        raise ValueError(f"prob {prob!r} outside (0, 1)")
    lo, hi = 0.0, 1.0
    while f_cdf(hi, d1, d2) < prob:
        hi *= 2.0
        if hi > 1e300:
            raise RuntimeError("failed to bracket F quantile")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f_cdf(mid, d1, d2) < prob:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    x = 0.5 * (lo + hi)
    x0, x1 = lo, hi
    f0 = f_cdf(x0, d1, d2) - prob
    f1 = f_cdf(x1, d1, d2) - prob
    for _ in range(8):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not (lo <= x2 <= hi):
            break
        f2 = f_cdf(x2, d1, d2) - prob
        x0, f0, x1, f1 = x1, f1, x2, f2
        x = x2
        if abs(f2) < 1e-14:
            break
    return x


def acceptance_test(
    candidate: int,
    rss_before: float,
    rss_after: float,
    cfg: SelectionConfig,
    n_c: int,
    n: int,
    p_t: int,
) -> SelectionScore:
    """Decide whether one candidate's fit justifies q more parameters.

    n_c is the number of candidates examined in the round (multiplicity
    correction), n the number of measurements, p_t the parameter count of the
    model before this round.  Non-positive RSS inputs are substituted with a
    tiny floor and flagged via the returned note.
    """
    if n_c < 1:
        raise ValueError(f"n_c {n_c!r} must be >= 1")
    note = ""
    floor = n * RSS_FLOOR_PER_SAMPLE
    rss0, rss1 = rss_before, rss_after
    if rss0 <= 0:
        rss0, note = floor, "degenerate_rss"
    if rss1 <= 0:
        rss1, note = floor, "degenerate_rss"
    if cfg.criterion == "glrt":
        score = f_statistic(rss0, rss1, cfg.q, n, p_t)
        threshold = f_quantile(cfg.q, n - (p_t + cfg.q), 1.0 - cfg.alpha / n_c)
        accepted = score >= threshold
    else:
        score = delta_criterion(cfg.criterion, rss0, rss1, n, p_t, cfg.q)
        if cfg.tau_const is not None:
            threshold = cfg.tau_const
        else:
            threshold = cfg.tau_scale * math.log(n_c + 1.0)
        accepted = score > threshold
    return SelectionScore(
        candidate=candidate,
        score=float(score),
        threshold=float(threshold),
        accepted=bool(accepted),
        rss_before=float(rss_before),
        rss_after=float(rss_after),
        note=note,
    )

"""Scoring of inferred active sets against ground truth.

Detection quality is scored on candidate indices (precision / recall / F1).
Field quality compares the noiseless RSS vectors implied by the true and the
inferred models at the measurement locations.  Parameter accuracy pairs
estimated beams with true beams through an optimal assignment on beam-center
angular distance, then averages absolute errors over the paired beams whose
candidate index is a true positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import linear_sum_assignment

from .beams import BeamParams, wrap_angle_diff


class NoMatches(ValueError):
    """No true-positive pairing exists for parameter-error computation."""


@dataclass
class TrialReport:
    """Flat per-trial scorecard used by the sweep harness."""

    k_true: int
    k_hat: int
    precision: float
    recall: float
    f1: float
    rmse_rss: float
    pearson_corr: float
    az_err_deg: float
    el_err_deg: float
    beta_err_deg: float
    runtime_s: float
    flags: list


def detection_metrics(truth, estimate) -> tuple:
    """Precision, recall and F1 of the estimated index set.

    Conventions: an empty estimate has precision 1 against an empty truth and
    0 otherwise; recall of an empty truth is 1; F1 is 0 when both precision
    and recall are 0.
    """
    t_set, e_set = set(truth), set(estimate)
    tp = len(t_set & e_set)
    if e_set:
        precision = tp / len(e_set)
    else:
        precision = 1.0 if not t_set else 0.0
    recall = tp / len(t_set) if t_set else 1.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def rss_metrics(truth_field, est_field) -> tuple:
    """RMSE and Pearson correlation between two RSS vectors.

    The correlation is NaN when either vector is constant (undefined); the
    caller is expected to flag that condition.
    """
    x = np.asarray(truth_field, dtype=float)
    xh = np.asarray(est_field, dtype=float)
    if x.shape != xh.shape:
        raise ValueError("field vectors must have matching shapes")
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    diff = xh - x
    rmse = math.sqrt(float(diff @ diff) / x.size)
    cx = x - x.mean()
    ce = xh - xh.mean()
    denom = float(np.linalg.norm(cx)) * float(np.linalg.norm(ce))
    corr = float(cx @ ce) / denom if denom > 0 else math.nan
    return rmse, corr


def beam_center_distance(p: BeamParams, q: BeamParams) -> float:
    """Angular distance between two beam centers in the (az, el) plane."""
    daz = float(wrap_angle_diff(p.az0, q.az0))
    return math.hypot(daz, p.el0 - q.el0)


def param_errors(
    truth: Mapping[int, BeamParams], estimate: Mapping[int, BeamParams]
) -> tuple:
    """Mean absolute (az, el, beta) errors in degrees over matched beams.

    Estimated beams are paired with true beams by the assignment minimizing
    total beam-center distance (verified against brute force in tests); the
    averages run over assigned pairs whose estimated candidate index belongs
    to the truth set.  Raises NoMatches when no such pair exists.
    """
    if not truth or not estimate:
        raise NoMatches("empty truth or estimate")
    if not set(truth) & set(estimate):
        raise NoMatches("no common candidate indices")
    t_ids = sorted(truth)
    e_ids = sorted(estimate)
    cost = np.zeros((len(t_ids), len(e_ids)))
    for i, ti in enumerate(t_ids):
        for j, ej in enumerate(e_ids):
            cost[i, j] = beam_center_distance(truth[ti], estimate[ej])
    rows, cols = linear_sum_assignment(cost)
    az_errs, el_errs, beta_errs = [], [], []
    for i, j in zip(rows, cols):
        if e_ids[j] not in truth:
            continue
        tp_param = truth[t_ids[i]]
        ep_param = estimate[e_ids[j]]
        az_errs.append(abs(float(wrap_angle_diff(tp_param.az0, ep_param.az0))))
        el_errs.append(abs(tp_param.el0 - ep_param.el0))
        beta_errs.append(abs(tp_param.beta - ep_param.beta))
    if not az_errs:
        raise NoMatches("assignment produced no true-positive pairs")
    return (
        math.degrees(sum(az_errs) / len(az_errs)),
        math.degrees(sum(el_errs) / len(el_errs)),
        math.degrees(sum(beta_errs) / len(beta_errs)),
    )

"""Sparse-recovery and detection baselines over a fitted beam dictionary.

The dictionary holds one column per screened candidate: the beam-gain shape
obtained by fitting that candidate alone against the raw measurements, scaled
to unit norm.  Matching pursuit, orthogonal matching pursuit and a
non-negative Lasso then operate on that fixed dictionary; a peak-detection
heuristic instead works directly on the residual vector with tightly
constrained local refits.  All solvers return the same estimate container as
the main pipeline so they can be scored identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .beams import BeamParams, beam_gain, signature
from .fitting import FitBounds, RobustLossConfig, fit_single
from .inference import ActiveSetEstimate
from .selection import RSS_FLOOR_PER_SAMPLE, information_criterion

_COEF_TOL = 1e-12
_CORR_TOL = 1e-15


@dataclass
class Dictionary:
    """Unit-norm beam-shape dictionary over screened candidates.

    columns       : (M, C) array, one unit-norm column per candidate
    column_params : fitted BeamParams per column (amplitude as fitted)
    column_norms  : norm of each raw gain signature before normalization
    candidate_ids : candidate index per column
    """

    columns: np.ndarray
    column_params: list
    column_norms: np.ndarray
    candidate_ids: list


def build_dictionary(
    y,
    candidate_ids,
    looks_by_id,
    bounds: FitBounds = FitBounds(),
    cfg: RobustLossConfig = RobustLossConfig(),
) -> Dictionary:
    """Fit each candidate alone on the raw measurements and normalize."""
    y = np.asarray(y, dtype=float)
    cols, params, norms = [], [], []
    for s in candidate_ids:
        fit = fit_single(y, looks_by_id[s], bounds, cfg)
        g = np.asarray(beam_gain(looks_by_id[s], fit.params), dtype=float)
        nrm = float(np.linalg.norm(g))
        if nrm > 0:
            cols.append(g / nrm)
        else:
            cols.append(g)
        params.append(fit.params)
        norms.append(nrm)
    columns = np.column_stack(cols) if cols else np.zeros((y.size, 0))
    return Dictionary(
        columns=columns,
        column_params=params,
        column_norms=np.array(norms),
        candidate_ids=list(candidate_ids),
    )


def _estimate_from_coefs(y, dic: Dictionary, coefs: np.ndarray) -> ActiveSetEstimate:
    """Package per-column coefficients as an estimate; drops ~zero columns."""
    y = np.asarray(y, dtype=float)
    selected, params = [], []
    field = np.zeros_like(y)
    for j, c in enumerate(coefs):
        if c > _COEF_TOL and dic.column_norms[j] > 0:
            selected.append(dic.candidate_ids[j])
            params.append(replace(dic.column_params[j], amplitude=float(c / dic.column_norms[j])))
            field = field + c * dic.columns[:, j]
    return ActiveSetEstimate(
        selected=selected,
        params=params,
        k_hat=len(selected),
        round_scores=[],
        final_residual=y - field,
    )


def omp_select(y, dic: Dictionary, k_max: int = 10, stop_tol: float = 1e-4) -> ActiveSetEstimate:
    """Orthogonal matching pursuit with non-negative amplitudes.

    Per iteration: pick the unselected atom with the largest absolute
    correlation against the residual, re-solve least squares over the support
    (clamping amplitudes at zero), and recompute the residual.  Stops at
    k_max atoms, when the relative residual drops below stop_tol, or when an
    iteration fails to reduce the residual.
    """
    y = np.asarray(y, dtype=float)
    n_cols = dic.columns.shape[1]
    y_norm = float(np.linalg.norm(y))
    coefs = np.zeros(n_cols)
    if y_norm == 0.0 or n_cols == 0:
        return _estimate_from_coefs(y, dic, coefs)
    support: list[int] = []
    resid = y.copy()
    resid_norm = y_norm
    for _ in range(min(k_max, n_cols)):
        corr = dic.columns.T @ resid
        if support:
            corr[np.array(support)] = 0.0
        j = int(np.argmax(np.abs(corr)))
        if abs(corr[j]) <= _CORR_TOL:
            break
        trial_support = support + [j]
        a_mat = dic.columns[:, trial_support]
        sol, *_ = np.linalg.lstsq(a_mat, y, rcond=None)
        sol = np.maximum(sol, 0.0)
        new_resid = y - a_mat @ sol
        new_norm = float(np.linalg.norm(new_resid))
        if new_norm >= resid_norm - 1e-15 * max(1.0, resid_norm):
            break
        support, resid, resid_norm = trial_support, new_resid, new_norm
        coefs = np.zeros(n_cols)
        coefs[support] = sol
        if resid_norm <= stop_tol * y_norm:
            break
    return _estimate_from_coefs(y, dic, coefs)


def mp_select(y, dic: Dictionary, k_max: int = 10, stop_tol: float = 1e-4) -> ActiveSetEstimate:
    """Plain matching pursuit: no re-solve, signed projections accumulate."""
    y = np.asarray(y, dtype=float)
    n_cols = dic.columns.shape[1]
    y_norm = float(np.linalg.norm(y))
    acc = np.zeros(n_cols)
    if y_norm == 0.0 or n_cols == 0:
        return _estimate_from_coefs(y, dic, acc)
    resid = y.copy()
    for _ in range(k_max):
        corr = dic.columns.T @ resid
        j = int(np.argmax(np.abs(corr)))
        c = float(corr[j])
        if abs(c) <= _CORR_TOL:
            break
        acc[j] += c
        resid = resid - c * dic.columns[:, j]
        if float(np.linalg.norm(resid)) <= stop_tol * y_norm:
            break
    return _estimate_from_coefs(y, dic, np.maximum(acc, 0.0))


def _lasso_cd(columns: np.ndarray, y: np.ndarray, lam: float, max_iter: int = 1000, tol: float = 1e-12) -> np.ndarray:
    """Coordinate descent for min 0.5||y - Dc||^2 + lam*sum(c), c >= 0.

    Columns are unit norm, so each coordinate update is a one-sided soft
    threshold of the partial correlation.
    """
    n_cols = columns.shape[1]
    c = np.zeros(n_cols)
    resid = y.copy()
    for _ in range(max_iter):
        max_step = 0.0
        for i in range(n_cols):
            old = c[i]
            rho = float(columns[:, i] @ resid) + old
            new = max(0.0, rho - lam)
            if new != old:
                resid = resid + (old - new) * columns[:, i]
                c[i] = new
                max_step = max(max_step, abs(new - old))
        if max_step < tol * max(1.0, float(np.max(c)) if n_cols else 1.0):
            break
    return c


def lasso_select(y, dic: Dictionary, lambda_grid=None) -> ActiveSetEstimate:
    """Non-negative Lasso path with BIC-selected regularization.

    The default grid is 20 log-spaced multiples (1e-3 .. 1) of the largest
    absolute correlation between y and the dictionary.  For each lambda the
    support is refit by clamped least squares; the support with the lowest
    BIC wins (one amplitude parameter per retained atom).
    """
    y = np.asarray(y, dtype=float)
    m = y.size
    n_cols = dic.columns.shape[1]
    if n_cols == 0:
        return _estimate_from_coefs(y, dic, np.zeros(0))
    if lambda_grid is None:
        lam_max = float(np.max(np.abs(dic.columns.T @ y)))
        if lam_max <= 0:
            return _estimate_from_coefs(y, dic, np.zeros(n_cols))
        lambda_grid = lam_max * np.logspace(-3.0, 0.0, 20)
    best_bic = math.inf
    best_coefs = np.zeros(n_cols)
    floor = m * RSS_FLOOR_PER_SAMPLE
    for lam in lambda_grid:
        c = _lasso_cd(dic.columns, y, float(lam))
        support = [i for i in range(n_cols) if c[i] > 1e-8]
        refit = np.zeros(n_cols)
        if support:
            a_mat = dic.columns[:, support]
            sol, *_ = np.linalg.lstsq(a_mat, y, rcond=None)
            sol = np.maximum(sol, 0.0)
            refit[support] = sol
            r = y - a_mat @ sol
        else:
            r = y
        rss = max(float(r @ r), floor)
        bic = information_criterion("bic", rss, m, len(support))
        if bic < best_bic:
            best_bic = bic
            best_coefs = refit
    return _estimate_from_coefs(y, dic, best_coefs)


def peak_select(
    y,
    candidate_ids,
    looks_by_id,
    bounds: FitBounds = FitBounds(),
    cfg: RobustLossConfig = RobustLossConfig(),
    threshold_frac: float = 0.3,
    k_max: int = 10,
) -> ActiveSetEstimate:
    """Conservative peak detector with tightly windowed local refits.

    While the residual peak stays above threshold_frac times the original
    peak, the peak is attributed to whichever unselected candidate's locally
    constrained fit (a +/- 2 degree window) reduces the residual the most.
    """
    y = np.asarray(y, dtype=float)
    top = float(np.max(y)) if y.size else 0.0
    empty = ActiveSetEstimate(
        selected=[], params=[], k_hat=0, round_scores=[], final_residual=y.copy()
    )
    if top <= 0.0 or not candidate_ids:
        return empty
    tight = replace(bounds, delta_az=math.radians(2.0), delta_el=math.radians(2.0))
    selected, params = [], []
    resid = y.copy()
    while len(selected) < k_max:
        peak = float(np.max(resid))
        if peak < threshold_frac * top:
            break
        rss_now = float(resid @ resid)
        best = None
        for s in candidate_ids:
            if s in selected:
                continue
            fit = fit_single(resid, looks_by_id[s], tight, cfg)
            xhat = signature(fit.params, looks_by_id[s])
            r1 = resid - xhat
            rss1 = float(r1 @ r1)
            if best is None or rss1 < best[0]:
                best = (rss1, s, fit.params, r1)
        if best is None or best[0] >= rss_now:
            break
        _, s, p, resid = best
        selected.append(s)
        params.append(p)
    return ActiveSetEstimate(
        selected=selected,
        params=params,
        k_hat=len(selected),
        round_scores=[],
        final_residual=resid,
    )

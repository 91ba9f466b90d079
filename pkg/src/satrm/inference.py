"""Active-set inference over candidate satellites and radio-map synthesis.

The estimator builds the active set greedily: each round fits one beam per
unselected candidate against the current residual, gates every fit through a
model-order acceptance test, admits the best accepted candidate, and subtracts
its predicted contribution.  An optional block-coordinate refinement then
re-optimizes all admitted beams jointly against the raw measurements, with a
quadratic anchor pulling each beam toward its greedy estimate.  The refined
model can finally be evaluated at arbitrary query positions to synthesize a
continuous received-signal-strength map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .beams import TWO_PI, BeamParams, _gain_arrays, predict_field, signature, wrap_angle_diff
from .fitting import FitBounds, RobustLossConfig, fit_single, width_penalty
from .geometry import GeoPosition, LookAngles, ecef_from_geodetic, look_angles
from .selection import InvalidDof, SelectionConfig, acceptance_test

_REFINE_MAX_ITER = 100


@dataclass(frozen=True)
class RefineConfig:
    """Joint refinement settings.

    eta             : anchor weight pulling each beam toward its greedy
                      estimate (None: 0.1 times the squared median
                      measurement, per squared radian)
    max_outer_iters : maximum block-coordinate sweeps
    tol             : relative objective decrease at which to stop
    """

    eta: float | None = None
    max_outer_iters: int = 20
    tol: float = 1e-8

    def __post_init__(self):
        if self.eta is not None and self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class ActiveSetEstimate:
    """Inferred active satellites and their beam parameters.

    selected          : admitted candidate indices, in admission order
    params            : fitted beams aligned with selected
    k_hat             : number of admitted satellites
    round_scores      : per-round acceptance outcomes (the admitted candidate,
                        or the best rejected one for the terminating round)
    final_residual    : measurements minus the model prediction
    refine_objectives : joint objective trace when refinement ran
    background        : constant background level included in predictions
    """

    selected: list
    params: list
    k_hat: int
    round_scores: list
    final_residual: np.ndarray
    refine_objectives: list = field(default_factory=list)
    background: float = 0.0


def greedy_select(
    y,
    candidate_ids: Sequence[int],
    looks_by_id: Mapping[int, LookAngles],
    bounds: FitBounds = FitBounds(),
    loss_cfg: RobustLossConfig = RobustLossConfig(),
    sel_cfg: SelectionConfig = SelectionConfig(),
    k_max: int = 10,
    *,
    refine_each_round: bool = False,
    refine_cfg: RefineConfig | None = None,
) -> ActiveSetEstimate:
    """Greedy active-set construction gated by the acceptance test.

    Stops when no remaining candidate is accepted or k_max beams are admitted.
    Score ties resolve to the lowest candidate index.  With
    refine_each_round=True a joint refinement runs after every admission and
    the residual is recomputed from scratch against the refined model.
    """
    y = np.asarray(y, dtype=float)
    n = int(y.size)
    residual = y.copy()
    selected: list[int] = []
    params: list[BeamParams] = []
    history = []

    while len(selected) < k_max:
        remaining = [s for s in candidate_ids if s not in selected]
        if not remaining:
            break
        n_c = len(remaining)
        p_t = sel_cfg.q * len(selected)
        rss0 = float(residual @ residual)
        entries = []
        try:
            for s in remaining:
                fit = fit_single(residual, looks_by_id[s], bounds, loss_cfg)
                xhat = signature(fit.params, looks_by_id[s])
                r1 = residual - xhat
                rss1 = float(r1 @ r1)
                score = acceptance_test(s, rss0, rss1, sel_cfg, n_c, n, p_t)
                entries.append((score, fit, xhat))
        except InvalidDof:
            break
        accepted = [e for e in entries if e[0].accepted]
        if not accepted:
            best_rejected = max(entries, key=lambda e: (e[0].score, -e[0].candidate))
            history.append(best_rejected[0])
            break
        score, fit, xhat = max(accepted, key=lambda e: (e[0].score, -e[0].candidate))
        selected.append(score.candidate)
        params.append(fit.params)
        history.append(score)
        residual = residual - xhat
        if refine_each_round and len(selected) > 1:
            interim = ActiveSetEstimate(
                selected=list(selected),
                params=list(params),
                k_hat=len(selected),
                round_scores=list(history),
                final_residual=residual,
            )
            interim = joint_refine(
                y, interim, looks_by_id, bounds, refine_cfg or RefineConfig()
            )
            params = list(interim.params)
            residual = np.asarray(interim.final_residual).copy()

    return ActiveSetEstimate(
        selected=selected,
        params=params,
        k_hat=len(selected),
        round_scores=history,
        final_residual=residual,
    )


def _anchor_distance_sq(v_az, v_el, v_beta, anchor):
    daz = float(wrap_angle_diff(v_az, anchor[0]))
    return daz * daz + (v_el - anchor[1]) ** 2 + (v_beta - anchor[2]) ** 2


def joint_refine(
    y,
    est: ActiveSetEstimate,
    looks_by_id: Mapping[int, LookAngles],
    bounds: FitBounds = FitBounds(),
    cfg: RefineConfig = RefineConfig(),
) -> ActiveSetEstimate:
    """Block-coordinate refinement of all admitted beams against y.

    Each block refits one beam against y minus the other beams' predictions,
    minimizing squared error plus the beamwidth penalty plus an anchor term
    eta * ||(az0, el0, beta) - greedy estimate||^2; the amplitude is re-derived
    in closed form.  Updates that would increase the joint objective are
    dropped, so the recorded objective trace is non-increasing.
    """
    if not est.selected:
        return est
    y = np.asarray(y, dtype=float)
    eta = cfg.eta
    if eta is None:
        med = float(np.median(y))
        eta = 0.1 * med * med
    lam = RobustLossConfig().resolved(y).lambda_beta

    sel = list(est.selected)
    prm = [p for p in est.params]
    anchors = [(p.az0, p.el0, p.beta) for p in prm]
    looks = [looks_by_id[s] for s in sel]
    az_arr = [np.mod(np.asarray(lk.azimuth, dtype=float), TWO_PI) for lk in looks]
    el_arr = [np.asarray(lk.offnadir, dtype=float) for lk in looks]
    sigs = [signature(p, lk) for p, lk in zip(prm, looks)]
    eps = RobustLossConfig().epsilon

    def joint_value(sig_list, prm_list):
        resid = y.copy()
        for s_vec in sig_list:
            resid = resid - s_vec
        val = float(resid @ resid)
        for p, anchor in zip(prm_list, anchors):
            val += lam * width_penalty(p.beta, bounds)
            val += eta * _anchor_distance_sq(p.az0, p.el0, p.beta, anchor)
        return val

    obj = joint_value(sigs, prm)
    trace = [obj]

    for _ in range(cfg.max_outer_iters):
        obj_prev = obj
        for i in range(len(sel)):
            tgt = y.copy()
            for j, s_vec in enumerate(sigs):
                if j != i:
                    tgt = tgt - s_vec
            anchor = anchors[i]
            az_i, el_i = az_arr[i], el_arr[i]
            el_lo = max(0.0, anchor[1] - bounds.delta_el)
            el_hi = min(bounds.el_max, anchor[1] + bounds.delta_el)
            if el_hi < el_lo:
                el_lo = el_hi = min(bounds.el_max, anchor[1])
            box = [
                (anchor[0] - bounds.delta_az, anchor[0] + bounds.delta_az),
                (el_lo, el_hi),
                (bounds.beta_min, bounds.beta_max),
            ]

            def block_obj(v):
                g = _gain_arrays(az_i, el_i, v[0], v[1], v[2])
                num = float(np.sum(tgt * g))
                den = float(np.sum(g * g)) + eps
                amp = float(np.clip(num / den, bounds.a_min, bounds.a_max))
                r = tgt - amp * g
                return (
                    float(r @ r)
                    + lam * width_penalty(v[2], bounds)
                    + eta * _anchor_distance_sq(v[0], v[1], v[2], anchor)
                )

            cur = prm[i]
            v0 = np.array([cur.az0, cur.el0, cur.beta])
            if not (box[0][0] <= v0[0] <= box[0][1]):
                # wrapped az0 can sit a full turn from the anchor window
                v0[0] = v0[0] - TWO_PI if v0[0] - TWO_PI >= box[0][0] else anchor[0]
            v0[1] = min(max(v0[1], el_lo), el_hi)
            res = minimize(
                block_obj,
                v0,
                method="L-BFGS-B",
                bounds=box,
                options={"maxiter": _REFINE_MAX_ITER, "ftol": 1e-12, "gtol": 1e-9},
            )
            az0 = float(np.mod(res.x[0], TWO_PI))
            el0 = float(res.x[1])
            beta = float(res.x[2])
            g = _gain_arrays(az_i, el_i, az0, el0, beta)
            num = float(np.sum(tgt * g))
            den = float(np.sum(g * g)) + eps
            amp = float(np.clip(num / den, bounds.a_min, bounds.a_max))
            cand = BeamParams(az0=az0, el0=el0, beta=beta, amplitude=amp)
            cand_sig = signature(cand, looks[i])
            new_sigs = list(sigs)
            new_sigs[i] = cand_sig
            new_prm = list(prm)
            new_prm[i] = cand
            cand_obj = joint_value(new_sigs, new_prm)
            if cand_obj <= obj:
                prm, sigs, obj = new_prm, new_sigs, cand_obj
        trace.append(obj)
        if obj_prev - obj < cfg.tol * max(obj_prev, 1e-30):
            break

    resid = y.copy()
    for s_vec in sigs:
        resid = resid - s_vec
    return ActiveSetEstimate(
        selected=sel,
        params=prm,
        k_hat=len(sel),
        round_scores=list(est.round_scores),
        final_residual=resid,
        refine_objectives=trace,
        background=est.background,
    )


def estimate_field(
    est: ActiveSetEstimate, looks_by_id: Mapping[int, LookAngles], *, m: int | None = None
) -> np.ndarray:
    """Model-predicted RSS at the measurement points behind looks_by_id."""
    looks = [looks_by_id[s] for s in est.selected]
    return predict_field(est.params, looks, m=m) + est.background


def synthesize_rm(
    est: ActiveSetEstimate,
    sat_positions: np.ndarray,
    query_points: Sequence[GeoPosition],
) -> np.ndarray:
    """Evaluate the inferred RSS field at arbitrary ground query positions.

    sat_positions is an (N, 3) ECEF array indexed by candidate id.  Querying
    at a measurement location reproduces the model prediction there exactly,
    because the same geometry and superposition code paths are used.
    """
    sats = np.asarray(sat_positions, dtype=float)
    q_ecef = np.stack([ecef_from_geodetic(p) for p in query_points]) if query_points else np.zeros((0, 3))
    looks = {s: look_angles(sats[s], q_ecef) for s in est.selected}
    return estimate_field(est, looks, m=len(query_points))


def estimate_to_dict(est: ActiveSetEstimate) -> dict:
    """JSON-ready representation of an estimate; angles in degrees."""
    from .selection import SelectionScore  # local import to avoid cycle noise

    return {
        "selected": [int(s) for s in est.selected],
        "k_hat": int(est.k_hat),
        "params": [
            {
                "az0_deg": math.degrees(p.az0),
                "el0_deg": math.degrees(p.el0),
                "beta_deg": math.degrees(p.beta),
                "amplitude": p.amplitude,
            }
            for p in est.params
        ],
        "scores": [
            {
                "candidate": sc.candidate,
                "score": sc.score,
                "threshold": sc.threshold,
                "accepted": sc.accepted,
                "rss_before": sc.rss_before,
                "rss_after": sc.rss_after,
                "note": sc.note,
            }
            for sc in est.round_scores
        ],
        "background": est.background,
        "refine_objectives": [float(v) for v in est.refine_objectives],
    }


def estimate_from_dict(d: dict) -> ActiveSetEstimate:
    from .selection import SelectionScore

    params = [
        BeamParams(
            az0=math.radians(p["az0_deg"]),
            el0=math.radians(p["el0_deg"]),
            beta=math.radians(p["beta_deg"]),
            amplitude=float(p["amplitude"]),
        )
        for p in d["params"]
    ]
    scores = [
        SelectionScore(
            candidate=int(sc["candidate"]),
            score=float(sc["score"]),
            threshold=float(sc["threshold"]),
            accepted=bool(sc["accepted"]),
            rss_before=float(sc["rss_before"]),
            rss_after=float(sc["rss_after"]),
            note=sc.get("note", ""),
        )
        for sc in d.get("scores", [])
    ]
    return ActiveSetEstimate(
        selected=[int(s) for s in d["selected"]],
        params=params,
        k_hat=int(d["k_hat"]),
        round_scores=scores,
        final_residual=np.zeros(0),
        refine_objectives=[float(v) for v in d.get("refine_objectives", [])],
        background=float(d.get("background", 0.0)),
    )

"""Parametric beam gain model and superposed RSS field prediction.

A satellite downlink beam is modeled as a separable squared-sinc pattern in
the azimuth / off-nadir look-angle plane.  The single shape parameter is the
half-power beamwidth beta: along either axis the gain falls to one half at an
angular deviation of beta / 2 from the beam center.  Deviations in azimuth are
wrapped to the principal branch so the pattern is periodic; deviations in the
off-nadir coordinate are plain differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import LookAngles

TWO_PI = 2.0 * np.pi

# Scale factor a(beta) = HALF_POWER_SCALE / beta mapping the half-power
# beamwidth to the sinc argument: sinc^2(HALF_POWER_SCALE / 2) ~ 0.5.
HALF_POWER_SCALE = 0.886 * np.pi


@dataclass(frozen=True)
class BeamParams:
    """One beam: center (az0, el0), half-power width beta, peak amplitude.

    Angles are radians; az0 is normalized into [0, 2*pi).  amplitude is the
    linear RSS at boresight and must be non-negative; beta must be positive.
    """

    az0: float
    el0: float
    beta: float
    amplitude: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta {self.beta!r} must be positive")
        if self.amplitude < 0:
            raise ValueError(f"amplitude {self.amplitude!r} must be >= 0")
        if not 0.0 <= self.az0 < TWO_PI:
            object.__setattr__(self, "az0", float(np.mod(self.az0, TWO_PI)))


def wrap_angle_diff(a, b):
    """Principal value of the angle a - b, in (-pi, pi].

    Computed as the phase of exp(1j * (a - b)), which handles arbitrary
    unwrapped inputs and maps the branch point to +pi.
    """
    return np.angle(np.exp(1j * (np.asarray(a) - np.asarray(b))))


def _sinc(x):
    # unnormalized sinc: sin(x) / x with value 1 at x = 0
    return np.sinc(np.asarray(x) / np.pi)


def _gain_arrays(az, el, az0, el0, beta):
    """Squared-sinc gain for canonical azimuth az and off-nadir el arrays."""
    a = HALF_POWER_SCALE / beta
    g_az = _sinc(a * wrap_angle_diff(az, az0))
    g_el = _sinc(a * (np.asarray(el) - el0))
    return g_az * g_az * g_el * g_el


def beam_gain(look: LookAngles, p: BeamParams):
    """Dimensionless beam gain in [0, 1] at the given look angles.

    The look azimuth is reduced modulo 2*pi before differencing, so shifting
    an azimuth by a full turn leaves the gain unchanged.
    """
    az = np.mod(np.asarray(look.azimuth), TWO_PI)
    return _gain_arrays(az, look.offnadir, p.az0, p.el0, p.beta)


def signature(p: BeamParams, look: LookAngles, *, range_loss: bool = False):
    """Predicted linear RSS contribution of one beam at the given look angles.

    With range_loss=True the amplitude is additionally divided by the squared
    slant range (an experimentation switch; the default model folds any
    range-dependent factor into the amplitude).
    """
    out = p.amplitude * beam_gain(look, p)
    if range_loss:
        out = out / np.asarray(look.slant_range) ** 2
    return out


def predict_field(
    params: Sequence[BeamParams],
    looks: Sequence[LookAngles],
    *,
    m: int | None = None,
    range_loss: bool = False,
) -> np.ndarray:
    """Sum of beam signatures over an active set, at shared ground points.

    params and looks are aligned per active satellite.  m gives the number of
    ground points when the active set is empty (otherwise it is inferred).
    Accumulation is sequential in the given order, so the result is
    reproducible bit-for-bit for identical inputs.
    """
    if len(params) != len(looks):
        raise ValueError("params and looks must have equal length")
    if not params:
        return np.zeros(0 if m is None else m)
    out = np.zeros_like(np.asarray(looks[0].azimuth, dtype=float))
    for p, lk in zip(params, looks):
        out = out + signature(p, lk, range_loss=range_loss)
    return out

"""Shared fixtures and helpers for the satrm test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from satrm.beams import BeamParams
from satrm.geometry import LookAngles


def make_looks(az, el, slant=550e3):
    """Build a LookAngles batch from plain arrays (radians)."""
    az = np.atleast_1d(np.asarray(az, dtype=float))
    el = np.atleast_1d(np.asarray(el, dtype=float))
    rng = np.full_like(az, float(slant))
    return LookAngles(azimuth=az, offnadir=el, slant_range=rng)


def grid_looks(az0, el0, half_width, n_side, slant=550e3):
    """Uniform (az, el) grid centered on (az0, el0); row-major flattening."""
    az = np.linspace(az0 - half_width, az0 + half_width, n_side)
    el = np.linspace(max(0.0, el0 - half_width), el0 + half_width, n_side)
    azg, elg = np.meshgrid(az, el, indexing="ij")
    return make_looks(azg.ravel(), elg.ravel(), slant)


def quantize_angle(x, step=2.0 ** -40):
    """Snap an angle to a dyadic grid so that x + 2*pi is exact in floats.

    2*pi is not dyadic, so bitwise periodicity checks need both the angle
    and the shift to survive rounding; quantizing the angle is enough
    because the shift error is then identical on both sides.
    """
    return np.round(np.asarray(x, dtype=float) / step) * step


@pytest.fixture
def beam_10deg():
    return BeamParams(
        az0=math.radians(45.0),
        el0=math.radians(25.0),
        beta=math.radians(10.0),
        amplitude=1.0,
    )

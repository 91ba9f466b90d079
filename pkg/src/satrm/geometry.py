"""Spherical-Earth geometry: ECEF conversion, satellite body-frame look angles,
and visibility screening of candidate satellites.

Positions are either geodetic (latitude/longitude in radians, altitude in
meters above the sphere) or ECEF vectors in meters.  The satellite body frame
has its z axis at nadir (toward the Earth's center), its x axis in the local
meridian plane pointing approximately north, and y = z x x completing the
right-handed triad.  Azimuth is measured in that frame from x toward y and
reduced to [0, 2*pi); the off-nadir angle is the angle between the line of
sight and nadir.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EARTH_RADIUS_M = 6_371_000.0

TWO_PI = 2.0 * math.pi

# When |dot(nadir, polar_axis)| exceeds 1 - _POLAR_AXIS_TOL the meridian plane
# is undefined; a fixed fallback axis (projected ECEF +x) is used instead so
# the frame is always well defined.
_POLAR_AXIS_TOL = 1e-9

_POLAR_AXIS = np.array([0.0, 0.0, 1.0])
_FALLBACK_AXIS = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class GeoPosition:
    """Geodetic position on the spherical Earth.

    lat : latitude in radians, in [-pi/2, pi/2]
    lon : longitude in radians, normalized into [-pi, pi)
    alt : altitude above the sphere in meters, non-negative
    """

    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self):
        if not (-math.pi / 2 <= self.lat <= math.pi / 2):
            raise ValueError(f"latitude {self.lat!r} outside [-pi/2, pi/2]")
        if not math.isfinite(self.lon):
            raise ValueError(f"longitude {self.lon!r} is not finite")
        if self.alt < 0:
            raise ValueError(f"altitude {self.alt!r} is negative")
        if not (-math.pi <= self.lon < math.pi):
            lon = math.remainder(self.lon, TWO_PI)
            if lon >= math.pi:
                lon -= TWO_PI
            object.__setattr__(self, "lon", lon)


@dataclass(frozen=True)
class LookAngles:
    """Body-frame look angles from one satellite to one or more ground points.

    Fields are scalars for a single ground point or arrays of shape (M,) for
    M ground points.

    azimuth     : radians in [0, 2*pi), measured from the approximately-north
                  body x axis toward the body y axis
    offnadir    : radians in [0, pi], angle off the nadir direction
    slant_range : meters, distance satellite -> ground point
    """

    azimuth: np.ndarray
    offnadir: np.ndarray
    slant_range: np.ndarray


@dataclass(frozen=True)
class VisibilityConfig:
    """Screening thresholds for candidate satellites.

    psi_max : maximum off-nadir angle (radians) for a measurement location to
              count as seeing the satellite
    m_min   : minimum number of qualifying locations for a candidate to be
              retained
    """

    psi_max: float = math.radians(30.0)
    m_min: int = 10

    def __post_init__(self):
        if not (0.0 < self.psi_max <= math.pi / 2):
            raise ValueError(f"psi_max {self.psi_max!r} outside (0, pi/2]")
        if self.m_min < 1:
            raise ValueError(f"m_min {self.m_min!r} must be >= 1")


def ecef_from_geodetic(pos: GeoPosition, earth_radius: float = EARTH_RADIUS_M) -> np.ndarray:
    """Convert a geodetic position to an ECEF vector (meters, shape (3,))."""
    r = earth_radius + pos.alt
    cos_lat = math.cos(pos.lat)
    return np.array(
        [
            r * cos_lat * math.cos(pos.lon),
            r * cos_lat * math.sin(pos.lon),
            r * math.sin(pos.lat),
        ]
    )


def _body_frame(sat: np.ndarray):
    """Right-handed (x, y, z) body frame for a satellite at ECEF position sat."""
    z = -sat / np.linalg.norm(sat)
    if abs(float(z @ _POLAR_AXIS)) > 1.0 - _POLAR_AXIS_TOL:
        ref = _FALLBACK_AXIS
    else:
        ref = _POLAR_AXIS
    x = ref - (ref @ z) * z
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return x, y, z


def look_angles(sat_ecef: np.ndarray, ground_ecef: np.ndarray) -> LookAngles:
    """Compute body-frame look angles from a satellite to ground point(s).

    Parameters
    ----------
    sat_ecef : (3,) ECEF position of the satellite, meters.
    ground_ecef : (3,) or (M, 3) ECEF position(s) of ground points, meters.

    Returns
    -------
    LookAngles with scalar fields for a single point, (M,) arrays otherwise.
    """
    sat = np.asarray(sat_ecef, dtype=float)
    ground = np.asarray(ground_ecef, dtype=float)
    x, y, z = _body_frame(sat)
    d = ground - sat
    slant = np.linalg.norm(d, axis=-1)
    u = d / (slant[..., None] if d.ndim > 1 else slant)
    az = np.mod(np.arctan2(u @ y, u @ x), TWO_PI)
    el = np.arccos(np.clip(u @ z, -1.0, 1.0))
    return LookAngles(azimuth=az, offnadir=el, slant_range=slant)


def screen_candidates(looks: Sequence[LookAngles], cfg: VisibilityConfig) -> list[int]:
    """Return indices of candidates seen well enough to keep.

    A candidate is retained when at least cfg.m_min measurement locations view
    it within cfg.psi_max of nadir (inclusive).  Input order is preserved.
    """
    kept = []
    for idx, lk in enumerate(looks):
        n_visible = int(np.count_nonzero(np.asarray(lk.offnadir) <= cfg.psi_max))
        if n_visible >= cfg.m_min:
            kept.append(idx)
    return kept

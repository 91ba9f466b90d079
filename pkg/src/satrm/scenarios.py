"""Synthetic measurement scenario generation and scenario serialization.

Ground stations are drawn uniformly over a square region laid out on the
local tangent plane at the region center (equator, prime meridian); candidate
satellites sit at a fixed altitude with sub-satellite points drawn from a 1.5x
expanded square, so some candidates are marginal for visibility screening.
Each active satellite's beam is aimed at the look angles of a random ground
point inside the region and must cover a minimum number of stations above its
half-power level; otherwise the aim point is redrawn.  Measurement noise is
white Gaussian, calibrated to an exact signal-to-noise ratio in decibels.
All randomness flows from one seeded generator, so a given seed reproduces
the scenario bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .beams import BeamParams, beam_gain, predict_field
from .geometry import EARTH_RADIUS_M, GeoPosition, ecef_from_geodetic, look_angles

_MAX_AIM_ATTEMPTS = 50
_AMPLITUDE_RANGE = (0.5, 2.0)


class ConfigError(ValueError):
    """Inconsistent scenario configuration."""


class ZeroField(ValueError):
    """Noiseless field is identically zero; SNR calibration undefined."""


class ScenarioError(RuntimeError):
    """Generation failed (no admissible beam aim found)."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario dimensions and physics.

    m            : number of ground measurement stations
    n            : number of candidate satellites
    k            : number of active satellites (subset of candidates)
    snr_db       : signal-to-noise ratio in dB (math.inf for noiseless)
    beta_range   : (min, max) half-power beamwidth in radians
    region_size  : side of the square ground region, meters
    sat_altitude : satellite altitude above the sphere, meters
    seed         : RNG seed; identical seeds give identical scenarios
    min_mainlobe : stations an active beam must cover above half power
    """

    m: int = 200
    n: int = 8
    k: int = 3
    snr_db: float = 25.0
    beta_range: tuple = (math.radians(4.0), math.radians(20.0))
    region_size: float = 200e3
    sat_altitude: float = 1200e3
    seed: int = 0
    min_mainlobe: int = 6

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError(f"m {self.m!r} must be >= 1")
        if self.n < 0 or self.k < 0:
            raise ConfigError("n and k must be non-negative")
        if self.k > self.n:
            raise ConfigError(f"k={self.k} exceeds n={self.n}")
        lo, hi = self.beta_range
        if not (0 < lo <= hi):
            raise ConfigError(f"invalid beta_range {self.beta_range!r}")
        if self.region_size <= 0 or self.sat_altitude <= 0:
            raise ConfigError("region_size and sat_altitude must be positive")
        if math.isnan(self.snr_db):
            raise ConfigError("snr_db must not be NaN")
        if self.min_mainlobe < 1:
            raise ConfigError("min_mainlobe must be >= 1")


@dataclass(frozen=True)
class Measurement:
    """One station: ground position and measured linear RSS."""

    position: GeoPosition
    rss_linear: float


@dataclass
class Scenario:
    """A generated (or loaded) measurement campaign with ground truth."""

    config: ScenarioConfig
    measurements: list
    truth_active: list
    truth_params: list
    sat_geodetic: list
    sigma_w: float
    noiseless_field: np.ndarray

    def rss_vector(self) -> np.ndarray:
        return np.array([mt.rss_linear for mt in self.measurements])

    def station_positions(self) -> list:
        return [mt.position for mt in self.measurements]

    def station_ecef(self) -> np.ndarray:
        return np.stack([ecef_from_geodetic(mt.position) for mt in self.measurements])

    def sat_ecef(self) -> np.ndarray:
        return np.stack([ecef_from_geodetic(p) for p in self.sat_geodetic])


def calibrate_noise(noiseless, snr_db: float) -> float:
    """Noise standard deviation giving exactly snr_db of SNR.

    SNR is ||x||^2 / (M * sigma^2); snr_db = +inf yields sigma = 0.
    Raises ZeroField when the noiseless field carries no energy.
    """
    x = np.asarray(noiseless, dtype=float)
    energy = float(x @ x)
    if energy <= 0.0:
        raise ZeroField("noiseless field has zero energy")
    return math.sqrt(energy / (x.size * 10.0 ** (snr_db / 10.0)))


def _tangent_to_geodetic(x: float, y: float, alt: float) -> GeoPosition:
    # local tangent plane at (lat 0, lon 0): x east, y north
    return GeoPosition(lat=y / EARTH_RADIUS_M, lon=x / EARTH_RADIUS_M, alt=alt)


def generate_scenario(cfg: ScenarioConfig) -> Scenario:
    """Draw one synthetic scenario from the given configuration.

    Raises ZeroField for configurations whose noiseless field is all zero
    (e.g. k = 0) and ScenarioError when no admissible beam aim is found for
    an active satellite within the attempt budget.
    """
    rng = np.random.default_rng(cfg.seed)
    half = 0.5 * cfg.region_size

    st_xy = rng.uniform(-half, half, size=(cfg.m, 2))
    stations = [_tangent_to_geodetic(x, y, 0.0) for x, y in st_xy]
    st_ecef = np.stack([ecef_from_geodetic(p) for p in stations])

    sat_half = 0.75 * cfg.region_size
    sat_xy = rng.uniform(-sat_half, sat_half, size=(cfg.n, 2))
    sats = [_tangent_to_geodetic(x, y, cfg.sat_altitude) for x, y in sat_xy]
    sat_ecef = np.stack([ecef_from_geodetic(p) for p in sats]) if cfg.n else np.zeros((0, 3))

    active = sorted(int(i) for i in rng.choice(cfg.n, size=cfg.k, replace=False)) if cfg.k else []
    looks_active = {s: look_angles(sat_ecef[s], st_ecef) for s in active}

    truth_params = []
    for s in active:
        beta = float(rng.uniform(cfg.beta_range[0], cfg.beta_range[1]))
        amp = float(np.exp(rng.uniform(math.log(_AMPLITUDE_RANGE[0]), math.log(_AMPLITUDE_RANGE[1]))))
        chosen = None
        for _ in range(_MAX_AIM_ATTEMPTS):
            ax, ay = rng.uniform(-half, half, size=2)
            aim = ecef_from_geodetic(_tangent_to_geodetic(ax, ay, 0.0))
            la = look_angles(sat_ecef[s], aim)
            cand = BeamParams(
                az0=float(la.azimuth), el0=float(la.offnadir), beta=beta, amplitude=amp
            )
            covered = int(np.count_nonzero(beam_gain(looks_active[s], cand) >= 0.5))
            if covered >= cfg.min_mainlobe:
                chosen = cand
                break
        if chosen is None:
            raise ScenarioError(
                f"no beam aim for satellite {s} covering {cfg.min_mainlobe} stations "
                f"above half power after {_MAX_AIM_ATTEMPTS} attempts"
            )
        truth_params.append(chosen)

    noiseless = predict_field(truth_params, [looks_active[s] for s in active], m=cfg.m)
    sigma = calibrate_noise(noiseless, cfg.snr_db)
    noise = rng.normal(0.0, sigma, size=cfg.m) if sigma > 0 else np.zeros(cfg.m)
    y = noiseless + noise

    measurements = [
        Measurement(position=pos, rss_linear=float(v)) for pos, v in zip(stations, y)
    ]
    return Scenario(
        config=cfg,
        measurements=measurements,
        truth_active=active,
        truth_params=truth_params,
        sat_geodetic=sats,
        sigma_w=float(sigma),
        noiseless_field=noiseless,
    )


def scenario_to_dict(scn: Scenario) -> dict:
    """JSON-ready representation; angles leave the API in degrees."""
    cfg = scn.config
    return {
        "config": {
            "m": cfg.m,
            "n": cfg.n,
            "k": cfg.k,
            "snr_db": cfg.snr_db,
            "beta_range_deg": [math.degrees(cfg.beta_range[0]), math.degrees(cfg.beta_range[1])],
            "region_size_m": cfg.region_size,
            "sat_altitude_m": cfg.sat_altitude,
            "seed": cfg.seed,
            "min_mainlobe": cfg.min_mainlobe,
        },
        "stations": [
            [math.degrees(mt.position.lat), math.degrees(mt.position.lon), mt.rss_linear]
            for mt in scn.measurements
        ],
        "satellites": [
            [math.degrees(p.lat), math.degrees(p.lon), p.alt] for p in scn.sat_geodetic
        ],
        "truth": {
            "active": list(scn.truth_active),
            "params": [
                {
                    "az0_deg": math.degrees(p.az0),
                    "el0_deg": math.degrees(p.el0),
                    "beta_deg": math.degrees(p.beta),
                    "amplitude": p.amplitude,
                }
                for p in scn.truth_params
            ],
            "sigma_w": scn.sigma_w,
            "noiseless_field": [float(v) for v in scn.noiseless_field],
        },
    }


def scenario_from_dict(d: dict) -> Scenario:
    c = d["config"]
    snr = c["snr_db"]
    cfg = ScenarioConfig(
        m=int(c["m"]),
        n=int(c["n"]),
        k=int(c["k"]),
        snr_db=float(snr) if snr is not None else math.inf,
        beta_range=(
            math.radians(c["beta_range_deg"][0]),
            math.radians(c["beta_range_deg"][1]),
        ),
        region_size=float(c["region_size_m"]),
        sat_altitude=float(c["sat_altitude_m"]),
        seed=int(c["seed"]),
        min_mainlobe=int(c.get("min_mainlobe", 2)),
    )
    measurements = [
        Measurement(
            position=GeoPosition(lat=math.radians(lat), lon=math.radians(lon), alt=0.0),
            rss_linear=float(rss),
        )
        for lat, lon, rss in d["stations"]
    ]
    sats = [
        GeoPosition(lat=math.radians(lat), lon=math.radians(lon), alt=float(alt))
        for lat, lon, alt in d["satellites"]
    ]
    t = d["truth"]
    truth_params = [
        BeamParams(
            az0=math.radians(p["az0_deg"]),
            el0=math.radians(p["el0_deg"]),
            beta=math.radians(p["beta_deg"]),
            amplitude=float(p["amplitude"]),
        )
        for p in t["params"]
    ]
    return Scenario(
        config=cfg,
        measurements=measurements,
        truth_active=[int(i) for i in t["active"]],
        truth_params=truth_params,
        sat_geodetic=sats,
        sigma_w=float(t["sigma_w"]),
        noiseless_field=np.array([float(v) for v in t["noiseless_field"]]),
    )


def save_scenario(scn: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scn), indent=1))


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))

"""Pass geometry for a circular orbit over a single ground station.

The Earth is treated as a non-rotating sphere. The ground station sits at
central angle ``plane_offset_deg`` from the orbital plane, so an offset of
zero gives a pass straight through the zenith. Time is measured from the
point of closest approach.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EARTH_RADIUS_KM = 6371.0
MU_EARTH_KM3S2 = 398600.4418


class NoVisibility(ValueError):
    pass


@dataclass(frozen=True)
class OrbitConfig:
    altitude_km: float = 500.0
    min_elevation_deg: float = 10.0
    plane_offset_deg: float = 0.0
    earth_radius_km: float = EARTH_RADIUS_KM
    mu_earth_km3s2: float = MU_EARTH_KM3S2
    sample_interval_s: float = 1.0

    def __post_init__(self):
        if self.altitude_km <= 0:
            raise ValueError(f"altitude_km must be > 0, got {self.altitude_km}")
        if not 0.0 <= self.min_elevation_deg < 90.0:
            raise ValueError(f"min_elevation_deg must be in [0, 90), got {self.min_elevation_deg}")
        if self.sample_interval_s <= 0:
            raise ValueError(f"sample_interval_s must be > 0, got {self.sample_interval_s}")

    @property
    def orbit_radius_km(self) -> float:
        return self.earth_radius_km + self.altitude_km

    @property
    def angular_rate(self) -> float:
        """Mean motion in rad/s."""
        return math.sqrt(self.mu_earth_km3s2 / self.orbit_radius_km ** 3)

    @property
    def period_s(self) -> float:
        return 2.0 * math.pi / self.angular_rate


@dataclass(frozen=True)
class PassSample:
    t_s: float
    elevation_rad: float
    slant_range_km: float


@dataclass(frozen=True)
class PassGeometry:
    samples: tuple[PassSample, ...]
    config: OrbitConfig
    visible_duration_s: float = field(default=0.0)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def t_s(self) -> np.ndarray:
        return np.array([s.t_s for s in self.samples])

    @property
    def elevation_rad(self) -> np.ndarray:
        return np.array([s.elevation_rad for s in self.samples])

    @property
    def slant_range_km(self) -> np.ndarray:
        return np.array([s.slant_range_km for s in self.samples])


def slant_range(elevation_rad: float, config: OrbitConfig) -> float:
    """Line-of-sight distance from the station to the satellite."""
    re = config.earth_radius_km
    r = config.orbit_radius_km
    return math.sqrt(r * r - (re * math.cos(elevation_rad)) ** 2) - re * math.sin(elevation_rad)


def central_angle_limit(elevation_rad: float, config: OrbitConfig) -> float:
    """Earth-central angle between station and sub-satellite point at a given elevation."""
    re = config.earth_radius_km
    return math.acos(re * math.cos(elevation_rad) / config.orbit_radius_km) - elevation_rad


def elevation_at(t_s: float | np.ndarray, config: OrbitConfig) -> float | np.ndarray:
    xi = math.radians(config.plane_offset_deg)
    cos_c = math.cos(xi) * np.cos(config.angular_rate * np.asarray(t_s, dtype=float))
    cos_c = np.clip(cos_c, -1.0, 1.0)
    sin_c = np.sqrt(1.0 - cos_c * cos_c)
    ratio = config.earth_radius_km / config.orbit_radius_km
    elev = np.arctan2(cos_c - ratio, sin_c)
    return float(elev) if np.ndim(elev) == 0 else elev


def pass_geometry(config: OrbitConfig) -> PassGeometry:
    """Sample the visible part of the pass on a grid anchored at closest approach."""
    xi = math.radians(config.plane_offset_deg)
    c_max = central_angle_limit(math.radians(config.min_elevation_deg), config)
    if math.cos(xi) < math.cos(c_max):
        raise NoVisibility(
            f"maximum elevation {math.degrees(elevation_at(0.0, config)):.2f} deg "
            f"stays below the {config.min_elevation_deg} deg mask")
    # cos(c) = cos(xi) cos(w t) defines the edges of the window
    half = math.acos(min(1.0, math.cos(c_max) / math.cos(xi))) / config.angular_rate
    dt = config.sample_interval_s
    k = int(math.floor(half / dt + 1e-12))
    times = np.arange(-k, k + 1) * dt
    elev = elevation_at(times, config)
    samples = tuple(PassSample(float(t), float(e), slant_range(float(e), config))
                    for t, e in zip(times, np.atleast_1d(elev)))
    return PassGeometry(samples=samples, config=config, visible_duration_s=2.0 * half)


def window_duration(geometry: PassGeometry, threshold_elevation_rad: float) -> float:
    """Time spent at or above an elevation, interpolating linearly at the edges."""
    t = geometry.t_s
    e = geometry.elevation_rad
    if len(t) == 0:
        raise ValueError("empty geometry")
    total = 0.0
    for i in range(len(t) - 1):
        a, b = e[i] - threshold_elevation_rad, e[i + 1] - threshold_elevation_rad
        span = t[i + 1] - t[i]
        if a >= 0 and b >= 0:
            total += span
        elif a >= 0 or b >= 0:
            total += span * max(a, b) / abs(b - a)
    return float(total)

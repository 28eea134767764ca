"""Downlink transmittance: diffraction, atmosphere and a fixed system loss.

Loss profiles are either computed from a :class:`~qsatlink.orbitpass.PassGeometry`
or read from a CSV file with header ``t_s,loss_db`` and optional
``geometric_db,atmospheric_db,intrinsic_db`` columns.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .orbitpass import PassGeometry

LOSS_CSV_COLUMNS = ("t_s", "loss_db", "geometric_db", "atmospheric_db", "intrinsic_db")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NonMonotonicTime(ValueError):
    pass


class LossOutOfRange(ValueError):
    pass


class ElevationBelowTable(ValueError):
    pass


@dataclass(frozen=True)
class ParametricAtmosphere:
    """Plane-parallel atmosphere: ``T(theta) = T_z ** (1 / sin theta)``."""

    zenith_transmittance: float = 0.75

    def __post_init__(self):
        if not 0.0 < self.zenith_transmittance <= 1.0:
            raise ValueError(f"zenith_transmittance must be in (0, 1], got {self.zenith_transmittance}")


@dataclass(frozen=True)
class TableAtmosphere:
    elevation_deg: tuple[float, ...]
    transmittance: tuple[float, ...]

    def __post_init__(self):
        if len(self.elevation_deg) != len(self.transmittance) or not self.elevation_deg:
            raise ValueError("atmosphere table needs matching, non-empty columns")
        if any(b <= a for a, b in zip(self.elevation_deg, self.elevation_deg[1:])):
            raise ValueError("atmosphere table elevations must be strictly increasing")
        if any(not 0.0 < v <= 1.0 for v in self.transmittance):
            raise ValueError("atmosphere table transmittance must be in (0, 1]")

    @classmethod
    def from_csv(cls, path: str | Path) -> "TableAtmosphere":
        rows = _read_csv(Path(path), required=("elevation_deg", "transmittance"))
        return cls(tuple(r["elevation_deg"] for _, r in rows),
                   tuple(r["transmittance"] for _, r in rows))


AtmosphereModel = Union[ParametricAtmosphere, TableAtmosphere]


@dataclass(frozen=True)
class ChannelConfig:
    tx_aperture_m: float = 0.04
    rx_aperture_m: float = 0.7
    beam_waist_m: float = 0.02
    wavelength_m: float = 1550e-9
    intrinsic_loss_db: float = 15.0
    atmosphere: AtmosphereModel = field(default_factory=ParametricAtmosphere)

    def __post_init__(self):
        for name in ("tx_aperture_m", "rx_aperture_m", "beam_waist_m", "wavelength_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.beam_waist_m > 0.5 * self.tx_aperture_m * (1 + 1e-12):
            raise ValueError("beam_waist_m must not exceed half the transmitter aperture")
        if self.intrinsic_loss_db < 0:
            raise ValueError("intrinsic_loss_db must be >= 0")

    @property
    def rayleigh_range_m(self) -> float:
        return math.pi * self.beam_waist_m ** 2 / self.wavelength_m


@dataclass(frozen=True)
class LossSample:
    t_s: float
    elevation_rad: float
    eta_geometric: float | None
    eta_atmospheric: float | None
    eta_intrinsic: float | None
    eta_total: float
    loss_total_db: float


@dataclass(frozen=True)
class LossProfile:
    samples: tuple[LossSample, ...]
    source: str = "computed"

    def __post_init__(self):
        t = [s.t_s for s in self.samples]
        if any(b <= a for a, b in zip(t, t[1:])):
            raise NonMonotonicTime("loss profile times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def t_s(self) -> np.ndarray:
        return np.array([s.t_s for s in self.samples])

    @property
    def eta_total(self) -> np.ndarray:
        return np.array([s.eta_total for s in self.samples])

    @property
    def loss_db(self) -> np.ndarray:
        return np.array([s.loss_total_db for s in self.samples])


def to_db(eta: float) -> float:
    return -10.0 * math.log10(eta)


def from_db(loss_db: float) -> float:
    return 10.0 ** (-loss_db / 10.0)


def beam_radius(slant_range_km: float, config: ChannelConfig) -> float:
    """Gaussian beam radius at the receiver in metres."""
    z = slant_range_km * 1e3
    return config.beam_waist_m * math.sqrt(1.0 + (z / config.rayleigh_range_m) ** 2)


def geometric_transmittance(slant_range_km: float, config: ChannelConfig) -> float:
    """Fraction of a Gaussian beam collected by the circular receiver aperture."""
    if slant_range_km <= 0:
        raise ValueError("slant range must be positive")
    w = beam_radius(slant_range_km, config)
    a = 0.5 * config.rx_aperture_m
    return -math.expm1(-2.0 * a * a / (w * w))


def atmospheric_transmittance(elevation_rad: float, model: AtmosphereModel) -> float:
    if not 0.0 < elevation_rad <= math.pi / 2 + 1e-12:
        raise ValueError(f"elevation must be in (0, pi/2], got {elevation_rad}")
    if isinstance(model, ParametricAtmosphere):
        return model.zenith_transmittance ** (1.0 / math.sin(elevation_rad))
    deg = math.degrees(elevation_rad)
    if deg < model.elevation_deg[0] - 1.0:
        raise ElevationBelowTable(
            f"elevation {deg:.2f} deg is below the first table row ({model.elevation_deg[0]} deg)")
    return float(np.interp(deg, model.elevation_deg, model.transmittance))


def loss_profile(geometry: PassGeometry, config: ChannelConfig) -> LossProfile:
    if len(geometry) == 0:
        raise ValueError("empty geometry")
    eta_i = from_db(config.intrinsic_loss_db)
    samples = []
    for s in geometry.samples:
        eta_g = geometric_transmittance(s.slant_range_km, config)
        eta_a = atmospheric_transmittance(s.elevation_rad, config.atmosphere)
        eta = eta_g * eta_a * eta_i
        loss = to_db(eta_g) + to_db(eta_a) + config.intrinsic_loss_db
        samples.append(LossSample(s.t_s, s.elevation_rad, eta_g, eta_a, eta_i, eta, loss))
    return LossProfile(tuple(samples), source="computed")


def flat_profile(loss_db: float, n: int = 1, dt_s: float = 1.0) -> LossProfile:
    """Constant-loss profile, handy for sweeps and tests."""
    eta = from_db(loss_db)
    return LossProfile(tuple(
        LossSample(i * dt_s, math.nan, None, None, None, eta, loss_db) for i in range(n)),
        source="computed")


def _read_csv(path: Path, required: tuple[str, ...]) -> list[tuple[int, dict[str, float]]]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", 1) from None
        missing = [c for c in required if c not in header]
        if missing:
            raise ParseError(f"missing column(s) {', '.join(missing)}", 1)
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
            values = {}
            for name, cell in zip(header, row):
                cell = cell.strip()
                if cell == "":
                    continue
                try:
                    values[name] = float(cell)
                except ValueError:
                    raise ParseError(f"column {name}: cannot parse {cell!r}", line) from None
            for c in required:
                if c not in values:
                    raise ParseError(f"column {c} is empty", line)
            rows.append((line, values))
    if not rows:
        raise ParseError("no data rows", 2)
    return rows


def ingest_loss_csv(path: str | Path) -> LossProfile:
    rows = _read_csv(Path(path), required=("t_s", "loss_db"))
    samples = []
    prev_t = -math.inf
    for line, r in rows:
        t, loss = r["t_s"], r["loss_db"]
        if t <= prev_t:
            raise NonMonotonicTime(f"line {line}: t_s={t} does not increase")
        if loss < 0 or not math.isfinite(loss):
            raise LossOutOfRange(f"line {line}: loss_db={loss} must be >= 0")
        prev_t = t
        parts = [from_db(r[c]) if c in r else None
                 for c in ("geometric_db", "atmospheric_db", "intrinsic_db")]
        samples.append(LossSample(t, math.nan, *parts, from_db(loss), loss))
    return LossProfile(tuple(samples), source="ingested")


def export_loss_csv(profile: LossProfile, path: str | Path) -> None:
    """Write a profile in the ingestable schema (17 significant digits)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOSS_CSV_COLUMNS)
        for s in profile.samples:
            parts = ["" if e is None else repr(to_db(e))
                     for e in (s.eta_geometric, s.eta_atmospheric, s.eta_intrinsic)]
            w.writerow([repr(s.t_s), repr(s.loss_total_db), *parts])

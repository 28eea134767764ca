"""Detection and error statistics for weak-coherent-pulse transmission.

Two routes produce :class:`CountStatistics`:

* :func:`expected_counts` gives real-valued expectations used by the
  analytical key-rate pipeline.
* :func:`monte_carlo_counts` runs a seeded pulse-by-pulse simulation and
  additionally returns photon-number-resolved ground truth, which the
  finite-key bounds can be checked against.

Detector model (per pulse, two detectors)::

    D(mu) = (1 + P_AP) * (1 - (1 - 2 P_EC) exp(-eta mu))
    E(mu) = P_EC + P_AP/2 * D(mu) + QBER_I * (1 - exp(-eta mu))
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

MAX_MC_PULSES = 1_000_000_000


class BudgetTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class DetectorModel:
    extraneous_count_prob: float = 1e-8
    afterpulse_prob: float = 1e-3
    intrinsic_qber: float = 1e-3

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{f.name} must be in [0, 1), got {v}")


@dataclass(frozen=True)
class ProtocolParams:
    """Alice/Bob settings of the three-state one-decoy protocol.

    ``mu1`` is the signal intensity and ``mu2`` the decoy. Equal intensities
    are accepted here and rejected by the decoy analysis, which needs a gap.
    """

    mu1: float = 0.81
    mu2: float = 0.12
    p_mu1: float = 0.76
    p_za: float = 0.88
    p_zb: float = 0.9

    def __post_init__(self):
        if self.mu2 < 0 or self.mu1 < 0:
            raise ValueError("intensities must be non-negative")
        if self.mu2 > self.mu1:
            raise ValueError(
                f"decoy intensity must not exceed signal intensity "
                f"(mu2 <= mu1), got mu1={self.mu1}, mu2={self.mu2}")
        for name in ("p_mu1", "p_za", "p_zb"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {v}")

    @property
    def p_mu2(self) -> float:
        return 1.0 - self.p_mu1

    @property
    def p_xa(self) -> float:
        return 1.0 - self.p_za

    @property
    def p_xb(self) -> float:
        return 1.0 - self.p_zb

    @property
    def intensities(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """((mu1, p_mu1), (mu2, p_mu2))"""
        return (self.mu1, self.p_mu1), (self.mu2, self.p_mu2)


@dataclass(frozen=True)
class PulseBudget:
    source_rate_hz: float = 1e9
    duration_s: float = 1.0

    def __post_init__(self):
        if self.source_rate_hz < 0 or self.duration_s <= 0:
            raise ValueError("source rate must be >= 0 and duration > 0")

    @property
    def n_pulses(self) -> float:
        return self.source_rate_hz * self.duration_s


@dataclass(frozen=True)
class CountStatistics:
    """Detection (n) and error (m) counts per basis and intensity.

    ``n_a_z`` counts Bob's A-detections (X basis) when Alice sent a Z-basis
    state and ``n_z_d`` counts Bob's Z-basis detections when Alice sent D;
    both only feed the X-basis QBER estimator.
    """

    n_z_mu1: float = 0.0
    n_z_mu2: float = 0.0
    m_z_mu1: float = 0.0
    m_z_mu2: float = 0.0
    n_x_mu1: float = 0.0
    n_x_mu2: float = 0.0
    m_x_mu1: float = 0.0
    m_x_mu2: float = 0.0
    n_a_z: float = 0.0
    n_z_d: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")
        for n, m in (("n_z_mu1", "m_z_mu1"), ("n_z_mu2", "m_z_mu2"),
                     ("n_x_mu1", "m_x_mu1"), ("n_x_mu2", "m_x_mu2")):
            if getattr(self, m) > getattr(self, n) * (1 + 1e-12):
                raise ValueError(f"{m} exceeds {n}")

    @property
    def n_z(self) -> float:
        return self.n_z_mu1 + self.n_z_mu2

    @property
    def m_z(self) -> float:
        return self.m_z_mu1 + self.m_z_mu2

    @property
    def n_x(self) -> float:
        return self.n_x_mu1 + self.n_x_mu2

    @property
    def m_x(self) -> float:
        return self.m_x_mu1 + self.m_x_mu2

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class GroundTruthCounts:
    vacuum_clicks_z: int = 0
    single_photon_clicks_z: int = 0
    single_photon_errors_x: int = 0
    single_photon_clicks_x: int = 0


def click_probability(mu: float, eta: float, detector: DetectorModel) -> float:
    """Mean number of registered detections per pulse of intensity ``mu``."""
    pec, pap = detector.extraneous_count_prob, detector.afterpulse_prob
    d = (1.0 + pap) * (1.0 - (1.0 - 2.0 * pec) * math.exp(-eta * mu))
    return min(max(d, 0.0), 1.0)


def error_probability(mu: float, eta: float, detector: DetectorModel) -> float:
    pec, pap = detector.extraneous_count_prob, detector.afterpulse_prob
    d = click_probability(mu, eta, detector)
    e = pec + 0.5 * pap * d + detector.intrinsic_qber * (1.0 - math.exp(-eta * mu))
    return min(max(e, 0.0), d)


def expected_counts(params: ProtocolParams, eta: float, budget: PulseBudget,
                    detector: DetectorModel) -> CountStatistics:
    n = budget.n_pulses
    zz = params.p_za * params.p_zb
    xx = params.p_xa * params.p_xb
    d1 = click_probability(params.mu1, eta, detector)
    d2 = click_probability(params.mu2, eta, detector)
    e1 = error_probability(params.mu1, eta, detector)
    e2 = error_probability(params.mu2, eta, detector)
    a1 = n * params.p_mu1
    a2 = n * params.p_mu2
    d_avg = a1 * d1 + a2 * d2
    return CountStatistics(
        n_z_mu1=a1 * zz * d1, n_z_mu2=a2 * zz * d2,
        m_z_mu1=a1 * zz * e1, m_z_mu2=a2 * zz * e2,
        n_x_mu1=a1 * xx * d1, n_x_mu2=a2 * xx * d2,
        m_x_mu1=a1 * xx * e1, m_x_mu2=a2 * xx * e2,
        # H/V projected on A succeeds half the time
        n_a_z=0.5 * params.p_za * params.p_xb * d_avg,
        n_z_d=params.p_xa * params.p_zb * d_avg,
    )


def monte_carlo_counts(params: ProtocolParams, eta: float, budget: PulseBudget,
                       detector: DetectorModel,
                       seed: int | np.random.SeedSequence | None = None,
                       ) -> tuple[CountStatistics, GroundTruthCounts]:
    """Pulse-level simulation of the link with photon-number ground truth.

    Every pulse draws intensity, both basis choices and a Poisson photon
    number; each photon survives with probability ``eta``. A click occurs if
    a photon survives or either detector fires spuriously (probability
    ``2 P_EC``), and every click spawns an afterpulse with probability
    ``P_AP``. Signal clicks are wrong with probability ``QBER_I + P_EC``,
    spurious-only clicks and afterpulses with probability 1/2, which
    reproduces :func:`error_probability` up to O(P_AP**2).

    Results are bit-identical between the compiled and the pure backends
    for the same seed.
    """
    from . import _backend

    n = budget.n_pulses
    if n > MAX_MC_PULSES:
        raise BudgetTooLarge(f"{n:.3g} pulses exceeds the limit of {MAX_MC_PULSES:.0e}")
    n_pulses = int(round(n))
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    rng = np.random.Generator(np.random.PCG64(seed))
    tables = _backend.pulse_tables(params, eta, detector)
    tally = _backend.simulate_pulses(rng.bit_generator, n_pulses, *tables)
    return _backend.unpack_tally(tally)

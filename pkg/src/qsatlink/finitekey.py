"""Finite-key analysis of the three-state one-decoy BB84 protocol.

The pipeline for one accumulation block is::

    counts -> decoy_bounds -> phase_error_bound -> lambda_ec -> SKL

Statistical fluctuations use a two-sided Chernoff interval per observed
count with failure probability ``eps_s / alpha`` for each bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .detstat import (CountStatistics, DetectorModel, ProtocolParams,
                      PulseBudget, expected_counts)

MIN_INTENSITY_GAP = 1e-6


class DegenerateIntensities(ValueError):
    pass


@dataclass(frozen=True)
class SecurityParams:
    eps_s: float = 1e-9
    eps_c: float = 1e-15
    alpha: int = 19
    f_ec: float = 1.16
    num_decoys: int = 1

    def __post_init__(self):
        if not 0.0 < self.eps_s < 1.0:
            raise ValueError(f"eps_s must be in (0, 1), got {self.eps_s}")
        if not 0.0 < self.eps_c < 1.0:
            raise ValueError(f"eps_c must be in (0, 1), got {self.eps_c}")
        if self.alpha not in (19, 21):
            raise ValueError(f"alpha must be 19 or 21, got {self.alpha}")
        if self.f_ec < 1.0:
            raise ValueError(f"f_ec must be >= 1, got {self.f_ec}")
        if self.num_decoys not in (1, 2):
            raise ValueError(f"num_decoys must be 1 or 2, got {self.num_decoys}")

    @property
    def eps_bound(self) -> float:
        """Failure probability assigned to each individual Chernoff bound."""
        return self.eps_s / self.alpha

    def require_one_decoy(self) -> None:
        if self.num_decoys != 1:
            raise NotImplementedError("only the one-decoy analysis is implemented")


@dataclass(frozen=True)
class DecoyBounds:
    s_z0_low: float
    s_z0_high: float
    s_z1_low: float
    v_x1_high: float
    s_x1_low: float


@dataclass(frozen=True)
class KeyAnalysis:
    s_z0_low: float
    s_z0_high: float
    s_z1_low: float
    v_x1_high: float
    s_x1_low: float
    phi_z: float
    lambda_ec: float
    skl: int
    skr_hz: float
    qber_z: float
    qber_x: float
    skl_raw: float


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def poisson_tau(n: int, params: ProtocolParams) -> float:
    """Probability that a pulse carries exactly ``n`` photons."""
    if n not in (0, 1):
        raise ValueError("only tau_0 and tau_1 are used")
    return sum(p * math.exp(-mu) * mu ** n / math.factorial(n)
               for mu, p in params.intensities)


def chernoff_interval(count: float, eps: float) -> tuple[float, float]:
    """Two-sided interval on the mean of an observed count."""
    if count < 0:
        raise ValueError("count must be non-negative")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0, 1)")
    beta = math.log(1.0 / eps)
    high = count + 0.5 * beta + math.sqrt(2.0 * beta * count + 0.25 * beta * beta)
    low = max(0.0, count - math.sqrt(2.0 * beta * count))
    return low, high


def decoy_bounds(counts: CountStatistics, params: ProtocolParams,
                 security: SecurityParams) -> DecoyBounds:
    security.require_one_decoy()
    mu1, mu2 = params.mu1, params.mu2
    if mu1 - mu2 < MIN_INTENSITY_GAP:
        raise DegenerateIntensities(
            f"mu1 - mu2 = {mu1 - mu2:.3g} is below {MIN_INTENSITY_GAP}")
    eps = security.eps_bound
    w1 = math.exp(mu1) / params.p_mu1
    w2 = math.exp(mu2) / params.p_mu2
    tau0 = poisson_tau(0, params)
    tau1 = poisson_tau(1, params)

    nz1_lo, nz1_hi = chernoff_interval(counts.n_z_mu1, eps)
    nz2_lo, nz2_hi = chernoff_interval(counts.n_z_mu2, eps)
    nx1_lo, nx1_hi = chernoff_interval(counts.n_x_mu1, eps)
    nx2_lo, nx2_hi = chernoff_interval(counts.n_x_mu2, eps)
    mz1_hi = chernoff_interval(counts.m_z_mu1, eps)[1]
    mz2_hi = chernoff_interval(counts.m_z_mu2, eps)[1]
    mx1_hi = chernoff_interval(counts.m_x_mu1, eps)[1]
    mx2_lo, mx2_hi = chernoff_interval(counts.m_x_mu2, eps)

    s_z0_low = max(0.0, tau0 * (mu1 * w2 * nz2_lo - mu2 * w1 * nz1_hi) / (mu1 - mu2))
    # vacuum detections are wrong half of the time
    s_z0_high = 2.0 * (mz1_hi + mz2_hi)

    pre = tau1 * mu1 / (mu2 * (mu1 - mu2))
    r2 = (mu2 * mu2) / (mu1 * mu1)
    r0 = (mu1 * mu1 - mu2 * mu2) / (mu1 * mu1)
    s_z1_low = max(0.0, pre * (w2 * nz2_lo - r2 * w1 * nz1_hi - r0 * s_z0_high / tau0))

    # X-basis analogue, with the vacuum term bounded by the X error counts
    s_x0_high = 2.0 * (mx1_hi + mx2_hi)
    s_x1_low = max(0.0, pre * (w2 * nx2_lo - r2 * w1 * nx1_hi - r0 * s_x0_high / tau0))

    v_x1_high = tau1 * (w1 * mx1_hi - w2 * mx2_lo) / (mu1 - mu2)
    v_x1_high = min(max(v_x1_high, 0.0), counts.n_x)
    return DecoyBounds(s_z0_low, s_z0_high, s_z1_low, v_x1_high, s_x1_low)


def _gamma(a: float, b: float, c: float, d: float) -> float:
    # the log argument is expanded into a sum so tiny b cannot overflow it
    log_arg = (math.log2(c + d) - math.log2(c) - math.log2(d) - math.log2(1.0 - b)
               - math.log2(b) + 2.0 * math.log2(21.0 / a))
    return math.sqrt((c + d) * (1.0 - b) * b / (c * d * math.log(2.0)) * log_arg)


def phase_error_bound(bounds: DecoyBounds, security: SecurityParams) -> float:
    """Upper bound on the Z-basis phase error rate, capped at 1/2.

    Falls back to the pessimistic 1/2 when either single-photon bound is
    zero.
    """
    s_z1, s_x1 = bounds.s_z1_low, bounds.s_x1_low
    if s_z1 <= 0.0 or s_x1 <= 0.0:
        return 0.5
    ratio = bounds.v_x1_high / s_x1
    if ratio >= 0.5:
        return 0.5
    b = min(max(ratio, 1e-300), 0.5)
    try:
        phi = ratio + _gamma(security.eps_s, b, s_z1, s_x1)
    except (ValueError, OverflowError):
        return 0.5
    return min(0.5, phi)


def lambda_ec(n_z: float, qber_z: float, security: SecurityParams) -> float:
    return security.f_ec * n_z * binary_entropy(qber_z)


def key_length_raw(s_z0: float, s_z1: float, phi_z: float, leak_ec: float,
                   security: SecurityParams) -> float:
    """Key length before flooring and clipping; negative when no key survives."""
    return (s_z0 + s_z1 * (1.0 - binary_entropy(phi_z)) - leak_ec
            - 6.0 * math.log2(security.alpha / security.eps_s)
            - math.log2(2.0 / security.eps_c))


def secret_key_length(s_z0: float, s_z1: float, phi_z: float, leak_ec: float,
                      security: SecurityParams) -> int:
    raw = key_length_raw(s_z0, s_z1, phi_z, leak_ec, security)
    return max(0, math.floor(raw))


def qber_x(counts: CountStatistics, params: ProtocolParams) -> float:
    """X-basis QBER estimate from the cross-basis detection counts.

    Built from n(A,D) (the X error count), n(A,Z) and n(Z,D), evaluated
    exactly as the two-term max expression and clamped to [0, 1].
    """
    n_z = counts.n_z
    if n_z == 0:
        raise ZeroDivisionError("X-basis QBER needs n_z > 0")
    pza, pzb, pxa, pxb = params.p_za, params.p_zb, params.p_xa, params.p_xb
    a = counts.m_x / (pxa * pxb)
    b = counts.n_a_z / (pza * pxb)
    c = counts.n_z_d / (pxa * pzb)
    inner = max(0.0, a + b - c + 2.0 * n_z / (pza * pxb))
    q = 0.5 * (pza * pzb / n_z) * (a + inner)
    return min(max(q, 0.0), 1.0)


def qber_z(counts: CountStatistics) -> float:
    """Observed key-basis error rate; 1/2 when nothing was detected."""
    if counts.n_z <= 0:
        return 0.5
    return min(0.5, counts.m_z / counts.n_z)


def analyze_counts(counts: CountStatistics, params: ProtocolParams,
                   security: SecurityParams, duration_s: float = 1.0) -> KeyAnalysis:
    bounds = decoy_bounds(counts, params, security)
    phi = phase_error_bound(bounds, security)
    q_z = qber_z(counts)
    leak = lambda_ec(counts.n_z, q_z, security)
    raw = key_length_raw(bounds.s_z0_low, bounds.s_z1_low, phi, leak, security)
    skl = max(0, math.floor(raw))
    q_x = qber_x(counts, params) if counts.n_z > 0 else 0.5
    return KeyAnalysis(
        s_z0_low=bounds.s_z0_low, s_z0_high=bounds.s_z0_high,
        s_z1_low=bounds.s_z1_low, v_x1_high=bounds.v_x1_high,
        s_x1_low=bounds.s_x1_low, phi_z=phi, lambda_ec=leak, skl=skl,
        skr_hz=skl / duration_s, qber_z=q_z, qber_x=q_x, skl_raw=raw)


def analyze_block(params: ProtocolParams, eta: float, budget: PulseBudget,
                  detector: DetectorModel, security: SecurityParams) -> KeyAnalysis:
    """Finite-key analysis of one window from expected detection counts."""
    counts = expected_counts(params, eta, budget, detector)
    return analyze_counts(counts, params, security, budget.duration_s)

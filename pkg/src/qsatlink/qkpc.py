"""Keyless private communication with on-off keying over a lossy bosonic channel.

Bob sees channel efficiency ``eta`` and Eve a degraded copy ``gamma * eta``.
All rates are in bits per channel use; multiply by the source rate for
bits per second.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .channel import LossProfile
from .finitekey import binary_entropy
from .optimizer import OptimizerConfig, SearchSpace, maximize

RECEIVED_PHOTONS_BOUNDS = (1e-3, 50.0)
Q_BOUNDS = (0.05, 0.95)


class OptimizerFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class QkpcParams:
    mu: float = 1e6
    q: float = 0.5
    gamma: float = 0.1
    p_dark: float = 1e-8
    stray_mean: float = 0.0

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must be in (0, 1), got {self.q}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 <= self.p_dark < 1.0:
            raise ValueError("p_dark must be in [0, 1)")
        if self.stray_mean < 0:
            raise ValueError("stray_mean must be >= 0")


@dataclass(frozen=True)
class QkpcResult:
    eps0: float
    eps1: float
    eps_star: float
    c_p: float
    r_dw: float
    rate_bps: float
    mu_opt: float
    q_opt: float
    ok: bool = True


def _h(x: float) -> float:
    return binary_entropy(min(max(x, 0.0), 1.0))


def _complements(received: float, p: QkpcParams) -> tuple[float, float]:
    eps0 = (1.0 - p.p_dark) * math.exp(-p.stray_mean)
    eps1 = (1.0 - p.p_dark) * math.exp(-(received + p.stray_mean))
    return eps0, eps1


def _eve_error(eve_received: float, q: float) -> float:
    disc = 1.0 - 4.0 * q * (1.0 - q) * math.exp(-eve_received)
    return 0.5 * (1.0 - math.sqrt(max(disc, 0.0)))


def _capacity_terms(received: float, q: float, p: QkpcParams):
    eps0, eps1 = _complements(received, p)
    eps_star = _eve_error(p.gamma * received, q)
    bob = _h(0.5 * (eps0 + eps1)) - 0.5 * (_h(eps1) + _h(eps0))
    return eps0, eps1, eps_star, bob


def click_complements(mu: float, eta: float, params: QkpcParams) -> tuple[float, float]:
    """No-click probabilities at Bob for X = 0 (vacuum) and X = 1."""
    return _complements(eta * mu, params)


def eve_optimal_error(mu: float, eta: float, params: QkpcParams) -> float:
    return _eve_error(eta * params.gamma * mu, params.q)


def private_capacity(mu: float, eta: float, params: QkpcParams) -> float:
    _, _, eps_star, bob = _capacity_terms(eta * mu, params.q, params)
    return min(1.0, max(0.0, _h(eps_star) + bob - 1.0))


def devetak_winter_rate(mu: float, eta: float, params: QkpcParams) -> float:
    _, _, eps_star, bob = _capacity_terms(eta * mu, params.q, params)
    return min(1.0, max(0.0, bob - _h(0.5 * (1.0 + eps_star))))


@lru_cache(maxsize=64)
def _optimize_received(params: QkpcParams, optimize_q: bool,
                       config: OptimizerConfig) -> tuple[float, float, float]:
    # The capacity depends on eta only through eta*mu, so the search runs in
    # log10(received photons) and is shared by every channel efficiency.
    lo, hi = (math.log10(b) for b in RECEIVED_PHOTONS_BOUNDS)

    if optimize_q:
        def objective(x):
            return _h(_eve_error(params.gamma * 10.0 ** x[0], x[1])) + \
                _capacity_terms(10.0 ** x[0], x[1], params)[3] - 1.0
        space = SearchSpace(bounds=((lo, hi), Q_BOUNDS))
    else:
        def objective(x):
            return _h(_eve_error(params.gamma * 10.0 ** x[0], params.q)) + \
                _capacity_terms(10.0 ** x[0], params.q, params)[3] - 1.0
        space = SearchSpace(bounds=((lo, hi),))
    res = maximize(objective, space, config)
    received = 10.0 ** res.best_point[0]
    q = res.best_point[1] if optimize_q else params.q
    return received, q, res.best_value


def optimize_point(eta: float, params: QkpcParams, f_s: float,
                   optimize_q: bool = True,
                   config: OptimizerConfig | None = None,
                   strict: bool = False) -> QkpcResult:
    """Photon number (and input bias) maximizing the private capacity.

    When no positive capacity is found the zero-rate result comes back with
    ``ok=False``; with ``strict=True`` an :class:`OptimizerFailure` is raised
    instead.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must be in (0, 1], got {eta}")
    config = config or OptimizerConfig(restarts=4, max_evals=1000, tolerance=1e-10, seed=0)
    received, q, _ = _optimize_received(params, optimize_q, config)
    eps0, eps1, eps_star, bob = _capacity_terms(received, q, params)
    c_p = min(1.0, max(0.0, _h(eps_star) + bob - 1.0))
    r_dw = min(1.0, max(0.0, bob - _h(0.5 * (1.0 + eps_star))))
    if strict and c_p <= 0.0:
        raise OptimizerFailure(f"no positive private capacity at eta={eta}")
    return QkpcResult(eps0=eps0, eps1=eps1, eps_star=eps_star, c_p=c_p, r_dw=r_dw,
                      rate_bps=c_p * f_s, mu_opt=received / eta, q_opt=q, ok=c_p > 0.0)


def qkpc_profile(profile: LossProfile, params: QkpcParams, f_s: float,
                 optimize_q: bool = True,
                 config: OptimizerConfig | None = None) -> list[QkpcResult]:
    if len(profile) == 0:
        raise ValueError("empty loss profile")
    return [optimize_point(s.eta_total, params, f_s, optimize_q, config)
            for s in profile.samples]

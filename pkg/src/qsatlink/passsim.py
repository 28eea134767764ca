"""Pass-level pipeline: per-window protocol optimization over a loss profile.

Each window is optimized independently of the others except for the warm
start, which runs as two chains walking outward from the lowest-loss
window. Chains (and QKPC samples) are the units handed to worker pools, so
the result does not depend on the worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .channel import (ChannelConfig, LossProfile, atmospheric_transmittance, from_db,
                      geometric_transmittance, to_db)
from .detstat import DetectorModel, ProtocolParams, PulseBudget
from .finitekey import KeyAnalysis, SecurityParams, analyze_block
from .optimizer import OptimizerConfig, SearchSpace, maximize
from .orbitpass import OrbitConfig, elevation_at, slant_range
from .qkpc import QkpcParams, QkpcResult, optimize_point

# (mu1, mu2, p_mu1, p_za)
QKD_BOUNDS = ((0.1, 1.2), (0.005, 0.5), (0.05, 0.95), (0.5, 0.99))
MIN_DECOY_GAP = 0.01
QKD_SPACE = SearchSpace(bounds=QKD_BOUNDS, constraints=((0, 1, MIN_DECOY_GAP),))
DEFAULT_START = (0.81, 0.12, 0.76, 0.88)

# named sub-streams of the run seed
OPTIMIZER_STREAM = 1
ORACLE_STREAM = 2


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class QkdSettings:
    """Everything the per-window key optimization needs besides the loss."""

    detector: DetectorModel = DetectorModel()
    security: SecurityParams = SecurityParams()
    source_rate_hz: float = 1e9
    window_s: float = 1.0
    p_zb: float = 0.9
    optimizer: OptimizerConfig = OptimizerConfig()
    warm_restarts: int = 2
    warm_start: bool = True
    fixed: ProtocolParams | None = None

    def __post_init__(self):
        if self.window_s <= 0:
            raise ValueError(f"window_s must be > 0, got {self.window_s}")
        if self.source_rate_hz <= 0:
            raise ValueError(f"source_rate_hz must be > 0, got {self.source_rate_hz}")
        if not 0.0 < self.p_zb < 1.0:
            raise ValueError(f"p_zb must be in (0, 1), got {self.p_zb}")
        if self.warm_restarts < 1:
            raise ValueError("warm_restarts must be >= 1")

    @property
    def budget(self) -> PulseBudget:
        return PulseBudget(source_rate_hz=self.source_rate_hz, duration_s=self.window_s)


@dataclass(frozen=True)
class WindowResult:
    params: ProtocolParams
    analysis: KeyAnalysis
    plateau: bool
    evals: int


@dataclass(frozen=True)
class QkdRecord:
    t_s: float
    elevation_deg: float
    loss_db: float
    skl_bits: int
    skr_hz: float
    qber_z: float
    qber_x: float
    mu1: float
    mu2: float
    p_mu1: float
    p_za: float


@dataclass(frozen=True)
class QkpcRecord:
    t_s: float
    loss_db: float
    qkpc_rate_bps: float
    mu_opt: float
    q_opt: float
    c_p: float
    r_dw: float


def window_seed(seed: int, stream: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, stream, index]).generate_state(1)[0])


def _skl_objective(eta: float, settings: QkdSettings):
    det, sec = settings.detector, settings.security
    n_pulses = settings.budget.n_pulses
    fn = _backend.skl_raw

    def objective(x):
        return fn(x[0], x[1], x[2], x[3], settings.p_zb, eta, n_pulses,
                  det.extraneous_count_prob, det.afterpulse_prob, det.intrinsic_qber,
                  sec.eps_s, sec.eps_c, float(sec.alpha), sec.f_ec)
    return objective


def optimize_window(eta: float, settings: QkdSettings, seed: int = 0,
                    x0=None, restarts: int | None = None) -> WindowResult:
    """Protocol parameters maximizing the key length of one window.

    The objective is the unfloored key length, so the search keeps a
    gradient even where the floored value is zero.
    """
    settings.security.require_one_decoy()
    if settings.fixed is not None:
        params = settings.fixed
        analysis = analyze_block(params, eta, settings.budget, settings.detector,
                                 settings.security)
        return WindowResult(params, analysis, plateau=False, evals=1)
    cfg = replace(settings.optimizer, seed=seed)
    if restarts is not None:
        cfg = replace(cfg, restarts=restarts)
    start = DEFAULT_START if x0 is None else x0
    res = maximize(_skl_objective(eta, settings), QKD_SPACE, cfg, x0=start)
    mu1, mu2, p_mu1, p_za = (float(v) for v in res.best_point)
    params = ProtocolParams(mu1=mu1, mu2=mu2, p_mu1=p_mu1, p_za=p_za, p_zb=settings.p_zb)
    analysis = analyze_block(params, eta, settings.budget, settings.detector,
                             settings.security)
    return WindowResult(params, analysis, plateau=res.plateau, evals=res.evals_used)


def optimized_skr(loss_db: float, settings: QkdSettings, seed: int = 0,
                  x0=None) -> WindowResult:
    return optimize_window(from_db(loss_db), settings, seed=seed, x0=x0)


def _run_chain(args) -> list[tuple[int, WindowResult]]:
    indices, etas, settings, seed = args
    out = []
    x0 = None
    for idx, eta in zip(indices, etas):
        warm = settings.warm_start and x0 is not None
        res = optimize_window(eta, settings, seed=window_seed(seed, OPTIMIZER_STREAM, idx),
                              x0=x0, restarts=settings.warm_restarts if warm else None)
        out.append((idx, res))
        if settings.warm_start:
            p = res.params
            x0 = (p.mu1, p.mu2, p.p_mu1, p.p_za)
    return out


def _chains(profile: LossProfile, settings: QkdSettings) -> list[list[int]]:
    n = len(profile)
    if not settings.warm_start:
        return [[i] for i in range(n)]
    start = int(np.argmax(profile.eta_total))
    right = list(range(start, n))
    left = list(range(start - 1, -1, -1))
    return [c for c in (right, left) if c]


def _pool_map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def optimize_profile(profile: LossProfile, settings: QkdSettings, seed: int = 0,
                     workers: int = 1) -> list[WindowResult]:
    """Optimized key analysis for every window of ``profile``, in order."""
    if len(profile) == 0:
        raise ValueError("empty loss profile")
    etas = profile.eta_total
    jobs = [(chain, [float(etas[i]) for i in chain], settings, seed)
            for chain in _chains(profile, settings)]
    results: list[WindowResult | None] = [None] * len(profile)
    for chunk in _pool_map(_run_chain, jobs, workers):
        for idx, res in chunk:
            results[idx] = res
    return results


def qkd_records(profile: LossProfile, results: list[WindowResult]) -> list[QkdRecord]:
    records = []
    for s, r in zip(profile.samples, results):
        a, p = r.analysis, r.params
        records.append(QkdRecord(
            t_s=s.t_s, elevation_deg=math.degrees(s.elevation_rad), loss_db=s.loss_total_db,
            skl_bits=a.skl, skr_hz=a.skr_hz, qber_z=a.qber_z, qber_x=a.qber_x,
            mu1=p.mu1, mu2=p.mu2, p_mu1=p.p_mu1, p_za=p.p_za))
    return records


def _qkpc_job(args) -> QkpcResult:
    eta, params, f_s, optimize_q = args
    return optimize_point(eta, params, f_s, optimize_q)


def qkpc_records(profile: LossProfile, params: QkpcParams, source_rate_hz: float,
                 optimize_q: bool = True, workers: int = 1) -> list[QkpcRecord]:
    if len(profile) == 0:
        raise ValueError("empty loss profile")
    jobs = [(float(s.eta_total), params, source_rate_hz, optimize_q) for s in profile.samples]
    results = _pool_map(_qkpc_job, jobs, workers)
    return [QkpcRecord(t_s=s.t_s, loss_db=s.loss_total_db, qkpc_rate_bps=r.rate_bps,
                       mu_opt=r.mu_opt, q_opt=r.q_opt, c_p=r.c_p, r_dw=r.r_dw)
            for s, r in zip(profile.samples, results)]


def qkd_summary(records: list[QkdRecord], window_s: float) -> dict:
    keyed = [r for r in records if r.skl_bits > 0]
    return {
        "total_skl_bits": int(sum(r.skl_bits for r in records)),
        "qkd_window_s": len(keyed) * window_s,
        "peak_skr_hz": max((r.skr_hz for r in records), default=0.0),
        "min_qber_z": min((r.qber_z for r in keyed), default=None),
        "qkd_cutoff_loss_db": max((r.loss_db for r in keyed), default=None),
    }


def qkpc_summary(records: list[QkpcRecord], window_s: float) -> dict:
    rates = [r.qkpc_rate_bps for r in records]
    return {
        "total_private_bits": float(sum(rates) * window_s),
        "qkpc_rate_plateau_bps": float(np.median(rates)) if rates else 0.0,
    }


def bisect_loss(predicate, lo: float, hi: float, tol_db: float = 0.01) -> float:
    """Boundary of a predicate that holds at ``lo`` and fails at ``hi``."""
    if not predicate(lo):
        raise CalibrationError(f"condition fails already at {lo} dB")
    if predicate(hi):
        raise CalibrationError(f"condition still holds at {hi} dB")
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cutoff_loss(settings: QkdSettings, lo: float = 30.0, hi: float = 50.0,
                seed: int = 0, tol_db: float = 0.01) -> float:
    """Largest total loss at which the optimized key length is positive.

    Near the cutoff the positive region is a thin sliver, so each probe
    also starts from the optimum of the last positive probe.
    """
    last = [None]

    def positive(loss):
        res = optimized_skr(loss, settings, seed, x0=last[0])
        if res.analysis.skl > 0:
            p = res.params
            last[0] = (p.mu1, p.mu2, p.p_mu1, p.p_za)
            return True
        return False
    return bisect_loss(positive, lo, hi, tol_db)


def calibrate_zenith_loss(target_skr_hz: float, settings: QkdSettings,
                          lo: float = 25.0, hi: float = 38.0, seed: int = 0,
                          tol_db: float = 1e-3) -> float:
    """Zenith loss at which the optimized key rate equals ``target_skr_hz``."""
    return bisect_loss(lambda l: optimized_skr(l, settings, seed).analysis.skr_hz
                       >= target_skr_hz, lo, hi, tol_db)


def zenith_loss_db(orbit: OrbitConfig, channel: ChannelConfig) -> float:
    el = elevation_at(0.0, orbit)
    L = slant_range(el, orbit)
    return (to_db(geometric_transmittance(L, channel))
            + to_db(atmospheric_transmittance(el, channel.atmosphere))
            + channel.intrinsic_loss_db)


def calibrate_intrinsic_loss(orbit: OrbitConfig, channel: ChannelConfig,
                             zenith_loss: float) -> ChannelConfig:
    """Channel whose constant loss term makes the zenith total equal ``zenith_loss``."""
    rest = zenith_loss_db(orbit, replace(channel, intrinsic_loss_db=0.0))
    intrinsic = zenith_loss - rest
    if intrinsic < 0:
        raise CalibrationError(
            f"zenith loss {zenith_loss:.3f} dB is below the geometric plus atmospheric "
            f"loss {rest:.3f} dB")
    return replace(channel, intrinsic_loss_db=intrinsic)


@dataclass(frozen=True)
class ApertureRow:
    d_t_m: float
    zenith_loss_db: float
    skr_hz: float


def aperture_sweep(d_t_list, orbit: OrbitConfig, channel: ChannelConfig,
                   settings: QkdSettings, seed: int = 0) -> list[ApertureRow]:
    """Zenith key rate versus transmitter aperture, with the waist at D_T/2."""
    rows = []
    for d in d_t_list:
        if not d > 0:
            raise ValueError(f"transmitter aperture must be > 0, got {d}")
        ch = replace(channel, tx_aperture_m=d, beam_waist_m=d / 2)
        loss = zenith_loss_db(orbit, ch)
        res = optimized_skr(loss, settings, seed)
        rows.append(ApertureRow(d_t_m=d, zenith_loss_db=loss, skr_hz=res.analysis.skr_hz))
    return rows

import math
from dataclasses import replace

import numpy as np
import pytest

from qsatlink.channel import ChannelConfig, flat_profile, loss_profile, to_db
from qsatlink.detstat import ProtocolParams
from qsatlink.optimizer import OptimizerConfig
from qsatlink.orbitpass import OrbitConfig, pass_geometry
from qsatlink.passsim import (QKD_SPACE, CalibrationError, QkdRecord, QkdSettings,
                              QkpcRecord, _chains, aperture_sweep, bisect_loss,
                              calibrate_intrinsic_loss, optimize_profile, optimize_window,
                              qkd_records, qkd_summary, qkpc_records, qkpc_summary,
                              window_seed, zenith_loss_db)
from qsatlink.qkpc import QkpcParams

FAST = QkdSettings(optimizer=OptimizerConfig(restarts=3, max_evals=400))


def test_window_seed_streams_differ():
    assert window_seed(0, 1, 5) == window_seed(0, 1, 5)
    assert len({window_seed(0, 1, 5), window_seed(0, 2, 5), window_seed(0, 1, 6),
                window_seed(1, 1, 5)}) == 4


def test_optimized_window_beats_reference_params():
    from qsatlink.finitekey import analyze_block
    from qsatlink.channel import from_db
    eta = from_db(30.0)
    res = optimize_window(eta, FAST)
    ref = analyze_block(ProtocolParams(), eta, FAST.budget, FAST.detector, FAST.security)
    assert res.analysis.skl >= ref.skl
    p = res.params
    assert QKD_SPACE.feasible((p.mu1, p.mu2, p.p_mu1, p.p_za))


def test_fixed_params_bypass_search():
    s = replace(FAST, fixed=ProtocolParams())
    res = optimize_window(1e-3, s)
    assert res.params == ProtocolParams() and res.evals == 1


def test_chains_cover_every_window_once():
    prof = flat_profile(30.0, n=7)
    for s in (FAST, replace(FAST, warm_start=False)):
        flat = sorted(i for c in _chains(prof, s) for i in c)
        assert flat == list(range(7))


def test_chains_start_at_lowest_loss():
    prof = loss_profile(pass_geometry(OrbitConfig(min_elevation_deg=80.0)), ChannelConfig())
    right, left = _chains(prof, FAST)
    best = int(np.argmax(prof.eta_total))
    assert right[0] == best and left[0] == best - 1


def test_profile_independent_of_workers():
    prof = flat_profile(32.0, n=4)
    a = optimize_profile(prof, FAST, seed=3, workers=1)
    b = optimize_profile(prof, FAST, seed=3, workers=2)
    assert [r.params for r in a] == [r.params for r in b]
    assert [r.analysis.skl for r in a] == [r.analysis.skl for r in b]


def test_empty_profile_rejected():
    from qsatlink.channel import LossProfile
    with pytest.raises(ValueError):
        optimize_profile(LossProfile(samples=()), FAST)


def test_qkd_summary_aggregates():
    recs = [QkdRecord(0.0, 30.0, 40.0, 0, 0.0, 0.5, 1.0, .8, .1, .7, .8),
            QkdRecord(1.0, 60.0, 35.0, 100, 50.0, 0.002, 1.0, .8, .1, .7, .8),
            QkdRecord(2.0, 90.0, 33.0, 300, 150.0, 0.0015, 1.0, .8, .1, .7, .8)]
    s = qkd_summary(recs, 2.0)
    assert s["total_skl_bits"] == 400
    assert s["qkd_window_s"] == 4.0
    assert s["peak_skr_hz"] == 150.0
    assert s["min_qber_z"] == 0.0015
    assert s["qkd_cutoff_loss_db"] == 35.0
    empty = qkd_summary(recs[:1], 1.0)
    assert empty["min_qber_z"] is None and empty["qkd_cutoff_loss_db"] is None


def test_qkpc_summary_aggregates():
    recs = [QkpcRecord(float(t), 40.0, r, 1.0, .5, .6, 0.0) for t, r in enumerate([1., 3., 2.])]
    s = qkpc_summary(recs, 0.5)
    assert s["total_private_bits"] == 3.0
    assert s["qkpc_rate_plateau_bps"] == 2.0


def test_records_follow_profile():
    prof = flat_profile(31.0, n=2)
    recs = qkd_records(prof, optimize_profile(prof, FAST))
    assert [r.t_s for r in recs] == list(prof.t_s)
    assert all(r.loss_db == pytest.approx(31.0) for r in recs)
    q = qkpc_records(prof, QkpcParams(), 1e9)
    assert all(r.qkpc_rate_bps == pytest.approx(0.68e9, rel=0.01) for r in q)


def test_bisect_loss():
    assert bisect_loss(lambda l: l < 37.3, 30.0, 50.0, 1e-4) == pytest.approx(37.3, abs=1e-4)
    with pytest.raises(CalibrationError):
        bisect_loss(lambda l: False, 30.0, 50.0)
    with pytest.raises(CalibrationError):
        bisect_loss(lambda l: True, 30.0, 50.0)


def test_zenith_loss_is_sum_of_parts():
    ch = ChannelConfig()
    prof = loss_profile(pass_geometry(OrbitConfig()), ch)
    assert zenith_loss_db(OrbitConfig(), ch) == pytest.approx(prof.loss_db.min(), abs=1e-9)


def test_calibrate_intrinsic_loss():
    ch = calibrate_intrinsic_loss(OrbitConfig(), ChannelConfig(), 31.0)
    assert zenith_loss_db(OrbitConfig(), ch) == pytest.approx(31.0, abs=1e-9)
    assert 0.0 <= ch.intrinsic_loss_db < 15.0
    with pytest.raises(CalibrationError):
        calibrate_intrinsic_loss(OrbitConfig(), ChannelConfig(), 20.0)


def test_aperture_sweep_monotone():
    rows = aperture_sweep([0.03, 0.05, 0.08], OrbitConfig(),
                          calibrate_intrinsic_loss(OrbitConfig(), ChannelConfig(), 31.0), FAST)
    losses = [r.zenith_loss_db for r in rows]
    rates = [r.skr_hz for r in rows]
    assert all(b < a for a, b in zip(losses, losses[1:]))
    assert all(b > a for a, b in zip(rates, rates[1:]))
    with pytest.raises(ValueError):
        aperture_sweep([0.0], OrbitConfig(), ChannelConfig(), FAST)


def test_settings_invariants():
    with pytest.raises(ValueError):
        QkdSettings(window_s=0.0)
    with pytest.raises(ValueError):
        QkdSettings(source_rate_hz=-1.0)

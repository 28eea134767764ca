"""Kernel backend selection.

The compiled extension is used when it imports; setting
``QSATLINK_PURE_PYTHON=1`` forces the numpy fallback.
"""
from __future__ import annotations

import math
import os

import numpy as np

from . import _fallback

if os.environ.get("QSATLINK_PURE_PYTHON", "") not in ("", "0"):
    _kernels = None
else:
    try:
        from . import _kernels
    except ImportError:
        _kernels = None

BACKEND = "compiled" if _kernels is not None else "python"
_impl = _kernels if _kernels is not None else _fallback

simulate_pulses = _impl.simulate_pulses
skl_raw = _impl.skl_raw


def pulse_tables(params, eta, detector):
    """Lookup tables consumed by ``simulate_pulses``.

    Returns the positional arguments after ``n_pulses``: intensity and basis
    probabilities, per-intensity Poisson CDF rows, per-photon-number signal
    survival, spurious click probability, afterpulse probability and the
    error probability of a signal click.
    """
    mus = (params.mu1, params.mu2)
    n_max = max(int(mu + 12.0 * math.sqrt(mu) + 30) for mu in mus)
    ns = np.arange(n_max)
    cdf = np.empty((2, n_max))
    log_fact = np.array([math.lgamma(n + 1) for n in ns])
    for row, mu in enumerate(mus):
        if mu > 0:
            pmf = np.exp(-mu + ns * math.log(mu) - log_fact)
        else:
            pmf = (ns == 0).astype(float)
        cdf[row] = np.minimum(np.cumsum(pmf), 1.0)
    photons = np.arange(n_max + 1)
    if eta < 1.0:
        surv = -np.expm1(photons * np.log1p(-eta))
    else:
        surv = (photons > 0).astype(float)
    pec = detector.extraneous_count_prob
    return (params.p_mu1, params.p_za, params.p_zb, cdf, surv, 2.0 * pec,
            detector.afterpulse_prob, detector.intrinsic_qber + pec)


def unpack_tally(tally):
    from .detstat import CountStatistics, GroundTruthCounts

    t = [int(v) for v in tally]
    counts = CountStatistics(
        n_z_mu1=t[0], n_z_mu2=t[1], m_z_mu1=t[8], m_z_mu2=t[9],
        n_x_mu1=t[6], n_x_mu2=t[7], m_x_mu1=t[14], m_x_mu2=t[15],
        n_a_z=t[10] + t[11], n_z_d=t[4] + t[5])
    truth = GroundTruthCounts(vacuum_clicks_z=t[16], single_photon_clicks_z=t[17],
                              single_photon_clicks_x=t[18], single_photon_errors_x=t[19])
    return counts, truth

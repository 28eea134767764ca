"""Pure Python/numpy implementations of the compiled kernels."""
from __future__ import annotations

import numpy as np

N_TALLY = 20
CHUNK = 1 << 18


def simulate_pulses(bit_generator, n_pulses, p_mu1, p_za, p_zb, cdf, surv,
                    p_dark, p_ap, q_sig):
    rng = np.random.Generator(bit_generator)
    cdf = np.ascontiguousarray(cdf)
    tally = np.zeros(N_TALLY, dtype=np.int64)
    done = 0
    while done < n_pulses:
        m = min(CHUNK, n_pulses - done)
        done += m
        u = rng.random((m, 9))
        k = (u[:, 0] >= p_mu1).astype(np.int64)
        a = (u[:, 1] >= p_za).astype(np.int64)
        b = (u[:, 2] >= p_zb).astype(np.int64)
        n = np.where(k == 0,
                     np.searchsorted(cdf[0], u[:, 3], side="right"),
                     np.searchsorted(cdf[1], u[:, 3], side="right"))
        sig = u[:, 4] < surv[n]
        click = sig | (u[:, 5] < p_dark)
        if not click.any():
            continue
        u, k, a, b, n, sig = u[click], k[click], a[click], b[click], n[click], sig[click]
        ap = u[:, 6] < p_ap
        pflip = np.where(a == b, np.where(sig, q_sig, 0.5), 0.5)
        clicks = 1 + ap.astype(np.int64)
        flips = (u[:, 7] < pflip).astype(np.int64) + (ap & (u[:, 8] < 0.5))
        c = a * 4 + b * 2 + k
        tally[:8] += np.bincount(c, weights=clicks, minlength=8).astype(np.int64)
        tally[8:16] += np.bincount(c, weights=flips, minlength=8).astype(np.int64)
        zz = (a == 0) & (b == 0)
        xx1 = (a == 1) & (b == 1) & (n == 1)
        tally[16] += clicks[zz & (n == 0)].sum()
        tally[17] += clicks[zz & (n == 1)].sum()
        tally[18] += clicks[xx1].sum()
        tally[19] += flips[xx1].sum()
    return tally


def skl_raw(mu1, mu2, p_mu1, p_za, p_zb, eta, n_pulses, pec, pap, qber_i,
            eps_s, eps_c, alpha, f_ec):
    from .detstat import DetectorModel, ProtocolParams, PulseBudget
    from .finitekey import SecurityParams, analyze_block

    analysis = analyze_block(
        ProtocolParams(mu1, mu2, p_mu1, p_za, p_zb), eta,
        PulseBudget(source_rate_hz=n_pulses, duration_s=1.0),
        DetectorModel(pec, pap, qber_i),
        SecurityParams(eps_s, eps_c, int(alpha), f_ec))
    return analysis.skl_raw

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsatlink import _backend
from qsatlink.detstat import (BudgetTooLarge, CountStatistics, DetectorModel, ProtocolParams,
                              PulseBudget, click_probability, error_probability,
                              expected_counts, monte_carlo_counts)

TABLE2 = DetectorModel()
TABLE3 = ProtocolParams()
QUIET = DetectorModel(0.0, 0.0, 0.0)


def test_click_probability_examples():
    assert click_probability(0.0, 0.5, QUIET) == 0.0
    assert click_probability(1e6, 1.0, DetectorModel(0.0, 0.5, 0.0)) == 1.0
    d = click_probability(0.81, 1e-3, TABLE2)
    assert d == pytest.approx(1.001 * (1 - (1 - 2e-8) * math.exp(-8.1e-4)), rel=1e-12)
    assert d == pytest.approx(8.10e-4, rel=2e-3)


@pytest.mark.slow
def test_click_probability_against_pulse_oracle():
    # equal intensities make every pulse an independent D(0.81) trial; the raw
    # tally covers all eight basis/intensity classes
    params = ProtocolParams(mu1=0.81, mu2=0.81)
    n = 100_000_000
    tally = _backend.simulate_pulses(np.random.PCG64(11), n,
                                     *_backend.pulse_tables(params, 1e-3, TABLE2))
    clicks = int(tally[:8].sum())
    d = click_probability(0.81, 1e-3, TABLE2)
    assert abs(clicks - n * d) <= 3 * math.sqrt(n * d)


def test_error_probability_examples():
    assert error_probability(0.5, 0.3, QUIET) == 0.0
    assert error_probability(0.0, 0.5, DetectorModel(1e-6, 0.0, 1e-3)) == pytest.approx(1e-6)
    det = DetectorModel(1e-6, 0.01, 1e-3)
    d0 = click_probability(0.0, 0.5, det)
    assert error_probability(0.0, 0.5, det) == pytest.approx(1e-6 + 0.005 * d0)


def test_error_ratio_follows_pinned_formula():
    d = click_probability(0.81, 1e-3, TABLE2)
    e = error_probability(0.81, 1e-3, TABLE2)
    by_hand = 1e-8 + 0.5e-3 * d + 1e-3 * (1 - math.exp(-8.1e-4))
    assert e == pytest.approx(by_hand, rel=1e-12)
    # E/D ~ P_AP/2 + QBER_I/(1+P_AP) + P_EC/D, about 0.15 %
    assert e / d == pytest.approx(0.5e-3 + 1e-3 / 1.001 + 1e-8 / d, rel=1e-3)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 0.5), st.floats(0.0, 0.5),
       st.floats(0.0, 0.5))
def test_error_never_exceeds_click(mu, eta, pec, pap, q):
    det = DetectorModel(pec, pap, q)
    d = click_probability(mu, eta, det)
    e = error_probability(mu, eta, det)
    assert 0.0 <= e <= d <= 1.0


def test_expected_counts_examples():
    zero = expected_counts(TABLE3, 1e-3, PulseBudget(0.0, 1.0), TABLE2)
    assert all(v == 0 for v in zero.as_dict().values())

    c = expected_counts(TABLE3, 1e-3, PulseBudget(), TABLE2)
    by_hand = 1e9 * (0.76 * 0.88 * 0.9 * click_probability(0.81, 1e-3, TABLE2)
                     + 0.24 * 0.88 * 0.9 * click_probability(0.12, 1e-3, TABLE2))
    assert c.n_z == pytest.approx(by_hand, rel=1e-12)


def test_all_z_preparation_removes_x_counts():
    params = ProtocolParams(p_za=1 - 1e-15)
    c = expected_counts(params, 1e-3, PulseBudget(), TABLE2)
    assert c.n_x < 1e-3 and c.m_x < 1e-3


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 1e10), st.floats(2.0, 10.0))
def test_expected_counts_linear_in_pulses(n, k):
    a = expected_counts(TABLE3, 1e-3, PulseBudget(n, 1.0), TABLE2).as_dict()
    b = expected_counts(TABLE3, 1e-3, PulseBudget(n * k, 1.0), TABLE2).as_dict()
    for key in a:
        assert b[key] == pytest.approx(k * a[key], rel=1e-12)


@pytest.mark.parametrize("kwargs", [{"mu1": 0.1, "mu2": 0.2}, {"mu2": -0.1}, {"p_mu1": 1.0},
                                    {"p_za": 0.0}, {"p_zb": 1.5}])
def test_protocol_invariants(kwargs):
    with pytest.raises(ValueError):
        ProtocolParams(**kwargs)


def test_protocol_complements():
    p = ProtocolParams()
    assert p.p_mu2 == pytest.approx(0.24)
    assert p.p_xa == pytest.approx(0.12)
    assert p.p_xb == pytest.approx(0.1)


@pytest.mark.parametrize("kwargs", [{"extraneous_count_prob": 1.0},
                                    {"afterpulse_prob": -0.1}, {"intrinsic_qber": 2.0}])
def test_detector_invariants(kwargs):
    with pytest.raises(ValueError):
        DetectorModel(**kwargs)


def test_count_invariants():
    with pytest.raises(ValueError):
        CountStatistics(n_z_mu1=1.0, m_z_mu1=2.0)
    with pytest.raises(ValueError):
        CountStatistics(n_x_mu2=-1.0)


def test_monte_carlo_is_deterministic():
    b = PulseBudget(200_000, 1.0)
    assert (monte_carlo_counts(TABLE3, 1e-2, b, TABLE2, seed=5)
            == monte_carlo_counts(TABLE3, 1e-2, b, TABLE2, seed=5))
    assert (monte_carlo_counts(TABLE3, 1e-2, b, TABLE2, seed=5)
            != monte_carlo_counts(TABLE3, 1e-2, b, TABLE2, seed=6))


def test_monte_carlo_dark_channel_is_silent():
    counts, truth = monte_carlo_counts(TABLE3, 0.0, PulseBudget(100_000, 1.0),
                                       DetectorModel(0.0, 1e-3, 1e-3), seed=1)
    assert all(v == 0 for v in counts.as_dict().values())
    assert truth.vacuum_clicks_z == truth.single_photon_clicks_z == 0


def test_monte_carlo_budget_limit():
    with pytest.raises(BudgetTooLarge):
        monte_carlo_counts(TABLE3, 1e-3, PulseBudget(2e9, 1.0), TABLE2, seed=0)


def test_monte_carlo_rejects_bad_eta():
    with pytest.raises(ValueError):
        monte_carlo_counts(TABLE3, 1.5, PulseBudget(10, 1.0), TABLE2, seed=0)


def test_monte_carlo_matches_expectation():
    n = 10_000_000
    exp = expected_counts(TABLE3, 1e-3, PulseBudget(n, 1.0), TABLE2).as_dict()
    obs, _ = monte_carlo_counts(TABLE3, 1e-3, PulseBudget(n, 1.0), TABLE2, seed=2024)
    for key, e in exp.items():
        assert abs(obs.as_dict()[key] - e) <= 4 * math.sqrt(max(e, 1.0)), key


def test_ground_truth_consistency():
    for seed in range(20):
        counts, truth = monte_carlo_counts(TABLE3, 1e-2, PulseBudget(100_000, 1.0), TABLE2,
                                           seed=seed)
        assert truth.vacuum_clicks_z + truth.single_photon_clicks_z <= counts.n_z
        assert truth.single_photon_clicks_x <= counts.n_x
        assert truth.single_photon_errors_x <= truth.single_photon_clicks_x


def test_single_photon_fraction_matches_poisson():
    # noiseless channel: single-photon Z clicks follow N p_k zz mu e^-mu eta
    n = 2_000_000
    eta = 0.05
    _, truth = monte_carlo_counts(TABLE3, eta, PulseBudget(n, 1.0), QUIET, seed=3)
    zz = 0.88 * 0.9
    expected = n * zz * sum(p * mu * math.exp(-mu) * eta for mu, p in TABLE3.intensities)
    assert abs(truth.single_photon_clicks_z - expected) <= 5 * math.sqrt(expected)
    assert truth.vacuum_clicks_z == 0

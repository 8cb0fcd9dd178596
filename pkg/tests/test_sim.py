import numpy as np
import pytest

from macq.core import (BernoulliExceedance, GaussianIID, GilbertElliott,
                       StationaryMixture, SystemConfig, ValidationError)
from macq.sim import (count_exceedances, run_sim, sample_max_capacity,
                      sweep_threshold)

CFG = SystemConfig(K=4, lambda_total=0.3, slots=200_000, seed=42,
                   replications=2)
CH = BernoulliExceedance(0.25)


def test_bit_reproducible_under_fixed_seed():
    a = run_sim(CFG, CH)
    b = run_sim(CFG, CH)
    assert a.as_dict() == b.as_dict()


def test_seed_changes_output():
    a = run_sim(CFG, CH)
    b = run_sim(SystemConfig(K=4, lambda_total=0.3, slots=200_000, seed=43,
                             replications=2), CH)
    assert a.throughput != b.throughput


def test_delay_decomposition():
    rep = run_sim(CFG, CH)
    assert rep.total_delay == pytest.approx(rep.w_q + rep.w_s + 1.0,
                                            abs=1e-12)


def test_stable_system_carries_the_load():
    rep = run_sim(CFG, CH)
    assert rep.throughput == pytest.approx(0.3, rel=0.02)
    assert not rep.low_confidence
    assert not rep.inflight_bias


def test_littles_law_consistency():
    # per-user waiting count vs arrival rate times queueing delay
    rep = run_sim(SystemConfig(K=4, lambda_total=0.3, slots=1_000_000,
                               seed=7, replications=2), CH)
    assert rep.mean_queue_len == pytest.approx(0.075 * rep.w_q, rel=0.05)


def test_gilbert_channel_runs():
    ch = GilbertElliott(alpha=0.1, beta=0.1, mu_g=0.07, sigma_g=1.0,
                        mu_b=0.05, sigma_b=0.5)
    rep = run_sim(SystemConfig(K=10, lambda_total=0.3, slots=100_000,
                               seed=1), ch)
    assert 0.0 < rep.p_succ_given_attempt < 1.0
    assert rep.throughput == pytest.approx(0.3, rel=0.1)


def test_gaussian_iid_channel_equivalent_to_bernoulli():
    # same exceedance probability, same per-slot transmit law
    ch = GaussianIID(mu=0.0, sigma=1.0, threshold=0.6744897501960817)
    rep = run_sim(SystemConfig(K=4, lambda_total=0.3, slots=100_000,
                               seed=9), ch)
    assert rep.throughput == pytest.approx(0.3, rel=0.05)


def test_sweep_threshold_rejects_bad_grid():
    with pytest.raises(ValueError):
        sweep_threshold(CFG, CH, [0.1, 1.5])


def test_sweep_threshold_rows():
    rows = sweep_threshold(
        SystemConfig(K=4, lambda_total=0.2, slots=50_000, seed=3), CH,
        [0.1, 0.25, 0.4])
    assert [r[0] for r in rows] == [0.1, 0.25, 0.4]
    for _, thr, delay, nb, rep in rows:
        assert 0 <= thr <= 1
        assert delay >= 1.0
        assert 0 <= nb <= 4


GE = GilbertElliott(alpha=0.5, beta=0.5, mu_g=1.41421356, sigma_g=0.5,
                    mu_b=0.0, sigma_b=0.25)


def test_sample_max_capacity_reproducible_and_sane():
    a = sample_max_capacity(200, GE, 500, seed=5)
    b = sample_max_capacity(200, GE, 500, seed=5)
    assert np.array_equal(a, b)
    assert a.shape == (500,)
    # max of 200 draws sits well above the Good-state mean
    assert a.mean() > GE.mu_g


def test_sample_max_capacity_modes_differ_but_agree_in_law():
    a = sample_max_capacity(500, GE, 2000, mode="stationary", seed=5)
    b = sample_max_capacity(500, GE, 2000, mode="evolving", seed=5)
    assert not np.array_equal(a, b)
    assert a.mean() == pytest.approx(b.mean(), rel=0.02)
    with pytest.raises(ValueError):
        sample_max_capacity(500, GE, 10, mode="bogus")


def test_count_exceedances_pmf():
    ch = GaussianIID(mu=0.0, sigma=1.0, threshold=2.0)
    pmf = count_exceedances(100, 0.5, ch, blocks=2000, seed=11)
    assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
    assert pmf.min() >= 0.0
    # mean count should be near 100 * sf(2) = 2.275
    mean = float(np.dot(np.arange(len(pmf)), pmf))
    assert mean == pytest.approx(2.275, rel=0.1)

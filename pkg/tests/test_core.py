import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from macq.core import (BernoulliExceedance, GaussianIID, GilbertElliott,
                       StationaryMixture, SystemConfig, ValidationError,
                       mixture_cdf, mixture_pdf, mixture_sf, normal_cdf,
                       normal_sf, validate_config)

MIX = StationaryMixture(p=0.5, q=0.5, mu_g=math.sqrt(2.0), sigma_g=0.5,
                        mu_b=0.0, sigma_b=0.25)


def test_normal_cdf_matches_scipy():
    xs = np.linspace(-8, 8, 41)
    for x in xs:
        assert normal_cdf(x) == pytest.approx(sps.norm.cdf(x), abs=1e-14)
        assert normal_sf(x) == pytest.approx(sps.norm.sf(x), abs=1e-14)


def test_mixture_cdf_sf_complement():
    for x in np.linspace(-3, 6, 31):
        assert mixture_cdf(x, MIX) + mixture_sf(x, MIX) == pytest.approx(
            1.0, abs=1e-12)


@given(st.floats(-10, 10), st.floats(0, 10),
       st.floats(0.01, 0.99), st.floats(-5, 5), st.floats(0.1, 3),
       st.floats(-5, 5), st.floats(0.05, 3))
@settings(max_examples=200, deadline=None)
def test_mixture_cdf_monotone(x, dx, p, mug, sg, mub, sb):
    mix = StationaryMixture(p=p, q=1 - p, mu_g=mug, sigma_g=sg,
                            mu_b=mub, sigma_b=sb)
    assert mixture_cdf(x + dx, mix) >= mixture_cdf(x, mix) - 1e-12


def test_mixture_pdf_integrates_to_one():
    xs = np.linspace(-6, 8, 20001)
    vals = np.array([mixture_pdf(x, MIX) for x in xs])
    assert np.trapezoid(vals, xs) == pytest.approx(1.0, abs=1e-6)


def test_gilbert_elliott_stationary_split():
    ch = GilbertElliott(alpha=0.1, beta=0.3, mu_g=1.0, sigma_g=1.0,
                        mu_b=0.0, sigma_b=0.5)
    assert ch.p_good == pytest.approx(0.75)
    assert ch.p_bad == pytest.approx(0.25)
    mix = StationaryMixture.from_gilbert_elliott(ch)
    assert mix.p == pytest.approx(ch.p_good)
    assert mix.q == pytest.approx(ch.p_bad)
    # detailed balance of the two-state chain: p * alpha = q * beta
    assert mix.p * ch.alpha == pytest.approx(mix.q * ch.beta, abs=1e-15)


def test_gaussian_iid_exceedance_prob():
    ch = GaussianIID(mu=0.0, sigma=1.0, threshold=1.2816)
    assert ch.p_exc == pytest.approx(sps.norm.sf(1.2816), abs=1e-12)


def test_validate_config_rejects_bad_inputs():
    ch = BernoulliExceedance(0.2)
    with pytest.raises(ValidationError):
        validate_config(SystemConfig(K=0, lambda_total=0.3), ch)
    with pytest.raises(ValidationError):
        validate_config(SystemConfig(K=4, lambda_total=-0.1), ch)
    with pytest.raises(ValidationError):
        validate_config(SystemConfig(K=4, lambda_total=0.3),
                        BernoulliExceedance(1.5))


def test_validate_config_rejects_bad_channel_dominance():
    # the Bad state must not have the heavier upper tail
    ch = GilbertElliott(alpha=0.1, beta=0.1, mu_g=0.0, sigma_g=0.25,
                        mu_b=1.0, sigma_b=0.5)
    with pytest.raises(ValidationError):
        validate_config(SystemConfig(K=4, lambda_total=0.1), ch)


def test_validation_error_collects_all_messages():
    ch = BernoulliExceedance(-0.5)
    with pytest.raises(ValidationError) as exc:
        validate_config(SystemConfig(K=0, lambda_total=-1.0), ch)
    assert len(exc.value.errors) >= 3


def test_default_warmup_is_ten_percent():
    cfg = validate_config(SystemConfig(K=4, lambda_total=0.3, slots=1000),
                          BernoulliExceedance(0.25))
    assert cfg.warmup_slots == 100
    assert cfg.lambda_i == pytest.approx(0.075)


def test_explicit_warmup_respected():
    cfg = validate_config(
        SystemConfig(K=4, lambda_total=0.3, slots=1000, warmup=250),
        BernoulliExceedance(0.25))
    assert cfg.warmup_slots == 250

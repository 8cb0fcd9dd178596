import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macq.core import InstabilityError, ValidationError
from macq.gilbert_queue import (cubic_coeffs, metrics, solve_model3,
                                solve_z0, steady_state)


def _g(coeffs, z):
    c3, c2, c1, c0 = coeffs
    return ((c3 * z + c2) * z + c1) * z + c0


@given(st.floats(0.001, 0.2), st.floats(0.01, 1.0), st.floats(0.01, 1.0),
       st.floats(0.01, 0.9), st.floats(0.01, 0.9))
@settings(max_examples=200, deadline=None)
def test_cubic_value_at_one(lam, mg, mb, alpha, beta):
    coeffs = cubic_coeffs(lam, mg, mb, alpha, beta)
    expected = alpha * (mb - lam) + beta * (mg - lam)
    assert _g(coeffs, 1.0) == pytest.approx(expected, abs=1e-12)


def _stable(lam, mg, mb, alpha, beta):
    p = beta / (alpha + beta)
    return p * mg + (1 - p) * mb > lam


@given(st.floats(0.001, 0.05), st.floats(0.1, 1.0), st.floats(0.05, 1.0),
       st.floats(0.02, 0.5), st.floats(0.02, 0.5))
@settings(max_examples=100, deadline=None)
def test_state_mass_split(lam, mg, mb, alpha, beta):
    if not _stable(lam, mg, mb, alpha, beta):
        return
    coeffs = cubic_coeffs(lam, mg, mb, alpha, beta)
    z0 = solve_z0(coeffs, lam, mg, mb, alpha, beta)
    assert 0.0 < z0 < 1.0
    pi_g0, pi_b0, table = steady_state(z0, lam, mg, mb, alpha, beta)
    # the queue-length marginal per channel state recovers the chain's
    # stationary split, and the total mass is 1
    assert table[:, 0].sum() == pytest.approx(beta / (alpha + beta),
                                              abs=1e-8)
    assert table[:, 1].sum() == pytest.approx(alpha / (alpha + beta),
                                              abs=1e-8)
    assert table.sum() == pytest.approx(1.0, abs=1e-6)
    assert table.min() >= -1e-12


@given(st.floats(0.005, 0.08), st.floats(0.1, 1.0), st.floats(0.05, 0.5))
@settings(max_examples=100, deadline=None)
def test_symmetric_case_reduces_to_mm1(lam, mu, rate):
    # equal service rates in both channel states make the modulation
    # irrelevant: geometric queue with load rho = lam/mu
    if mu <= lam:
        return
    coeffs = cubic_coeffs(lam, mu, mu, rate, rate)
    z0 = solve_z0(coeffs, lam, mu, mu, rate, rate)
    pi_g0, pi_b0, table = steady_state(z0, lam, mu, mu, rate, rate)
    rho = lam / mu
    m = np.arange(min(table.shape[0], 200))
    expected = (1 - rho) * rho ** m
    got = table[:200, 0] + table[:200, 1]
    assert np.max(np.abs(got - expected[:len(got)])) <= 1e-9
    qbar, w = metrics(z0, lam, mu, mu, rate, rate, pi_g0, pi_b0)
    assert qbar == pytest.approx(rho / (1 - rho), abs=1e-9)
    assert w == pytest.approx(qbar / lam, rel=1e-12)


def test_boundary_probs_match_empty_mass():
    lam, mg, mb, alpha, beta = 0.03, 0.047, 0.034, 0.1, 0.1
    coeffs = cubic_coeffs(lam, mg, mb, alpha, beta)
    z0 = solve_z0(coeffs, lam, mg, mb, alpha, beta)
    pi_g0, pi_b0, table = steady_state(z0, lam, mg, mb, alpha, beta)
    assert table[0, 0] == pytest.approx(pi_g0, rel=1e-9)
    assert table[0, 1] == pytest.approx(pi_b0, rel=1e-9)


def test_solve_model3_fixed_point():
    K = 10
    sol = solve_model3(K, 0.03, 0.07, 0.05, 0.1, 0.1)
    assert sol.residual <= 1e-10
    assert 0.0 < sol.p_succ < 1.0
    assert 0.0 < sol.P_t < 1.0
    # the collision discount must match the attempt probability it implies
    assert sol.p_succ == pytest.approx((1.0 - sol.P_t) ** (K - 1),
                                       abs=1e-9)
    # the stored rates come from the last iterate, one tolerance-sized
    # update behind the reported p_succ
    assert sol.mu_g_eff == pytest.approx(0.07 * sol.p_succ, rel=1e-8)
    assert sol.W == pytest.approx(sol.Qbar / 0.03, rel=1e-12)


def test_solve_model3_regression_values():
    # frozen outputs for the K=10, total load 0.3 cell (cross-validated
    # against the simulator in the repro scenarios)
    sol = solve_model3(10, 0.03, 0.07, 0.05, 0.1, 0.1)
    assert sol.z0 == pytest.approx(0.1474217843631794, rel=1e-9)
    assert sol.p_succ == pytest.approx(0.6710271132606044, rel=1e-9)
    assert sol.Qbar == pytest.approx(2.939170975417798, rel=1e-8)


def test_solve_model3_unstable_raises():
    with pytest.raises(InstabilityError):
        solve_model3(10, 0.08, 0.07, 0.05, 0.1, 0.1)


def test_solve_model3_validation():
    with pytest.raises(ValidationError):
        solve_model3(0, 0.03, 0.07, 0.05, 0.1, 0.1)
    with pytest.raises(ValidationError):
        solve_model3(10, 0.03, -0.07, 0.05, 0.1, 0.1)
    with pytest.raises(ValidationError):
        solve_model3(10, 0.03, 0.07, 0.05, 0.0, 0.1)


def test_single_user_has_no_collisions():
    sol = solve_model3(1, 0.03, 0.07, 0.05, 0.1, 0.1)
    assert sol.p_succ == 1.0
    assert sol.mu_g_eff == pytest.approx(0.07)

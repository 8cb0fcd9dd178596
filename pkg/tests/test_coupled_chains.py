import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _closed_form_oracle import oracle_matrix
from macq.core import InstabilityError, ValidationError
from macq.coupled_chains import (K_MAX, avg_success_probs,
                                 build_transition_matrix, enumerate_states,
                                 queue_boundary, solve_model1, state_count,
                                 stationary_distribution)


@pytest.mark.parametrize("K", range(2, 11))
def test_state_count_formula(K):
    assert state_count(K) == 2 ** (K - 1) * (K + 2)


@pytest.mark.parametrize("K", range(2, 9))
def test_enumeration_matches_count_and_constraint(K):
    states = enumerate_states(K)
    assert states.shape == (state_count(K), K)
    assert (np.sum(states == 1, axis=1) <= 1).all()
    codes = states @ (3 ** np.arange(K))
    assert len(set(codes.tolist())) == len(codes)


def test_enumerate_rejects_out_of_range():
    with pytest.raises(ValidationError):
        enumerate_states(1)
    with pytest.raises(ValidationError):
        enumerate_states(K_MAX + 1)


@given(st.integers(2, 5), st.floats(0.01, 0.6), st.floats(0.05, 0.95),
       st.floats(0.01, 0.99), st.floats(0.01, 0.99))
@settings(max_examples=60, deadline=None)
def test_transition_rows_sum_to_one(K, lam, p, p11, p02):
    mat = build_transition_matrix(K, lam, p, p11, p02)
    rs = np.asarray(mat.sum(axis=1)).ravel()
    assert np.max(np.abs(rs - 1.0)) <= 1e-12
    assert mat.data.min() >= 0.0


@pytest.mark.parametrize("K", [2, 3])
@pytest.mark.parametrize("params", [(0.1, 0.3, 0.4, 0.6),
                                    (0.35, 0.5, 0.7, 0.2),
                                    (0.05, 0.9, 0.15, 0.85),
                                    (0.2, 0.25, 0.5, 0.5)])
def test_micro_events_match_closed_forms(K, params):
    lam, p, p11, p02 = params
    micro = build_transition_matrix(K, lam, p, p11, p02).toarray()
    oracle = oracle_matrix(K, lam, p, p11, p02)
    assert np.max(np.abs(micro - oracle)) <= 1e-10


def test_stationary_distribution_is_stationary():
    mat = build_transition_matrix(5, 0.07, 0.2, 0.4, 0.6)
    pi = stationary_distribution(mat)
    assert pi.min() >= 0.0
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    resid = np.max(np.abs(pi @ mat.toarray() - pi))
    assert resid <= 1e-12


def test_avg_success_probs_are_probabilities():
    K, lam, p = 4, 0.08, 0.25
    mat = build_transition_matrix(K, lam, p, 0.4, 0.6)
    pi = stationary_distribution(mat)
    states = enumerate_states(K)
    P_I, P_A, P_B = avg_success_probs(states, pi, lam, p)
    for v in (P_I, P_A, P_B):
        assert 0.0 <= v <= 1.0
    # a success while idle also requires the arrival, so it is the rarest
    assert P_I < P_A and P_I < P_B


def test_queue_boundary_closed_forms():
    lam = 0.075
    b = queue_boundary(lam, 0.014, 0.18, 0.17)
    lb = 1.0 - lam
    # the two marginals split the queue-state mass
    assert b.G0_at_1 + b.G1_at_1 == pytest.approx(1.0, abs=1e-12)
    assert b.G1_at_1 == pytest.approx(lam + lb * b.pi10, abs=1e-12)
    assert b.pi11 == pytest.approx(lam / lb * b.pi00, abs=1e-12)
    for v in (b.pi00, b.pi10, b.pi11, b.P_1given1, b.P_0given2):
        assert 0.0 <= v <= 1.0


def test_queue_boundary_unstable_raises():
    # success probabilities too small to drain the arrivals
    with pytest.raises(InstabilityError):
        queue_boundary(0.4, 0.01, 0.05, 0.05)


def test_solve_model1_fixed_point():
    sol = solve_model1(4, 0.075, 0.25)
    assert sol.residual <= 1e-10
    assert sol.D == pytest.approx(sol.W_q + sol.W_s + 1.0, abs=1e-9)
    assert 0.0 < sol.p_succ < 1.0
    assert 0.0 <= sol.blocked_prob <= 1.0
    assert sol.L > 0 and sol.W_q > 0 and sol.W_s > 0


def test_solve_model1_initialization_independent():
    a = solve_model1(5, 0.07, 0.2, x0=(0.5, 0.5))
    b = solve_model1(5, 0.07, 0.2, x0=(0.9, 0.1))
    assert a.p_succ == pytest.approx(b.p_succ, abs=1e-8)
    assert a.L == pytest.approx(b.L, rel=1e-7)


def test_solve_model1_regression_values():
    # frozen outputs for K=4, total load 0.3 (cross-validated against the
    # simulator within a few percent in the repro scenarios)
    sol = solve_model1(4, 0.075, 0.25)
    assert sol.p_succ == pytest.approx(0.690762938598, rel=1e-9)
    assert sol.L == pytest.approx(0.310330452648, rel=1e-9)
    assert sol.W_s == pytest.approx(4.786665407918, rel=1e-9)
    assert sol.boundary.P_0given2 == pytest.approx(0.609199949828, rel=1e-9)


def test_solve_model1_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        solve_model1(1, 0.1, 0.5)
    with pytest.raises(ValidationError):
        solve_model1(4, -0.1, 0.5)
    with pytest.raises(ValidationError):
        solve_model1(4, 0.1, 1.5)

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macq.core import InstabilityError, ValidationError
from macq.meanfield import mm1_metrics, solve_pcoll


@given(st.floats(0.001, 0.9), st.integers(2, 200))
@settings(max_examples=150, deadline=None)
def test_fixed_point_residual_asymptotic(load, K):
    # load = lam/tau < 1 is necessary; feasibility additionally requires
    # load < 1 - p, which the solver reports as instability
    tau = 1.0 / K
    lam = load * tau
    try:
        sol = solve_pcoll(lam, tau, mode="asymptotic")
    except InstabilityError:
        return
    resid = abs(sol.p_coll - (1.0 - math.exp(-lam / (tau * (1.0 - sol.p_coll)))))
    assert resid <= 1e-12


@given(st.floats(0.001, 0.9), st.integers(2, 200))
@settings(max_examples=150, deadline=None)
def test_fixed_point_residual_exact(load, K):
    tau = 1.0 / K
    lam = load * tau
    try:
        sol = solve_pcoll(lam, tau, K=K, mode="exact-K")
    except InstabilityError:
        return
    base = 1.0 - (1.0 / K) * lam / (tau * (1.0 - sol.p_coll))
    resid = abs(sol.p_coll - (1.0 - base ** (K - 1)))
    assert resid <= 1e-12


def test_zero_arrivals_no_collisions():
    sol = solve_pcoll(0.0, 0.1, mode="asymptotic")
    assert sol.p_coll == 0.0
    assert sol.p_succ == 1.0
    assert sol.mean_queue == 0.0


def test_overload_raises_instability():
    with pytest.raises(InstabilityError):
        solve_pcoll(0.15, 0.1)


def test_validation():
    with pytest.raises(ValidationError):
        solve_pcoll(-0.1, 0.1)
    with pytest.raises(ValidationError):
        solve_pcoll(0.05, 0.1, mode="bogus")
    with pytest.raises(ValidationError):
        solve_pcoll(0.05, 0.1, K=None, mode="exact-K")


def test_collision_probability_increases_with_load():
    prev = 0.0
    for lam in (0.005, 0.01, 0.015, 0.02, 0.025):
        sol = solve_pcoll(lam, 0.1, mode="asymptotic")
        assert sol.p_coll > prev
        prev = sol.p_coll


def test_queue_metrics_are_mm1():
    lam, tau = 0.03, 0.1
    sol = solve_pcoll(lam, tau, mode="asymptotic")
    mu_eff = (1.0 - sol.p_coll) * tau
    rho = lam / mu_eff
    assert sol.rho == pytest.approx(rho, abs=1e-12)
    assert sol.empty_prob == pytest.approx(1.0 - rho, abs=1e-12)
    assert sol.w_s == pytest.approx(1.0 / mu_eff, abs=1e-9)
    assert sol.sojourn == pytest.approx(1.0 / (mu_eff - lam), abs=1e-9)
    assert sol.sojourn == pytest.approx(sol.w_s + sol.w_q, abs=1e-9)
    # Little's law
    assert sol.mean_queue == pytest.approx(lam * sol.sojourn, rel=1e-9)


def test_mm1_metrics_helper_consistent_with_solution():
    lam, tau = 0.03, 0.1
    sol = solve_pcoll(lam, tau, mode="asymptotic")
    mean_queue, sojourn, w_s, empty = mm1_metrics(lam, tau, sol.p_coll)
    assert mean_queue == pytest.approx(sol.mean_queue, rel=1e-12)
    assert sojourn == pytest.approx(sol.sojourn, rel=1e-12)
    assert w_s == pytest.approx(sol.w_s, rel=1e-12)
    assert empty == pytest.approx(sol.empty_prob, rel=1e-12)


def test_exact_matches_asymptotic_for_large_K():
    lam_t = 0.3
    K = 5000
    a = solve_pcoll(lam_t / K, 1.0 / K, mode="asymptotic")
    e = solve_pcoll(lam_t / K, 1.0 / K, K=K, mode="exact-K")
    assert e.p_coll == pytest.approx(a.p_coll, rel=1e-3)


def test_regression_values():
    # frozen output for K=10, total load 0.36751 (cross-validated against
    # the simulator in the repro scenarios)
    sol = solve_pcoll(0.036751, 0.1, K=10, mode="exact-K")
    assert sol.p_coll == pytest.approx(0.48958844784694666, rel=1e-10)
    assert sol.sojourn == pytest.approx(69.97824620749812, rel=1e-9)

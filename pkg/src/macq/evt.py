"""Capacity scaling laws for the largest of K Good-Bad channel capacities.

Gumbel normalizing constants of the stationary mixture, the expected
maximum (centralized pick-the-best scheduling), the one-exceedance
threshold with its expected capacity (distributed scheduling), and the
mixing / local-dependence diagnostics that justify treating threshold
crossings of the dependent capacity sequence as a Poisson process.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (EULER_GAMMA, StationaryMixture, ValidationError,
                   mixture_pdf, mixture_sf, normal_sf)


@dataclass(frozen=True)
class GumbelConstants:
    a_K: float
    b_K: float
    K: int
    mix: StationaryMixture


def gumbel_constants(K: int, mix: StationaryMixture,
                     method: str = "closed_form") -> GumbelConstants:
    """Scale 1/a_K and location b_K normalizing the max of K stationary
    draws; only the Good component's tail parameters and weight p enter the
    closed form.  method="numeric" instead solves the exact quantile
    equation 1 - F(b_K) = 1/K and sets a_K = K f(b_K); the two agree to
    o(1) but the numeric pair converges faster at finite K."""
    errors = []
    if K < 2:
        errors.append(f"K = {K} must be >= 2")
    if not (mix.p > 0.0):
        errors.append(f"mix.p = {mix.p} must be > 0")
    if errors:
        raise ValidationError(errors)
    if method == "numeric":
        b_k = threshold_for_one(K, mix, method="numeric")
        a_k = K * mixture_pdf(b_k, mix)
        return GumbelConstants(a_K=a_k, b_K=b_k, K=K, mix=mix)
    if method != "closed_form":
        raise ValidationError(
            [f"method = {method!r} not in {{closed_form, numeric}}"])
    s = math.sqrt(2.0 * math.log(K))
    a_k = s / mix.sigma_g
    b_k = mix.sigma_g * (
        s - (math.log(math.log(K)) + math.log(4.0 * math.pi / mix.p ** 2))
        / (2.0 * s)) + mix.mu_g
    return GumbelConstants(a_K=a_k, b_K=b_k, K=K, mix=mix)


def expected_max(K: int, mix: StationaryMixture) -> float:
    """Mean of the limiting Gumbel law: b_K + gamma / a_K."""
    c = gumbel_constants(K, mix)
    return c.b_K + EULER_GAMMA / c.a_K


def good_only_expected_max(K: int, mix: StationaryMixture) -> float:
    """Leading-order expected max when only the p*K Good-state users are
    eligible: sigma_g * sqrt(2 log(pK)) + mu_g."""
    pk = mix.p * K
    if pk < 2:
        raise ValidationError([f"p*K = {pk} must be >= 2"])
    return mix.sigma_g * math.sqrt(2.0 * math.log(pk)) + mix.mu_g


def threshold_for_one(K: int, mix: StationaryMixture,
                      method: str = "closed_form") -> float:
    """Level exceeded by one user per slot on average. closed_form returns
    b_K; numeric solves 1 - F(u) = 1/K by bisection to 1e-12."""
    if method == "closed_form":
        return gumbel_constants(K, mix).b_K
    if method != "numeric":
        raise ValidationError(
            [f"method = {method!r} not in {{closed_form, numeric}}"])
    if K < 2:
        raise ValidationError([f"K = {K} must be >= 2"])
    target = 1.0 / K
    lo = min(mix.mu_g, mix.mu_b) - 10.0 * max(mix.sigma_g, mix.sigma_b)
    hi = max(mix.mu_g, mix.mu_b) + 10.0 * max(mix.sigma_g, mix.sigma_b)
    while mixture_sf(hi, mix) > target:
        hi += max(mix.sigma_g, mix.sigma_b)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mixture_sf(mid, mix) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def utilized_slot_probability(K: int, asymptotic: bool = True) -> float:
    """Probability the slot carries exactly one transmission when each of K
    users independently attempts with probability 1/K."""
    if asymptotic:
        return math.exp(-1.0)
    return (1.0 - 1.0 / K) ** (K - 1)


def distributed_capacity(K: int, mix: StationaryMixture,
                         asymptotic_slot_prob: bool = True) -> float:
    """Expected per-slot capacity of threshold scheduling at u = b_K: the
    utilized-slot probability times E[C | C > u] = u + 1/a_K. The slot
    probability defaults to its limit 1/e; the finite-K form is optional."""
    c = gumbel_constants(K, mix)
    return (utilized_slot_probability(K, asymptotic_slot_prob)
            * (c.b_K + 1.0 / c.a_K))


def _chain_stationary(alpha: float, beta: float):
    s = alpha + beta
    return np.array([beta / s, alpha / s])  # [good, bad]


def _chain_power(alpha: float, beta: float, k: int) -> np.ndarray:
    """P^k of the 2-state chain in closed form via the second eigenvalue
    1 - alpha - beta; state order [good, bad]."""
    pi = _chain_stationary(alpha, beta)
    lam2 = (1.0 - alpha - beta) ** k if k > 0 else 1.0
    limit = np.tile(pi, (2, 1))
    dev = np.array([[pi[1], -pi[1]], [-pi[0], pi[0]]])
    return limit + lam2 * dev


def mixing_bound(k: int, alpha: float, beta: float) -> float:
    """Strong-mixing coefficient bound sum_ij pi_i |(P^k)_ij - pi_j| of the
    Good-Bad chain; decays like |1 - alpha - beta|^k."""
    if k < 1:
        raise ValidationError([f"k = {k} must be >= 1"])
    pi = _chain_stationary(alpha, beta)
    pk = _chain_power(alpha, beta, k)
    return float(np.sum(pi[:, None] * np.abs(pk - pi[None, :])))


def level_for_intensity(n: int, tau: float, mix: StationaryMixture,
                        method: str = "closed_form"):
    """Level u_n whose exceedance count over n slots has mean tau:
    log(1/tau)/a_n + b_n. Returns (u_n, n * tail mass at u_n); the second
    entry should be close to tau.  method="numeric" solves
    n * (1 - F(u)) = tau exactly instead of using the asymptotic constants
    (at moderate n the closed form misses the intensity by several
    percent)."""
    if n < 2:
        raise ValidationError([f"n = {n} must be >= 2"])
    if tau <= 0:
        raise ValidationError([f"tau = {tau} must be > 0"])
    c = gumbel_constants(n, mix, method=method)
    u = math.log(1.0 / tau) / c.a_K + c.b_K
    if method == "numeric":
        target = tau / n
        lo, hi = u - 2.0, u + 2.0
        while mixture_sf(lo, mix) < target:
            lo -= 1.0
        while mixture_sf(hi, mix) > target:
            hi += 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mixture_sf(mid, mix) > target:
                lo = mid
            else:
                hi = mid
        u = 0.5 * (lo + hi)
    return u, n * mixture_sf(u, mix)


def dprime_tail_sum(n: int, k_blocks: int, tau: float,
                    mix: StationaryMixture, alpha: float,
                    beta: float) -> float:
    """Local-dependence diagnostic: n * sum_{j=2}^{floor(n/k)} of the joint
    exceedance probability of slots 1 and j at level u_n(tau), factorized
    through the state chain. Small values mean exceedances do not cluster."""
    if k_blocks < 1:
        raise ValidationError([f"k_blocks = {k_blocks} must be >= 1"])
    u, _ = level_for_intensity(n, tau, mix)
    t = np.array([normal_sf((u - mix.mu_g) / mix.sigma_g),
                  normal_sf((u - mix.mu_b) / mix.sigma_b)])
    pi = _chain_stationary(alpha, beta)
    jmax = n // k_blocks
    total = 0.0
    for j in range(2, jmax + 1):
        pk = _chain_power(alpha, beta, j - 1)
        total += float(t @ (pi[:, None] * pk) @ t)
    return n * total


def dprime_bound(k_blocks: int, tau: float, alpha: float, beta: float,
                 r_max: int = 1000) -> float:
    """Closed-form ceiling on dprime_tail_sum: tau^2 / k times the
    chain-geometry factor sum_ij (1/pi_j) max_r (P^r)_ij, r scanned to
    r_max (the 2-state powers are monotone after the first step; the scan
    is cheap insurance)."""
    pi = _chain_stationary(alpha, beta)
    best = np.zeros((2, 2))
    for r in range(1, r_max + 1):
        best = np.maximum(best, _chain_power(alpha, beta, r))
    factor = float(np.sum(best / pi[None, :]))
    return tau * tau / k_blocks * factor


def gumbel_domain_diagnostic(mix: StationaryMixture, t: float) -> float:
    """Von Mises ratio f'(t)(1 - F(t))/f(t)^2 for the stationary mixture;
    approach to -1 as t grows certifies the Gumbel domain of attraction."""
    h = 1e-6 * max(1.0, abs(t))
    fp = (mixture_pdf(t + h, mix) - mixture_pdf(t - h, mix)) / (2.0 * h)
    f = mixture_pdf(t, mix)
    if f == 0.0:
        return float("nan")
    return fp * mixture_sf(t, mix) / (f * f)

"""Constant-collision-probability decoupling for one tagged queue.

Each user's queue is treated as an M/M/1 queue whose service rate is the
threshold exceedance rate thinned by a collision probability that is itself
determined self-consistently across the population. Two closures are
offered: the large-K exponential form and the exact finite-K binomial form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import InstabilityError, ValidationError

_EPS = 1e-12


@dataclass(frozen=True)
class MeanFieldSolution:
    p_coll: float
    p_succ: float
    rho: float
    empty_prob: float
    mean_queue: float
    w_q: float
    w_s: float
    sojourn: float
    residual: float
    mode: str

    def as_dict(self) -> dict:
        return {
            "p_coll": self.p_coll,
            "p_succ": self.p_succ,
            "rho": self.rho,
            "empty_prob": self.empty_prob,
            "mean_queue": self.mean_queue,
            "w_q": self.w_q,
            "w_s": self.w_s,
            "sojourn": self.sojourn,
            "residual": self.residual,
            "mode": self.mode,
        }


def _residual(p: float, lam: float, tau: float, K, mode: str) -> float:
    """lhs - rhs of the fixed-point equation at collision probability p."""
    x = lam / (tau * (1.0 - p))
    if mode == "asymptotic":
        return p - (1.0 - math.exp(-x))
    base = 1.0 - x / K
    if base <= 0.0:
        return p - 1.0
    return p - (1.0 - base ** (K - 1))


def solve_pcoll(lam: float, tau: float, K=None,
                mode: str = "asymptotic") -> MeanFieldSolution:
    """Solve the self-consistency equation for the collision probability and
    return the decoupled-queue metrics.

    The equation can have several roots near saturation; we return the
    smallest one in [0, 1), the branch continuously connected to p_coll = 0
    at lam = 0.
    """
    errors = []
    if lam < 0:
        errors.append(f"lam = {lam} must be >= 0")
    if tau <= 0:
        errors.append(f"tau = {tau} must be > 0")
    if mode not in ("asymptotic", "exact-K"):
        errors.append(f"mode = {mode!r} not in {{asymptotic, exact-K}}")
    if mode == "exact-K" and (K is None or K < 2):
        errors.append(f"K = {K} must be >= 2 in exact-K mode")
    if errors:
        raise ValidationError(errors)

    if lam == 0.0:
        return MeanFieldSolution(0.0, 1.0, 0.0, 1.0, 0.0, 0.0,
                                 1.0 / tau, 1.0 / tau, 0.0, mode)
    if lam >= tau:
        raise InstabilityError(
            f"lam = {lam} >= tau = {tau}: no stable root exists")

    # rho < 1 requires p < 1 - lam/tau; scan that interval for the first
    # sign change, then bisect
    hi_cap = 1.0 - lam / tau - _EPS
    n_scan = 4096
    prev_p = 0.0
    prev_f = _residual(0.0, lam, tau, K, mode)
    bracket = None
    if abs(prev_f) <= _EPS:
        bracket = (0.0, 0.0)
    else:
        for i in range(1, n_scan + 1):
            p = hi_cap * i / n_scan
            f = _residual(p, lam, tau, K, mode)
            if abs(f) <= _EPS:
                bracket = (p, p)
                break
            if prev_f < 0.0 < f or f < 0.0 < prev_f:
                bracket = (prev_p, p)
                break
            prev_p, prev_f = p, f
    if bracket is None:
        raise InstabilityError(
            f"no root with rho < 1 for lam = {lam}, tau = {tau}, "
            f"mode = {mode}: arrival exceeds effective service")

    lo, hi = bracket
    for _ in range(200):
        if hi - lo <= 1e-16:
            break
        mid = 0.5 * (lo + hi)
        fm = _residual(mid, lam, tau, K, mode)
        fl = _residual(lo, lam, tau, K, mode)
        if fl <= 0.0 < fm or fm <= 0.0 < fl:
            hi = mid
        else:
            lo = mid
    p_coll = 0.5 * (lo + hi)
    res = abs(_residual(p_coll, lam, tau, K, mode))
    if res > 1e-12:
        # squeeze with Newton steps from the bisection estimate
        for _ in range(50):
            h = 1e-9
            d = (_residual(p_coll + h, lam, tau, K, mode)
                 - _residual(p_coll - h, lam, tau, K, mode)) / (2 * h)
            if d == 0:
                break
            step = _residual(p_coll, lam, tau, K, mode) / d
            p_coll -= step
            if abs(step) < 1e-16:
                break
        res = abs(_residual(p_coll, lam, tau, K, mode))

    mean_queue, sojourn, w_s, empty_prob = mm1_metrics(lam, tau, p_coll)
    rho = lam / ((1.0 - p_coll) * tau)
    return MeanFieldSolution(
        p_coll=p_coll, p_succ=1.0 - p_coll, rho=rho, empty_prob=empty_prob,
        mean_queue=mean_queue, w_q=sojourn - w_s, w_s=w_s, sojourn=sojourn,
        residual=res, mode=mode)


def mm1_metrics(lam: float, tau: float, p_coll: float):
    """M/M/1 metrics for effective service rate (1 - p_coll) * tau."""
    mu_eff = (1.0 - p_coll) * tau
    if mu_eff <= lam:
        raise InstabilityError(
            f"effective service rate {mu_eff} <= arrival rate {lam}")
    rho = lam / mu_eff
    mean_queue = rho / (1.0 - rho)
    sojourn = 1.0 / (mu_eff - lam)
    w_s = 1.0 / mu_eff
    empty_prob = 1.0 - rho
    return mean_queue, sojourn, w_s, empty_prob

"""Shared domain types, validation and probability primitives.

All rates are per-slot; the slot is the unit of time. The Gaussian CDF is
evaluated through erfc so that tail values stay accurate out to the levels
the capacity scaling formulas probe (~sqrt(2 log K) sigma).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Union

EULER_GAMMA = 0.5772156649015329


class ValidationError(ValueError):
    """One or more configuration invariants are violated."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach its tolerance."""


class InstabilityError(RuntimeError):
    """Parameters fall outside the stable region of the requested model."""


class UserStatus(IntEnum):
    IDLE = 0
    ACTIVE = 1
    BLOCKED = 2


@dataclass(frozen=True)
class BernoulliExceedance:
    """Channel whose threshold is exceeded i.i.d. with a fixed probability."""

    p_exc: float


@dataclass(frozen=True)
class GaussianIID:
    """I.i.d. Gaussian capacity compared against a fixed threshold."""

    mu: float
    sigma: float
    threshold: float

    @property
    def p_exc(self) -> float:
        return 1.0 - normal_cdf((self.threshold - self.mu) / self.sigma)


@dataclass(frozen=True)
class GilbertElliott:
    """Two-state Good-Bad channel; each state carries Gaussian capacity
    parameters (or, for the queueing models, a per-state exceedance rate
    in the mu slot)."""

    alpha: float  # Good -> Bad per slot
    beta: float   # Bad -> Good per slot
    mu_g: float
    sigma_g: float
    mu_b: float
    sigma_b: float
    threshold: float = 0.0

    @property
    def p_good(self) -> float:
        return self.beta / (self.alpha + self.beta)

    @property
    def p_bad(self) -> float:
        return self.alpha / (self.alpha + self.beta)


ChannelModel = Union[BernoulliExceedance, GaussianIID, GilbertElliott]


@dataclass(frozen=True)
class StationaryMixture:
    """Stationary two-component Gaussian mixture of a Good-Bad channel."""

    p: float
    q: float
    mu_g: float
    sigma_g: float
    mu_b: float
    sigma_b: float

    @classmethod
    def from_gilbert_elliott(cls, ch: GilbertElliott) -> "StationaryMixture":
        s = ch.alpha + ch.beta
        return cls(p=ch.beta / s, q=ch.alpha / s,
                   mu_g=ch.mu_g, sigma_g=ch.sigma_g,
                   mu_b=ch.mu_b, sigma_b=ch.sigma_b)


@dataclass(frozen=True)
class SystemConfig:
    K: int
    lambda_total: float
    slots: int = 1_000_000
    warmup: int = -1          # -1: default to 10% of horizon
    seed: int = 12345
    replications: int = 1

    @property
    def lambda_i(self) -> float:
        return self.lambda_total / self.K

    @property
    def warmup_slots(self) -> int:
        return self.slots // 10 if self.warmup < 0 else self.warmup


def normal_cdf(x: float) -> float:
    """Standard normal CDF via erfc; accurate deep into both tails."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_sf(x: float) -> float:
    """Standard normal survival function 1 - Phi(x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def mixture_cdf(x: float, mix: StationaryMixture) -> float:
    """CDF of the stationary mixture p*F_g(x) + q*F_b(x)."""
    return (mix.p * normal_cdf((x - mix.mu_g) / mix.sigma_g)
            + mix.q * normal_cdf((x - mix.mu_b) / mix.sigma_b))


def mixture_sf(x: float, mix: StationaryMixture) -> float:
    """Tail probability of the stationary mixture, erfc-based."""
    return (mix.p * normal_sf((x - mix.mu_g) / mix.sigma_g)
            + mix.q * normal_sf((x - mix.mu_b) / mix.sigma_b))


def mixture_pdf(x: float, mix: StationaryMixture) -> float:
    inv = 1.0 / math.sqrt(2.0 * math.pi)
    zg = (x - mix.mu_g) / mix.sigma_g
    zb = (x - mix.mu_b) / mix.sigma_b
    return (mix.p * inv * math.exp(-0.5 * zg * zg) / mix.sigma_g
            + mix.q * inv * math.exp(-0.5 * zb * zb) / mix.sigma_b)


def _check_prob(errors, name, value, lo=0.0, hi=1.0, strict_lo=False,
                strict_hi=False):
    bad_lo = value <= lo if strict_lo else value < lo
    bad_hi = value >= hi if strict_hi else value > hi
    if bad_lo or bad_hi:
        lo_b = "(" if strict_lo else "["
        hi_b = ")" if strict_hi else "]"
        errors.append(f"{name} = {value} not in {lo_b}{lo}, {hi}{hi_b}")


def validate_channel(ch: ChannelModel) -> list:
    errors = []
    if isinstance(ch, BernoulliExceedance):
        _check_prob(errors, "p_exc", ch.p_exc)
    elif isinstance(ch, GaussianIID):
        if ch.sigma <= 0:
            errors.append(f"sigma = {ch.sigma} must be > 0")
    elif isinstance(ch, GilbertElliott):
        _check_prob(errors, "alpha", ch.alpha, strict_lo=True)
        _check_prob(errors, "beta", ch.beta, strict_lo=True)
        if ch.sigma_g <= 0:
            errors.append(f"sigma_g = {ch.sigma_g} must be > 0")
        if ch.sigma_b <= 0:
            errors.append(f"sigma_b = {ch.sigma_b} must be > 0")
        good_dominates = (ch.sigma_g > ch.sigma_b
                          or (ch.sigma_g == ch.sigma_b and ch.mu_g > ch.mu_b))
        if ch.sigma_g > 0 and ch.sigma_b > 0 and not good_dominates:
            errors.append(
                "Good-state dominance violated: need sigma_g > sigma_b, or "
                "sigma_g == sigma_b with mu_g > mu_b")
    else:
        errors.append(f"unknown channel model {type(ch).__name__}")
    return errors


def validate_config(cfg: SystemConfig, ch: ChannelModel) -> SystemConfig:
    """Check every invariant; return the normalized config or raise
    ValidationError listing each violated field."""
    errors = []
    if cfg.K < 1:
        errors.append(f"K = {cfg.K} violates K >= 1")
    if cfg.lambda_total < 0:
        errors.append(f"lambda_total = {cfg.lambda_total} must be >= 0")
    elif cfg.K >= 1 and not (0.0 <= cfg.lambda_i < 1.0):
        errors.append(f"lambda_i = {cfg.lambda_i} not in [0, 1)")
    if cfg.slots < 1:
        errors.append(f"slots = {cfg.slots} must be >= 1")
    if cfg.warmup_slots >= cfg.slots:
        errors.append(f"warmup = {cfg.warmup_slots} must be < slots = {cfg.slots}")
    if cfg.replications < 1:
        errors.append(f"replications = {cfg.replications} must be >= 1")
    errors.extend(validate_channel(ch))
    if errors:
        raise ValidationError(errors)
    return replace(cfg, warmup=cfg.warmup_slots)

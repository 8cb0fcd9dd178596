"""Single queue with two-state Markov-modulated service.

Generating-function solution of a queue whose service rate alternates
between a Good and a Bad value driven by a two-state chain (alpha: G->B,
beta: B->G per slot). The empty-queue boundary probabilities hinge on the
admissible root z0 of a cubic; the full occupancy law follows by forward
recursion. A damped fixed point closes the loop between the collision
discount p_succ and the queue it shapes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConvergenceError, InstabilityError, ValidationError

_M_MAX_CAP = 100_000


@dataclass(frozen=True)
class ModulatedQueueSolution:
    mu_g_eff: float
    mu_b_eff: float
    mu_hat: float
    z0: float
    pi_g0: float
    pi_b0: float
    pi_table: np.ndarray = field(repr=False)  # shape (m_max+1, 2): [:,0]=g
    Qbar: float = 0.0
    W: float = 0.0
    P_t: float = 0.0
    p_succ: float = 1.0
    iterations: int = 0
    residual: float = 0.0

    def as_dict(self) -> dict:
        return {
            "mu_g_eff": self.mu_g_eff,
            "mu_b_eff": self.mu_b_eff,
            "mu_hat": self.mu_hat,
            "z0": self.z0,
            "pi_g0": self.pi_g0,
            "pi_b0": self.pi_b0,
            "Qbar": self.Qbar,
            "W": self.W,
            "P_t": self.P_t,
            "p_succ": self.p_succ,
            "iterations": self.iterations,
            "residual": self.residual,
        }


def cubic_coeffs(lam, mu_g_eff, mu_b_eff, alpha, beta):
    """Coefficients (c3, c2, c1, c0) of the characteristic cubic g(z)."""
    c3 = lam * lam
    c2 = -(alpha * lam + beta * lam + lam * lam
           + lam * mu_b_eff + lam * mu_g_eff)
    c1 = (alpha * mu_b_eff + beta * mu_g_eff + mu_g_eff * mu_b_eff
          + lam * mu_b_eff + lam * mu_g_eff)
    c0 = -mu_g_eff * mu_b_eff
    return c3, c2, c1, c0


def _g_of(coeffs, z):
    c3, c2, c1, c0 = coeffs
    return ((c3 * z + c2) * z + c1) * z + c0


def _boundary_probs(z0, lam, mu_g_eff, mu_b_eff, alpha, beta):
    mu_hat = (beta * mu_g_eff + alpha * mu_b_eff) / (alpha + beta)
    dg = mu_g_eff * (1.0 - z0) * (mu_b_eff - lam * z0)
    db = mu_b_eff * (1.0 - z0) * (mu_g_eff - lam * z0)
    if dg == 0.0 or db == 0.0:
        return float("nan"), float("nan")
    pi_g0 = beta * (mu_hat - lam) * z0 / dg
    pi_b0 = alpha * (mu_hat - lam) * z0 / db
    return pi_g0, pi_b0


def _real_roots(coeffs):
    c3, c2, c1, c0 = coeffs
    if c3 == 0.0:
        roots = np.roots([c2, c1, c0]) if c2 != 0.0 else np.array([-c0 / c1])
    else:
        roots = np.roots([c3, c2, c1, c0])
    out = []
    for r in roots:
        if abs(r.imag) <= 1e-9 * max(1.0, abs(r.real)):
            out.append(float(r.real))
    return out


def solve_z0(coeffs, lam, mu_g_eff, mu_b_eff, alpha, beta):
    """Return the real root of the cubic whose implied empty-queue
    probabilities are both valid. Boundary validity alone does not pin the
    root down (the symmetric case admits a second spurious one above 1);
    the extra requirement is z0 in (0, 1), since the in-disk zero of the
    cubic must be cancelled for the generating functions to stay analytic
    on the unit disk."""
    mu_hat = (beta * mu_g_eff + alpha * mu_b_eff) / (alpha + beta)
    if mu_hat <= lam:
        raise InstabilityError(
            f"mu_hat = {mu_hat} <= lam = {lam}: unstable modulated queue")
    c3, c2, c1, c0 = coeffs
    admissible = []
    evals = []
    for z in _real_roots(coeffs):
        pg, pb = _boundary_probs(z, lam, mu_g_eff, mu_b_eff, alpha, beta)
        evals.append((z, pg, pb))
        if (0.0 < z < 1.0 and 0.0 < pg < 1.0 and 0.0 < pb < 1.0
                and pg + pb < 1.0 + 1e-9):
            admissible.append(z)
    if len(admissible) != 1:
        raise ConvergenceError(
            f"expected exactly one admissible cubic root, found "
            f"{len(admissible)}; (root, pi_g0, pi_b0) candidates: {evals}")
    z0 = admissible[0]
    # Newton polish against the scaled residual
    scale = max(abs(c) for c in coeffs)
    for _ in range(60):
        g = _g_of(coeffs, z0)
        dgdz = (3.0 * c3 * z0 + 2.0 * c2) * z0 + c1
        if dgdz == 0.0 or abs(g) <= 1e-14 * scale:
            break
        z0 -= g / dgdz
    if abs(_g_of(coeffs, z0)) > 1e-12 * scale:
        raise ConvergenceError(f"cubic root refinement stalled at z0={z0}")
    return z0


def _recursion_table(lam, mu_g_eff, mu_b_eff, alpha, beta, pi_g0, pi_b0,
                     m_max):
    pi = np.zeros((m_max + 1, 2))
    pi[0, 0] = pi_g0
    pi[0, 1] = pi_b0
    cg = 0.0
    cb = 0.0
    for m in range(1, m_max + 1):
        cg += pi[m - 1, 0]
        cb += pi[m - 1, 1]
        pi[m, 0] = (pi[m - 1, 0] * lam + cg * alpha - cb * beta) / mu_g_eff
        pi[m, 1] = (pi[m - 1, 1] * lam + cb * beta - cg * alpha) / mu_b_eff
    return pi


def _decay_radius(coeffs, z0):
    """Modulus of the nearest singularity of the generating functions: the
    smallest cubic root above 1 (the in-disk root z0 is cancelled)."""
    others = [z for z in _real_roots(coeffs) if z > 1.0 + 1e-9]
    return min(others) if others else float("inf")


def _contour_table(lam, mu_g_eff, mu_b_eff, alpha, beta, pi_g0, pi_b0,
                   m_max, z0):
    """Coefficient extraction of the partial generating functions by FFT on
    a circle inside the dominant singularity; fallback when the forward
    recursion loses positivity to cancellation."""
    mu_hat = (beta * mu_g_eff + alpha * mu_b_eff) / (alpha + beta)
    coeffs = cubic_coeffs(lam, mu_g_eff, mu_b_eff, alpha, beta)
    n = 1
    while n < 4 * (m_max + 1):
        n *= 2
    z_decay = _decay_radius(coeffs, z0)
    r = min(0.5 * (1.0 + z_decay), 0.9 * z_decay, 1.5)
    theta = 2.0 * np.pi * np.arange(n) / n
    z = r * np.exp(1j * theta)
    g = ((coeffs[0] * z + coeffs[1]) * z + coeffs[2]) * z + coeffs[3]
    num_g = (beta * (mu_hat - lam) * z
             + pi_g0 * mu_g_eff * (1.0 - z) * (lam * z - mu_b_eff))
    num_b = (alpha * (mu_hat - lam) * z
             + pi_b0 * mu_b_eff * (1.0 - z) * (lam * z - mu_g_eff))
    cg = np.fft.fft(num_g / g) / n
    cb = np.fft.fft(num_b / g) / n
    m = np.arange(m_max + 1)
    out = np.zeros((m_max + 1, 2))
    out[:, 0] = np.real(cg[: m_max + 1]) / r ** m
    out[:, 1] = np.real(cb[: m_max + 1]) / r ** m
    return out


def steady_state(z0, lam, mu_g_eff, mu_b_eff, alpha, beta, m_max=None):
    """Boundary probabilities and the occupancy table pi[m, state] up to a
    truncation point where the geometric tail (set by the smallest cubic
    root above 1) drops below 1e-12."""
    pi_g0, pi_b0 = _boundary_probs(z0, lam, mu_g_eff, mu_b_eff, alpha, beta)
    if not (0.0 < pi_g0 < 1.0 and 0.0 < pi_b0 < 1.0):
        raise ConvergenceError(
            f"boundary probabilities out of range: pi_g0={pi_g0}, "
            f"pi_b0={pi_b0}")
    if m_max is None:
        coeffs = cubic_coeffs(lam, mu_g_eff, mu_b_eff, alpha, beta)
        z_decay = _decay_radius(coeffs, z0)
        if math.isfinite(z_decay):
            m_max = int(math.log(1e-12) / -math.log(z_decay)) + 10
        else:
            m_max = 50
        m_max = min(max(m_max, 50), _M_MAX_CAP)
    pi = _recursion_table(lam, mu_g_eff, mu_b_eff, alpha, beta,
                          pi_g0, pi_b0, m_max)
    if pi.min() < -1e-12:
        pi = _contour_table(lam, mu_g_eff, mu_b_eff, alpha, beta,
                            pi_g0, pi_b0, m_max, z0)
        if pi.min() < -1e-9:
            raise ConvergenceError(
                "occupancy recursion and contour extraction both produced "
                f"negative probabilities (min {pi.min()})")
        pi = np.clip(pi, 0.0, None)
    total = pi.sum()
    if abs(total - 1.0) > 1e-6:
        raise ConvergenceError(
            f"occupancy table mass {total} too far from 1 at m_max={m_max}")
    return pi_g0, pi_b0, pi


def metrics(z0, lam, mu_g_eff, mu_b_eff, alpha, beta, pi_g0, pi_b0):
    """Mean queue size (head-of-line packet included) and mean waiting
    time via Little's law."""
    mu_hat = (beta * mu_g_eff + alpha * mu_b_eff) / (alpha + beta)
    if mu_hat <= lam:
        raise InstabilityError(f"mu_hat = {mu_hat} <= lam = {lam}")
    qbar = (lam / (mu_hat - lam)
            + (mu_g_eff * (mu_b_eff - lam) * pi_g0
               + mu_b_eff * (mu_g_eff - lam) * pi_b0
               - (mu_g_eff - lam) * (mu_b_eff - lam))
            / ((alpha + beta) * (mu_hat - lam)))
    w = qbar / lam if lam > 0 else 0.0
    return qbar, w


def _solve_at_psucc(lam, mu_g, mu_b, alpha, beta, p_succ):
    mg = mu_g * p_succ
    mb = mu_b * p_succ
    coeffs = cubic_coeffs(lam, mg, mb, alpha, beta)
    z0 = solve_z0(coeffs, lam, mg, mb, alpha, beta)
    pi_g0, pi_b0, pi = steady_state(z0, lam, mg, mb, alpha, beta)
    return mg, mb, z0, pi_g0, pi_b0, pi


def solve_model3(K, lambda_i, mu_g, mu_b, alpha, beta,
                 tol=1e-10, max_iter=500,
                 p_succ_init=1.0) -> ModulatedQueueSolution:
    """Self-consistent solution: the collision discount p_succ scales both
    service rates, the resulting queue sets the attempt probability P_t,
    and p_succ = (1 - P_t)^(K-1) closes the loop (damping 0.5)."""
    errors = []
    if K < 1:
        errors.append(f"K = {K} must be >= 1")
    if lambda_i < 0:
        errors.append(f"lambda_i = {lambda_i} must be >= 0")
    if mu_g <= 0 or mu_b <= 0:
        errors.append(f"service rates must be > 0 (got {mu_g}, {mu_b})")
    if alpha <= 0 or beta <= 0:
        errors.append(f"alpha, beta must be > 0 (got {alpha}, {beta})")
    if errors:
        raise ValidationError(errors)
    p_g = beta / (alpha + beta)
    if p_g * mu_g + (1.0 - p_g) * mu_b <= lambda_i:
        raise InstabilityError(
            "unstable even without collisions: "
            f"stationary service rate <= lambda_i = {lambda_i}")

    pe_g = 1.0 - math.exp(-mu_g)
    pe_b = 1.0 - math.exp(-mu_b)
    gg1 = beta / (alpha + beta)
    gb1 = alpha / (alpha + beta)

    p_succ = p_succ_init
    residual = float("inf")
    last = None
    for it in range(1, max_iter + 1):
        try:
            mg, mb, z0, pi_g0, pi_b0, pi = _solve_at_psucc(
                lambda_i, mu_g, mu_b, alpha, beta, p_succ)
        except InstabilityError as exc:
            raise InstabilityError(
                f"unstable under self-consistent collisions at "
                f"p_succ={p_succ}: {exc}") from exc
        p_t = (gg1 - pi_g0) * pe_g + (gb1 - pi_b0) * pe_b
        target = (1.0 - p_t) ** (K - 1) if K > 1 else 1.0
        residual = abs(target - p_succ)
        last = (mg, mb, z0, pi_g0, pi_b0, pi, p_t)
        if residual <= tol:
            p_succ = target
            break
        p_succ = 0.5 * p_succ + 0.5 * target
    else:
        raise ConvergenceError(
            f"collision fixed point not converged after {max_iter} "
            f"iterations, residual {residual}")

    mg, mb, z0, pi_g0, pi_b0, pi, p_t = last
    qbar, w = metrics(z0, lambda_i, mg, mb, alpha, beta, pi_g0, pi_b0)
    mu_hat = (beta * mg + alpha * mb) / (alpha + beta)
    return ModulatedQueueSolution(
        mu_g_eff=mg, mu_b_eff=mb, mu_hat=mu_hat, z0=z0,
        pi_g0=pi_g0, pi_b0=pi_b0, pi_table=pi, Qbar=qbar, W=w,
        P_t=p_t, p_succ=p_succ, iterations=it, residual=residual)

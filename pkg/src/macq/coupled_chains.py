"""Coupled status/queue chain approximation of the interacting queues.

The system-status chain tracks every user's Idle/Active/Blocked label (at
most one Active); its transition matrix is built by exact micro-event
enumeration of arrivals, exceedances and the collision outcome. The
per-user queue chain supplies the auxiliary residual-queue probabilities
P(1|1) and P(0|2) that the status chain needs, and consumes the averaged
success probabilities (P_I, P_A, P_B) the status chain produces; the two
are closed by Wegstein-accelerated fixed-point iteration.

Status encoding: a state is a base-3 integer with digit i holding user i's
status (0 Idle, 1 Active, 2 Blocked).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit

from .core import (ConvergenceError, InstabilityError, UserStatus,
                   ValidationError)

K_MAX = 12


@dataclass(frozen=True)
class QueueBoundary:
    pi00: float
    pi10: float
    pi11: float
    G0_at_1: float
    G1_at_1: float
    P_1given1: float
    P_0given2: float


@dataclass(frozen=True)
class ModelISolution:
    P_I: float
    P_A: float
    P_B: float
    boundary: QueueBoundary
    L: float
    W_q: float
    W_s: float
    D: float
    blocked_prob: float
    p_succ: float
    iterations: int
    residual: float

    def as_dict(self) -> dict:
        return {
            "P_I": self.P_I, "P_A": self.P_A, "P_B": self.P_B,
            "pi00": self.boundary.pi00, "pi10": self.boundary.pi10,
            "pi11": self.boundary.pi11,
            "G0_at_1": self.boundary.G0_at_1,
            "G1_at_1": self.boundary.G1_at_1,
            "P_1given1": self.boundary.P_1given1,
            "P_0given2": self.boundary.P_0given2,
            "L": self.L, "W_q": self.W_q, "W_s": self.W_s, "D": self.D,
            "blocked_prob": self.blocked_prob, "p_succ": self.p_succ,
            "iterations": self.iterations, "residual": self.residual,
        }


def state_count(K: int) -> int:
    return (2 ** (K - 1)) * (K + 2)


def enumerate_states(K: int) -> np.ndarray:
    """All status vectors with at most one Active user, as an array of
    shape (n_states, K); row order fixed by ascending base-3 code."""
    if not (2 <= K <= K_MAX):
        raise ValidationError(
            [f"K = {K} outside supported range [2, {K_MAX}] for full "
             f"status-chain enumeration"])
    digits = np.indices((3,) * K).reshape(K, -1).T[:, ::-1]
    keep = (digits == UserStatus.ACTIVE).sum(axis=1) <= 1
    states = digits[keep].astype(np.int8)
    expected = state_count(K)
    if states.shape[0] != expected:
        raise AssertionError(
            f"enumeration produced {states.shape[0]} states, "
            f"expected {expected}")
    return states


def _codes_and_index(states: np.ndarray, K: int):
    pow3 = 3 ** np.arange(K, dtype=np.int64)
    codes = states.astype(np.int64) @ pow3
    idx_of_code = np.full(3 ** K, -1, dtype=np.int64)
    idx_of_code[codes] = np.arange(len(codes))
    return codes, idx_of_code


@njit(cache=True)
def _build_kernel(states, idx_of_code, pow3, lam, p, p11, p02,
                  rows, cols, vals):
    n_states, K = states.shape
    pos = 0
    for s in range(n_states):
        idle = np.empty(K, np.int64)
        elig = np.empty(K, np.int64)  # blocked then active
        m = 0
        ne = 0
        base_fixed = 0  # dest code digits of non-idle users (all -> 2)
        for u in range(K):
            st = states[s, u]
            if st == 0:
                idle[m] = u
                m += 1
            else:
                elig[ne] = u
                ne += 1
                base_fixed += 2 * pow3[u]
        for w_mask in range(1 << m):
            # arrival pattern over idle users; arriving users join the
            # eligible-transmitter set and default to Blocked
            prob_w = 1.0
            n_tx = ne
            base = base_fixed
            for b in range(m):
                u = idle[b]
                if w_mask & (1 << b):
                    prob_w *= lam[u]
                    elig[n_tx] = u
                    n_tx += 1
                    base += 2 * pow3[u]
                else:
                    prob_w *= 1.0 - lam[u]
            if prob_w == 0.0:
                continue
            # exactly-one-transmitter probabilities, zero-aware
            prod_pbar = 1.0
            n_zero = 0
            zero_at = -1
            for e in range(n_tx):
                pb = 1.0 - p[elig[e]]
                if pb == 0.0:
                    n_zero += 1
                    zero_at = e
                else:
                    prod_pbar *= pb
            succ_total = 0.0
            for e in range(n_tx):
                u = elig[e]
                if n_zero == 0:
                    sp_ = p[u] * prod_pbar / (1.0 - p[u])
                elif n_zero == 1:
                    sp_ = prod_pbar if e == zero_at else 0.0
                else:
                    sp_ = 0.0
                succ_total += sp_
                if sp_ == 0.0:
                    continue
                st = states[s, u]
                if st == 0:
                    # fresh single packet served: back to Idle
                    rows[pos] = s
                    cols[pos] = idx_of_code[base - 2 * pow3[u]]
                    vals[pos] = prob_w * sp_
                    pos += 1
                else:
                    if st == 2:
                        to_active = (1.0 - p02[u]) + lam[u] * p02[u]
                        to_idle = (1.0 - lam[u]) * p02[u]
                    else:
                        to_active = p11[u] + lam[u] * (1.0 - p11[u])
                        to_idle = (1.0 - lam[u]) * (1.0 - p11[u])
                    rows[pos] = s
                    cols[pos] = idx_of_code[base - pow3[u]]
                    vals[pos] = prob_w * sp_ * to_active
                    pos += 1
                    rows[pos] = s
                    cols[pos] = idx_of_code[base - 2 * pow3[u]]
                    vals[pos] = prob_w * sp_ * to_idle
                    pos += 1
            no_succ = 1.0 - succ_total
            if no_succ != 0.0:
                rows[pos] = s
                cols[pos] = idx_of_code[base]
                vals[pos] = prob_w * no_succ
                pos += 1
    return pos


def _as_vector(x, K: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(K, float(arr))
    if arr.shape != (K,):
        raise ValidationError([f"parameter vector shape {arr.shape} != ({K},)"])
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValidationError([f"probabilities out of [0, 1]: {arr}"])
    return arr


def build_transition_matrix(K, lambda_i, p_exc, P_1given1,
                            P_0given2) -> sp.csr_matrix:
    """Row-stochastic transition matrix of the status chain by micro-event
    enumeration (arrival pattern x exceedance outcome x residual-queue
    branch of the successful user)."""
    states = enumerate_states(K)
    codes, idx_of_code = _codes_and_index(states, K)
    lam = _as_vector(lambda_i, K)
    p = _as_vector(p_exc, K)
    p11 = _as_vector(P_1given1, K)
    p02 = _as_vector(P_0given2, K)
    pow3 = 3 ** np.arange(K, dtype=np.int64)

    m_per = (states == 0).sum(axis=1).astype(np.int64)
    ntx_per = K - m_per  # eligible before arrivals
    # per arrival mask: 1 no-success entry + 1 per idle success + 2 per
    # blocked/active success; sum over masks in closed form
    cap = int(np.sum(2 ** m_per * (1 + 2 * ntx_per)
                     + m_per * 2 ** np.maximum(m_per - 1, 0) * 3))
    rows = np.empty(cap, dtype=np.int64)
    cols = np.empty(cap, dtype=np.int64)
    vals = np.empty(cap, dtype=np.float64)
    n = _build_kernel(states, idx_of_code, pow3, lam, p, p11, p02,
                      rows, cols, vals)
    mat = sp.coo_matrix((vals[:n], (rows[:n], cols[:n])),
                        shape=(len(states), len(states))).tocsr()
    row_sums = np.asarray(mat.sum(axis=1)).ravel()
    worst = int(np.argmax(np.abs(row_sums - 1.0)))
    if abs(row_sums[worst] - 1.0) > 1e-12:
        raise AssertionError(
            f"row {worst} (status {states[worst].tolist()}) sums to "
            f"{row_sums[worst]!r}")
    return mat


def stationary_distribution(mat: sp.csr_matrix, tol: float = 1e-12,
                            max_iter: int = 200_000) -> np.ndarray:
    """Left fixed vector of a row-stochastic matrix: dense solve for small
    chains, power iteration above 4096 states."""
    n = mat.shape[0]
    if n <= 4096:
        dense = mat.toarray()
        a = dense.T - np.eye(n)
        a[-1, :] = 1.0
        b = np.zeros(n)
        b[-1] = 1.0
        pi = np.linalg.solve(a, b)
        resid = np.max(np.abs(pi @ dense - pi))
        if resid > 1e-10 or pi.min() < -1e-10:
            raise ConvergenceError(
                f"dense stationary solve failed: residual {resid}, "
                f"min {pi.min()} (reducible or ill-conditioned chain)")
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum()
    pi = np.full(n, 1.0 / n)
    mt = mat.T.tocsr()
    for _ in range(max_iter):
        nxt = mt @ pi
        nxt /= nxt.sum()
        if np.max(np.abs(mt @ nxt - nxt)) <= tol:
            return nxt
        pi = nxt
    raise ConvergenceError(
        f"power iteration did not reach {tol} in {max_iter} steps")


def avg_success_probs(states: np.ndarray, pi: np.ndarray, lambda_i: float,
                      p_exc: float, user: int = 0):
    """Success probability of a tagged user conditioned on its own status,
    averaged over the other users' statuses under the stationary law. An
    interfering user stays quiet with probability 1 - p_exc if backlogged
    and lam*(1 - p_exc) + (1 - lam) if idle; the Idle numerator keeps the
    lam * p_exc joint factor of arrival-and-exceedance."""
    K = states.shape[1]
    others = [j for j in range(K) if j != user]
    w = np.where(states[:, others] == 0,
                 lambda_i * (1.0 - p_exc) + (1.0 - lambda_i),
                 1.0 - p_exc)
    clear = np.prod(w, axis=1)
    out = []
    for status, factor in ((UserStatus.IDLE, lambda_i * p_exc),
                           (UserStatus.ACTIVE, p_exc),
                           (UserStatus.BLOCKED, p_exc)):
        sel = states[:, user] == status
        marginal = pi[sel].sum()
        if marginal <= 0.0:
            raise ConvergenceError(
                f"status {int(status)} has zero stationary mass; "
                "conditional success probability undefined")
        out.append(factor * float(pi[sel] @ clear[sel]) / marginal)
    p_i, p_a, p_b = out
    return p_i, p_a, p_b


def queue_boundary(lambda_i: float, P_I: float, P_A: float,
                   P_B: float) -> QueueBoundary:
    """Closed-form boundary masses of the per-user queue chain and the
    residual-queue probabilities derived from them."""
    lam = lambda_i
    lbar = 1.0 - lam
    d1 = lbar * P_B - lam * (P_I - P_A)
    d2 = lbar * P_B - lam * (1.0 - P_A)
    if d1 <= 0.0 or d2 < 0.0:
        raise InstabilityError(
            "unstable parameter region: need (1-lam)*P_B - lam*(P_I-P_A) "
            f"> 0 (got {d1}) and (1-lam)*P_B - lam*(1-P_A) >= 0 (got {d2})")
    pi10 = d2 / d1
    denom = lam * P_A + lbar * P_B
    pi00 = (lam * (1.0 - P_I) / denom) * pi10 if denom > 0 else 0.0
    pi11 = (lam / lbar) * pi00
    g0 = lam * lbar * (1.0 - P_I) / d1
    g1 = lam + lbar * pi10
    unblocked = g1 - pi10
    p11 = 1.0 - pi11 / unblocked if unblocked > 0 else 0.0
    p02 = pi00 / g0 if g0 > 0 else 0.0
    return QueueBoundary(pi00=pi00, pi10=pi10, pi11=pi11, G0_at_1=g0,
                         G1_at_1=g1, P_1given1=p11, P_0given2=p02)


def _metrics(K, lam, bnd, P_I, P_A, P_B):
    lbar = 1.0 - lam
    g1 = bnd.G1_at_1
    pi10 = bnd.pi10
    attempt_mass = lam * pi10 + (g1 - pi10)
    blocked_prob = 1.0 - (pi10 * P_I + (g1 - pi10) * P_A) / attempt_mass
    w_s = blocked_prob / P_B
    d1 = lbar * P_B - lam * (P_I - P_A)
    d2 = lbar * P_B - lam * (1.0 - P_A)
    L = lam * lam * lbar * (1.0 - P_I) / (d2 * d1) if lam > 0 else 0.0
    w_q = L / lam if lam > 0 else 0.0
    num = P_A * (g1 - pi10) + P_I * pi10 + P_B * bnd.G0_at_1
    p_succ = num / ((1.0 / K) * (1.0 - lbar * pi10))
    return blocked_prob, w_s, L, w_q, p_succ


def solve_model1(K: int, lambda_i: float, p_exc: float, tol: float = 1e-10,
                 max_iter: int = 1000, x0=(0.5, 0.5)) -> ModelISolution:
    """Close the status/queue coupling: iterate
    (P(1|1), P(0|2)) -> status chain -> (P_I, P_A, P_B) -> queue boundary
    -> (P(1|1), P(0|2)) with per-coordinate Wegstein acceleration
    (acceleration factor clamped to [-5, 0.5], damped fallback)."""
    errors = []
    if not (2 <= K <= K_MAX):
        errors.append(f"K = {K} outside [2, {K_MAX}]")
    if not (0.0 <= lambda_i < 1.0):
        errors.append(f"lambda_i = {lambda_i} not in [0, 1)")
    if not (0.0 < p_exc <= 1.0):
        errors.append(f"p_exc = {p_exc} not in (0, 1]")
    if errors:
        raise ValidationError(errors)

    states = enumerate_states(K)

    def step(x):
        mat = build_transition_matrix(K, lambda_i, p_exc, x[0], x[1])
        pi = stationary_distribution(mat)
        p_i, p_a, p_b = avg_success_probs(states, pi, lambda_i, p_exc)
        bnd = queue_boundary(lambda_i, p_i, p_a, p_b)
        return (np.array([bnd.P_1given1, bnd.P_0given2]),
                (p_i, p_a, p_b), bnd)

    x_prev = np.array(x0, dtype=float)
    f_prev, probs, bnd = step(x_prev)
    residual = float(np.max(np.abs(f_prev - x_prev)))
    x = f_prev.copy()
    it = 1
    stall = 0
    best = residual
    for it in range(2, max_iter + 1):
        f, probs, bnd = step(x)
        residual = float(np.max(np.abs(f - x)))
        if residual <= tol:
            x = f
            break
        if residual < best - tol * 0.1:
            best = residual
            stall = 0
        else:
            stall += 1
            if stall >= 50:
                raise ConvergenceError(
                    f"fixed point stalled at residual {residual} after "
                    f"{it} iterations (best {best})")
        x_new = np.empty(2)
        for c in range(2):
            dx = x[c] - x_prev[c]
            if abs(dx) > 1e-14:
                slope = (f[c] - f_prev[c]) / dx
                if abs(slope - 1.0) > 1e-12:
                    q = slope / (slope - 1.0)
                else:
                    q = 0.5
            else:
                q = 0.0
            q = min(0.5, max(-5.0, q))
            x_new[c] = q * x[c] + (1.0 - q) * f[c]
        x_new = np.clip(x_new, 0.0, 1.0)
        x_prev, f_prev = x, f
        x = x_new
    else:
        raise ConvergenceError(
            f"no convergence after {max_iter} iterations, "
            f"residual {residual}")

    p_i, p_a, p_b = probs
    blocked_prob, w_s, L, w_q, p_succ = _metrics(K, lambda_i, bnd,
                                                 p_i, p_a, p_b)
    return ModelISolution(
        P_I=p_i, P_A=p_a, P_B=p_b, boundary=bnd, L=L, W_q=w_q, W_s=w_s,
        D=w_q + w_s + 1.0, blocked_prob=blocked_prob, p_succ=p_succ,
        iterations=it, residual=residual)

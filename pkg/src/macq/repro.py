"""Canned experiment scenarios with side-by-side analytic/simulated columns.

Each scenario returns a ReproResult: a CSV-ready header, data rows, and an
overall pass flag evaluated at the documented tolerance.  The CLI renders
them; the acceptance tests call them directly.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from . import coupled_chains, evt, gilbert_queue, meanfield, sim
from .core import (BernoulliExceedance, GaussianIID, GilbertElliott,
                   StationaryMixture, SystemConfig, ValidationError)

# Total arrival rate used by the stressed-regime scenarios: just below the
# 1/e saturation point of the slotted random-access system.
LAMBDA_NEAR_SAT = (1.0 / math.e) * 0.999


@dataclass
class ReproResult:
    repro_id: str
    header: list
    rows: list
    passed: bool
    notes: dict = field(default_factory=dict)
    runtime_s: float = 0.0


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b != 0 else float("inf")


def model1_vs_sim(seed: int = 12345, slots: int = 1_000_000,
                  replications: int = 8, K: int | None = None) -> ReproResult:
    """Coupled-chain queue metrics vs simulation for K = 2..Kmax at the
    near-saturation total load; pass = within 10% or 3 half-widths."""
    t0 = time.time()
    k_max = 7 if K is None else K
    if not (2 <= k_max <= coupled_chains.K_MAX):
        raise ValidationError(
            [f"K = {k_max} must be in [2, {coupled_chains.K_MAX}]"])
    header = ["K", "L_model", "L_sim", "hw_L", "L_ok",
              "W_q_model", "W_q_sim", "hw_W_q", "W_q_ok",
              "W_s_model", "W_s_sim", "hw_W_s", "W_s_ok"]
    rows = []
    all_ok = True
    for k in range(2, k_max + 1):
        sol = coupled_chains.solve_model1(k, LAMBDA_NEAR_SAT / k, 1.0 / k)
        cfg = SystemConfig(K=k, lambda_total=LAMBDA_NEAR_SAT, slots=slots,
                           replications=replications, seed=seed)
        rep = sim.run_sim(cfg, BernoulliExceedance(1.0 / k))
        row = [k]
        for model_v, sim_v, hw in (
                (sol.L, rep.mean_queue_len, rep.half_widths["mean_queue_len"]),
                (sol.W_q, rep.w_q, rep.half_widths["w_q"]),
                (sol.W_s, rep.w_s, rep.half_widths["w_s"])):
            ok = (_rel(model_v, sim_v) <= 0.10
                  or abs(model_v - sim_v) <= 3.0 * hw)
            all_ok = all_ok and ok
            row += [model_v, sim_v, hw, ok]
        rows.append(tuple(row))
    return ReproResult("model1-vs-sim", header, rows, all_ok,
                       notes={"lambda_total": LAMBDA_NEAR_SAT,
                              "tolerance": "10% relative or 3 half-widths"},
                       runtime_s=time.time() - t0)


def psucc_compare(seed: int = 12345, slots: int = 1_000_000,
                  replications: int = 2, K: int | None = None) -> ReproResult:
    """Per-attempt success probability: coupled-chain model vs decoupled
    fixed point vs simulation, K = 2..Kmax; pass = model gap <= 2.5%."""
    t0 = time.time()
    k_max = 10 if K is None else K
    if not (2 <= k_max <= coupled_chains.K_MAX):
        raise ValidationError(
            [f"K = {k_max} must be in [2, {coupled_chains.K_MAX}]"])
    header = ["K", "p_succ_model1", "p_succ_model2", "p_succ_sim",
              "gap12_pct", "gap12_ok"]
    rows = []
    for k in range(2, k_max + 1):
        m1 = coupled_chains.solve_model1(k, LAMBDA_NEAR_SAT / k, 1.0 / k)
        m2 = meanfield.solve_pcoll(LAMBDA_NEAR_SAT / k, 1.0 / k, K=k,
                                   mode="exact-K")
        cfg = SystemConfig(K=k, lambda_total=LAMBDA_NEAR_SAT, slots=slots,
                           replications=replications, seed=seed)
        rep = sim.run_sim(cfg, BernoulliExceedance(1.0 / k))
        gap = _rel(m1.p_succ, m2.p_succ) * 100.0
        rows.append((k, m1.p_succ, m2.p_succ, rep.p_succ_given_attempt,
                     gap, gap <= 2.5))
    # the models provably diverge at very small K; the documented
    # consistency claim is anchored at K >= 7
    anchored = [r for r in rows if r[0] >= 7] or [rows[-1]]
    passed = all(r[5] for r in anchored)
    return ReproResult("psucc-compare", header, rows, passed,
                       notes={"lambda_total": LAMBDA_NEAR_SAT,
                              "tolerance": "model1 vs model2 gap <= 2.5% "
                              "for K >= 7"},
                       runtime_s=time.time() - t0)


def service_time(seed: int = 12345, slots: int = 1_000_000,
                 replications: int = 4, K: int | None = None) -> ReproResult:
    """Decoupled-model expected service time vs simulation at moderate load
    (lambda_T = 0.3) for K in {10, 20, 50}; pass = within 10%."""
    t0 = time.time()
    ks = (10, 20, 50) if K is None else (K,)
    lam_t = 0.3
    header = ["K", "W_s_model", "W_s_sim", "hw_W_s", "rel_err_pct", "ok"]
    rows = []
    all_ok = True
    for k in ks:
        m2 = meanfield.solve_pcoll(lam_t / k, 1.0 / k, K=k, mode="exact-K")
        cfg = SystemConfig(K=k, lambda_total=lam_t, slots=slots,
                           replications=replications, seed=seed)
        rep = sim.run_sim(cfg, BernoulliExceedance(1.0 / k))
        ws_sim = rep.w_s
        err = _rel(m2.w_s, ws_sim)
        ok = err <= 0.10
        all_ok = all_ok and ok
        rows.append((k, m2.w_s, ws_sim, rep.half_widths["w_s"],
                     err * 100.0, ok))
    return ReproResult("service-time", header, rows, all_ok,
                       notes={"lambda_total": lam_t,
                              "tolerance": "10% relative"},
                       runtime_s=time.time() - t0)


def threshold_sweep(seed: int = 12345, slots: int = 1_000_000,
                    replications: int = 2, K: int | None = None,
                    grid=None) -> ReproResult:
    """Throughput/delay across exceedance probabilities at K = 50,
    lambda_T = 0.35.  Pass = the 1/K operating point achieves >= 95% of the
    grid-maximum throughput and delay blows up (>= 10x the plateau) at both
    overly selective and overly permissive thresholds."""
    t0 = time.time()
    k = 50 if K is None else K
    lam_t = 0.35
    if grid is None:
        grid = [0.005 + 0.0025 * i for i in range(23)]
    cfg = SystemConfig(K=k, lambda_total=lam_t, slots=slots,
                       replications=replications, seed=seed)
    pts = sim.sweep_threshold(cfg, BernoulliExceedance(0.5), grid)
    header = ["p_exc", "throughput", "mean_delay", "avg_backlogged"]
    rows = [(p, thr, dly, nb) for (p, thr, dly, nb, _) in pts]
    thr = {p: t for (p, t, _, _, _) in pts}
    dly = {p: d for (p, _, d, _, _) in pts}
    p_op = min(grid, key=lambda p: abs(p - 1.0 / k))
    thr_max = float(max(thr.values()))
    plateau = float(min(dly.values()))
    thr_ok = bool(thr[p_op] >= 0.95 * thr_max)
    low_ok = all(dly[p] >= 10.0 * plateau for p in grid if p <= 0.010)
    high_ok = all(dly[p] >= 10.0 * plateau for p in grid if p >= 0.035)
    passed = thr_ok and low_ok and high_ok
    notes = {"K": k, "lambda_total": lam_t, "operating_p_exc": p_op,
             "throughput_at_operating": float(thr[p_op]),
             "throughput_max": thr_max, "delay_plateau": plateau,
             "throughput_ok": thr_ok, "delay_low_ok": low_ok,
             "delay_high_ok": high_ok}
    return ReproResult("threshold-sweep", header, rows, passed, notes=notes,
                       runtime_s=time.time() - t0)


def _gilbert_cells(seed, slots, replications, K):
    ks = (10, 50, 150) if K is None else (K,)
    for lam_t in (0.1, 0.3):
        for k in ks:
            sol = gilbert_queue.solve_model3(k, lam_t / k, 0.7 / k, 0.5 / k,
                                             0.1, 0.1)
            ch = GilbertElliott(alpha=0.1, beta=0.1, mu_g=0.7 / k,
                                sigma_g=1.0, mu_b=0.5 / k, sigma_b=0.5)
            cfg = SystemConfig(K=k, lambda_total=lam_t, slots=slots,
                               replications=replications, seed=seed)
            rep = sim.run_sim(cfg, ch)
            yield lam_t, k, sol, rep


def gilbert_psucc(seed: int = 12345, slots: int = 1_000_000,
                  replications: int = 4, K: int | None = None) -> ReproResult:
    """Burst-channel self-consistent success probability vs simulation;
    pass = within 5%."""
    t0 = time.time()
    header = ["lambda_total", "K", "p_succ_model", "p_succ_sim",
              "rel_err_pct", "ok"]
    rows = []
    all_ok = True
    for lam_t, k, sol, rep in _gilbert_cells(seed, slots, replications, K):
        err = _rel(sol.p_succ, rep.p_succ_given_attempt)
        ok = err <= 0.05
        all_ok = all_ok and ok
        rows.append((lam_t, k, sol.p_succ, rep.p_succ_given_attempt,
                     err * 100.0, ok))
    return ReproResult("gilbert-psucc", header, rows, all_ok,
                       notes={"alpha": 0.1, "beta": 0.1,
                              "tolerance": "5% relative"},
                       runtime_s=time.time() - t0)


def gilbert_queue_repro(seed: int = 12345, slots: int = 1_000_000,
                        replications: int = 4,
                        K: int | None = None) -> ReproResult:
    """Burst-channel mean queue length and waiting time vs simulation;
    pass = within 10%.  The analytic Qbar counts the head-of-line packet, so
    the simulated comparison adds the busy fraction to the waiting count."""
    t0 = time.time()
    header = ["lambda_total", "K", "Qbar_model", "Qbar_sim", "Q_err_pct",
              "Q_ok", "W_model", "W_sim", "W_err_pct", "W_ok"]
    rows = []
    all_ok = True
    for lam_t, k, sol, rep in _gilbert_cells(seed, slots, replications, K):
        qbar_sim = rep.mean_queue_len + rep.avg_backlogged / k
        w_sim = qbar_sim / (lam_t / k)
        q_err = _rel(sol.Qbar, qbar_sim)
        w_err = _rel(sol.W, w_sim)
        q_ok = q_err <= 0.10
        w_ok = w_err <= 0.10
        all_ok = all_ok and q_ok and w_ok
        rows.append((lam_t, k, sol.Qbar, qbar_sim, q_err * 100.0, q_ok,
                     sol.W, w_sim, w_err * 100.0, w_ok))
    return ReproResult("gilbert-queue", header, rows, all_ok,
                       notes={"alpha": 0.1, "beta": 0.1,
                              "tolerance": "10% relative"},
                       runtime_s=time.time() - t0)


def maxcap_gumbel(seed: int = 12345, slots: int = 10_000,
                  replications: int = 1, K: int | None = None) -> ReproResult:
    """Sampled per-slot maximum capacity vs the extreme-value prediction at
    K = 5000 with an even Good/Bad split; `slots` is the number of sampled
    maxima.  Pass = sample mean within 2% of b_K + gamma/a_K and
    Kolmogorov-Smirnov distance of the normalized maxima < 0.05, in both the
    i.i.d.-state and evolving-state sampling modes."""
    t0 = time.time()
    k = 5000 if K is None else K
    n = slots
    ch = GilbertElliott(alpha=0.5, beta=0.5, mu_g=math.sqrt(2.0),
                        sigma_g=0.5, mu_b=0.0, sigma_b=0.25)
    mix = StationaryMixture.from_gilbert_elliott(ch)
    c = evt.gumbel_constants(k, mix)
    # the prediction uses the printed closed-form constants; the KS
    # normalization uses the numerically calibrated pair, which converges
    # faster and measures distributional shape rather than centering error
    cn = evt.gumbel_constants(k, mix, method="numeric")
    predicted = evt.expected_max(k, mix)
    header = ["mode", "n_samples", "sample_mean", "predicted_mean",
              "mean_err_pct", "mean_ok", "ks_distance", "ks_ok"]
    rows = []
    all_ok = True
    for mode in ("stationary", "evolving"):
        m = sim.sample_max_capacity(k, ch, n, mode=mode, seed=seed)
        mean_err = _rel(float(m.mean()), predicted)
        z = cn.a_K * (m - cn.b_K)
        ks = float(sps.kstest(z, "gumbel_r").statistic)
        mean_ok = mean_err <= 0.02
        ks_ok = ks < 0.05
        all_ok = all_ok and mean_ok and ks_ok
        rows.append((mode, n, float(m.mean()), predicted, mean_err * 100.0,
                     mean_ok, ks, ks_ok))
    return ReproResult("maxcap-gumbel", header, rows, all_ok,
                       notes={"K": k, "a_K": c.a_K, "b_K": c.b_K},
                       runtime_s=time.time() - t0)


def poisson_table(seed: int = 12345, slots: int = 10_000,
                  replications: int = 20_000,
                  K: int | None = None) -> ReproResult:
    """Empirical pmf of the exceedance count over blocks of n = `slots`
    i.i.d. standard-Gaussian draws at the level tuned for mean intensity
    tau = -ln(0.3961), next to the Poisson(tau) pmf; `replications` is the
    number of blocks.  Pass = absolute error <= 0.01 for k = 0..5."""
    t0 = time.time()
    n = slots
    blocks = replications
    tau = -math.log(0.3961)
    mix = StationaryMixture(p=1.0, q=0.0, mu_g=0.0, sigma_g=1.0,
                            mu_b=0.0, sigma_b=1.0)
    u, achieved = evt.level_for_intensity(n, tau, mix, method="numeric")
    ch = GaussianIID(mu=0.0, sigma=1.0, threshold=u)
    pmf = sim.count_exceedances(n, tau, ch, blocks, seed=seed)
    header = ["k", "empirical", "poisson", "abs_err", "ok"]
    rows = []
    all_ok = True
    for j in range(8):
        emp = float(pmf[j]) if j < len(pmf) else 0.0
        ref = math.exp(-tau) * tau ** j / math.factorial(j)
        err = abs(emp - ref)
        ok = err <= 0.01 or j > 5
        all_ok = all_ok and ok
        rows.append((j, emp, ref, err, ok))
    return ReproResult("poisson-table", header, rows, all_ok,
                       notes={"n": n, "blocks": blocks, "tau": tau,
                              "level": u, "n_times_tail": achieved},
                       runtime_s=time.time() - t0)


REPROS = {
    "model1-vs-sim": model1_vs_sim,
    "psucc-compare": psucc_compare,
    "service-time": service_time,
    "threshold-sweep": threshold_sweep,
    "gilbert-psucc": gilbert_psucc,
    "gilbert-queue": gilbert_queue_repro,
    "maxcap-gumbel": maxcap_gumbel,
    "poisson-table": poisson_table,
}


def run_repro(repro_id: str, **kwargs) -> ReproResult:
    if repro_id not in REPROS:
        raise ValidationError(
            [f"unknown repro id {repro_id!r}; known ids: "
             + ", ".join(sorted(REPROS))])
    return REPROS[repro_id](**kwargs)

"""Slotted simulator of K interdependent FIFO queues on one collision channel.

Per-slot semantics, in order: arrivals (Bernoulli per user), channel
evaluation (Gilbert-Elliott advances its state chain first), transmission by
every backlogged user whose channel exceeds the threshold, then collision
resolution (exactly one transmitter succeeds).

Randomness is counter-based: every uniform is a hash of
(seed, user, slot, purpose), so a threshold sweep reuses the identical
arrival and channel draws at each grid point and runs are bit-reproducible.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import stats

from .core import (BernoulliExceedance, ChannelModel, GaussianIID,
                   GilbertElliott, StationaryMixture, SystemConfig,
                   mixture_sf, validate_config)

_DELAY_CAP = 1 << 16  # per-user FIFO tracking buffer; overflow disables
                      # delay tracking for that user (dynamics stay exact)


def worker_count() -> int:
    n = os.cpu_count() or 1
    cap = os.environ.get("MACQ_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _u01(seed, user, slot, purpose):
    z = (seed
         + np.uint64(user) * np.uint64(0x9E3779B97F4A7C15)
         + np.uint64(slot) * np.uint64(0xC2B2AE3D27D4EB4F)
         + np.uint64(purpose) * np.uint64(0x165667B19E3779F9))
    z = _mix64(_mix64(z))
    return (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _run_kernel(K, lam_i, slots, warmup, chan_kind, p_exc, p_g, p_b,
                alpha, beta, p_good, seed, trace_backlog):
    """One replication. chan_kind: 0 = fixed exceedance prob, 1 = Gilbert-
    Elliott with per-state exceedance probabilities p_g/p_b."""
    qlen = np.zeros(K, dtype=np.int64)
    hol_since = np.zeros(K, dtype=np.int64)
    good = np.zeros(K, dtype=np.uint8)
    buf = np.zeros((K, _DELAY_CAP), dtype=np.int64)
    head = np.zeros(K, dtype=np.int64)
    tail = np.zeros(K, dtype=np.int64)
    tracked = np.ones(K, dtype=np.uint8)

    if chan_kind == 1:
        for u in range(K):
            good[u] = 1 if _u01(seed, u, 0, 3) < p_good else 0

    arrivals = 0
    departures = 0
    attempts = 0
    successes = 0
    dep_tracked = 0
    sum_wq = 0.0
    sum_ws = 0.0
    sum_backlogged = 0.0
    sum_queue_excl = 0.0
    arrivals_measured = 0

    do_trace = trace_backlog.shape[0] == slots

    for t in range(slots):
        # 1. arrivals
        for u in range(K):
            if _u01(seed, u, t, 0) < lam_i:
                if qlen[u] == 0:
                    hol_since[u] = t
                qlen[u] += 1
                arrivals += 1
                if t >= warmup:
                    arrivals_measured += 1
                if tracked[u] == 1:
                    if tail[u] - head[u] < _DELAY_CAP:
                        buf[u, tail[u] % _DELAY_CAP] = t
                        tail[u] += 1
                    else:
                        tracked[u] = 0
        # 2. channel + 3. transmissions
        n_tx = 0
        last_tx = -1
        for u in range(K):
            if chan_kind == 1:
                if good[u] == 1:
                    if _u01(seed, u, t, 1) < alpha:
                        good[u] = 0
                else:
                    if _u01(seed, u, t, 1) < beta:
                        good[u] = 1
                pe = p_g if good[u] == 1 else p_b
            else:
                pe = p_exc
            if qlen[u] > 0 and _u01(seed, u, t, 2) < pe:
                n_tx += 1
                last_tx = u
                if t >= warmup:
                    attempts += 1
        # 4. collision resolution
        if n_tx == 1:
            u = last_tx
            qlen[u] -= 1
            departures += 1
            if t >= warmup:
                successes += 1
            if tracked[u] == 1:
                a = buf[u, head[u] % _DELAY_CAP]
                head[u] += 1
                if t >= warmup:
                    dep_tracked += 1
                    sum_wq += hol_since[u] - a
                    sum_ws += t - hol_since[u]
            if qlen[u] > 0:
                hol_since[u] = t + 1
        if t >= warmup:
            nb = 0
            qx = 0
            for u in range(K):
                if qlen[u] > 0:
                    nb += 1
                    # a head-of-line slot promoted by this slot's departure
                    # (hol_since == t + 1) still counts as waiting, keeping
                    # the count Little-consistent with w_q
                    qx += qlen[u] - 1 if hol_since[u] <= t else qlen[u]
            sum_backlogged += nb
            sum_queue_excl += qx
            if do_trace:
                trace_backlog[t] = nb

    remaining = 0
    for u in range(K):
        remaining += qlen[u]
    return (arrivals, departures, remaining, attempts, successes,
            dep_tracked, sum_wq, sum_ws, sum_backlogged, sum_queue_excl,
            arrivals_measured)


@dataclass
class SimReport:
    """Empirical metrics aggregated over replications; half-widths are 95%
    confidence (Student t over replications, 0 for a single replication)."""

    mean_queue_len: float
    w_q: float
    w_s: float
    total_delay: float
    p_succ_given_attempt: float
    throughput: float
    avg_backlogged: float
    half_widths: dict = field(default_factory=dict)
    low_confidence: bool = False
    inflight_bias: bool = False
    replications: int = 1

    def as_dict(self) -> dict:
        d = {
            "mean_queue_len": self.mean_queue_len,
            "w_q": self.w_q,
            "w_s": self.w_s,
            "total_delay": self.total_delay,
            "p_succ_given_attempt": self.p_succ_given_attempt,
            "throughput": self.throughput,
            "avg_backlogged": self.avg_backlogged,
            "low_confidence": self.low_confidence,
            "inflight_bias": self.inflight_bias,
            "replications": self.replications,
        }
        for k, v in self.half_widths.items():
            d[f"hw_{k}"] = v
        return d


def _channel_kernel_params(ch: ChannelModel):
    if isinstance(ch, BernoulliExceedance):
        return 0, ch.p_exc, 0.0, 0.0, 0.0, 0.0, 0.0
    if isinstance(ch, GaussianIID):
        return 0, ch.p_exc, 0.0, 0.0, 0.0, 0.0, 0.0
    if isinstance(ch, GilbertElliott):
        # per-state exceedance probability 1 - exp(-mu), the same footing
        # the modulated-queue model uses for its attempt probability
        p_g = 1.0 - math.exp(-ch.mu_g)
        p_b = 1.0 - math.exp(-ch.mu_b)
        return 1, 0.0, p_g, p_b, ch.alpha, ch.beta, ch.p_good
    raise TypeError(f"unsupported channel model {type(ch).__name__}")


def _rep_seed(seed: int, rep: int) -> np.uint64:
    z = (seed ^ (rep * 0xA24BAED4963EE407)) & 0xFFFFFFFFFFFFFFFF
    return np.uint64(z)


def _aggregate(per_rep: np.ndarray) -> tuple:
    n = per_rep.shape[0]
    mean = per_rep.mean(axis=0)
    if n < 2:
        hw = np.zeros_like(mean)
    else:
        sd = per_rep.std(axis=0, ddof=1)
        hw = stats.t.ppf(0.975, n - 1) * sd / math.sqrt(n)
    return mean, hw


def run_sim(cfg: SystemConfig, ch: ChannelModel,
            trace: bool = False) -> SimReport:
    """Simulate the full interacting-queue system and return empirical
    metrics after warmup, aggregated over replications."""
    cfg = validate_config(cfg, ch)
    kind, p_exc, p_g, p_b, alpha, beta, p_good = _channel_kernel_params(ch)
    measured = cfg.slots - cfg.warmup_slots
    no_trace = np.zeros(0, dtype=np.int64)

    def one(rep):
        tb = np.zeros(cfg.slots, dtype=np.int64) if (trace and rep == 0) \
            else no_trace
        out = _run_kernel(cfg.K, cfg.lambda_i, cfg.slots, cfg.warmup_slots,
                          kind, p_exc, p_g, p_b, alpha, beta, p_good,
                          _rep_seed(cfg.seed, rep), tb)
        return out

    reps = cfg.replications
    nw = min(worker_count(), reps)
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as ex:
            raw = list(ex.map(one, range(reps)))
    else:
        raw = [one(r) for r in range(reps)]

    rows = []
    low_conf = False
    bias = False
    for (arr, dep, rem, att, succ, dtr, swq, sws, sbl, sqx, arrm) in raw:
        assert arr == dep + rem, "packet conservation violated"
        wq = swq / dtr if dtr else 0.0
        ws = sws / dtr if dtr else 0.0
        psucc = succ / att if att else float("nan")
        rows.append((sqx / measured / cfg.K, wq, ws, wq + ws + 1.0,
                     psucc, succ / measured, sbl / measured))
        if succ < 100:
            low_conf = True
        if arrm > 0 and (arrm - succ) / arrm > 0.01:
            bias = True
    per_rep = np.array(rows)
    mean, hw = _aggregate(per_rep)
    names = ["mean_queue_len", "w_q", "w_s", "total_delay",
             "p_succ_given_attempt", "throughput", "avg_backlogged"]
    return SimReport(*mean, half_widths=dict(zip(names, hw)),
                     low_confidence=low_conf, inflight_bias=bias,
                     replications=reps)


def sweep_threshold(cfg: SystemConfig, ch: ChannelModel,
                    grid) -> list:
    """Run the simulator at each exceedance probability in `grid` with
    identical seeds and return (p_exc, throughput, delay, avg_backlogged,
    report) rows."""
    grid = list(grid)
    for g in grid:
        if not (0.0 < g < 1.0):
            raise ValueError(f"grid value {g} not in (0, 1)")
    rows = []
    for p in grid:
        rep = run_sim(cfg, BernoulliExceedance(p))
        rows.append((p, rep.throughput, rep.total_delay,
                     rep.avg_backlogged, rep))
    return rows


def sample_max_capacity(K: int, ch: GilbertElliott, n_samples: int,
                        mode: str = "stationary", seed: int = 0,
                        chunk: int = 512) -> np.ndarray:
    """Per-slot maxima of K Gaussian capacities conditioned on Good/Bad
    states. `stationary` redraws every user's state i.i.d. each sample;
    `evolving` runs K state chains across consecutive slots."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    mix = StationaryMixture.from_gilbert_elliott(ch)
    out = np.empty(n_samples)
    if mode == "stationary":
        done = 0
        while done < n_samples:
            m = min(chunk, n_samples - done)
            good = rng.random((m, K)) < mix.p
            mu = np.where(good, ch.mu_g, ch.mu_b)
            sd = np.where(good, ch.sigma_g, ch.sigma_b)
            caps = rng.standard_normal((m, K)) * sd + mu
            out[done:done + m] = caps.max(axis=1)
            done += m
    elif mode == "evolving":
        good = rng.random(K) < mix.p
        for i in range(n_samples):
            flip = rng.random(K)
            good = np.where(good, flip >= ch.alpha, flip < ch.beta)
            mu = np.where(good, ch.mu_g, ch.mu_b)
            sd = np.where(good, ch.sigma_g, ch.sigma_b)
            caps = rng.standard_normal(K) * sd + mu
            out[i] = caps.max()
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return out


def count_exceedances(n: int, tau: float, ch: GaussianIID, blocks: int,
                      seed: int = 0) -> np.ndarray:
    """Empirical pmf of the number of draws above the tau-intensity level in
    `blocks` independent blocks of n Gaussian draws. The level is taken from
    the channel threshold (set it with evt.level_for_intensity)."""
    rng = np.random.default_rng(seed)
    z = (ch.threshold - ch.mu) / ch.sigma
    counts = np.zeros(blocks, dtype=np.int64)
    for b in range(blocks):
        draws = rng.standard_normal(n)
        counts[b] = int(np.count_nonzero(draws > z))
    kmax = counts.max()
    pmf = np.bincount(counts, minlength=kmax + 1) / blocks
    return pmf

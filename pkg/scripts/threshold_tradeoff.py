#!/usr/bin/env python3
"""Throughput/delay trade-off across the exceedance-probability grid: too
selective a threshold starves the channel, too permissive a one collides.

Usage: python3 scripts/threshold_tradeoff.py [--K 50] [--lambda-total 0.35]
"""
import argparse

from macq.core import BernoulliExceedance, SystemConfig
from macq.sim import sweep_threshold


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", type=int, default=50)
    ap.add_argument("--lambda-total", type=float, default=0.35)
    ap.add_argument("--slots", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=12345)
    args = ap.parse_args()

    grid = [0.005 + 0.0025 * i for i in range(23)]
    cfg = SystemConfig(K=args.K, lambda_total=args.lambda_total,
                       slots=args.slots, seed=args.seed)
    print("p_exc,throughput,mean_delay,avg_backlogged")
    for p, thr, dly, nb, _ in sweep_threshold(cfg, BernoulliExceedance(0.5),
                                              grid):
        print(f"{p:.4f},{thr:.6g},{dly:.6g},{nb:.6g}")
    print(f"# operating point 1/K = {1 / args.K:.4f}")


if __name__ == "__main__":
    main()

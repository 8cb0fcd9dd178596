#!/usr/bin/env python3
"""Extreme-value capacity scaling: expected maximum capacity and the
distributed (threshold) capacity as the number of users grows, for a
half-Good/half-Bad channel population.

Usage: python3 scripts/capacity_scaling.py [--p 0.5]
"""
import argparse
import math

from macq.core import StationaryMixture
from macq.evt import (distributed_capacity, expected_max, gumbel_constants,
                      threshold_for_one)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--mu-g", type=float, default=math.sqrt(2.0))
    ap.add_argument("--sigma-g", type=float, default=0.5)
    ap.add_argument("--mu-b", type=float, default=0.0)
    ap.add_argument("--sigma-b", type=float, default=0.25)
    args = ap.parse_args()

    mix = StationaryMixture(p=args.p, q=1 - args.p, mu_g=args.mu_g,
                            sigma_g=args.sigma_g, mu_b=args.mu_b,
                            sigma_b=args.sigma_b)
    print("K,a_K,b_K,expected_max,threshold_numeric,distributed_capacity")
    for K in (50, 100, 500, 1000, 5000, 10_000, 50_000):
        c = gumbel_constants(K, mix)
        u = threshold_for_one(K, mix, method="numeric")
        print(f"{K},{c.a_K:.6g},{c.b_K:.6g},{expected_max(K, mix):.6g},"
              f"{u:.6g},{distributed_capacity(K, mix):.6g}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Side-by-side success probability and queue metrics: both analytic
models against the simulator, over a range of user counts.

Usage: python3 scripts/compare_models.py [--kmax 7] [--slots 1000000]
"""
import argparse

from macq import repro


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kmax", type=int, default=7)
    ap.add_argument("--slots", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=12345)
    args = ap.parse_args()

    for rid in ("psucc-compare", "model1-vs-sim"):
        res = repro.run_repro(rid, seed=args.seed, slots=args.slots,
                              K=args.kmax)
        print(f"# {rid} (passed: {res.passed}, {res.runtime_s:.1f}s)")
        print(",".join(res.header))
        for row in res.rows:
            print(",".join(format(v, ".6g") if isinstance(v, float)
                           else str(v) for v in row))
        print()


if __name__ == "__main__":
    main()

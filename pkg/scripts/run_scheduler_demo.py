#!/usr/bin/env python3
"""Base-station scheduling demo: quality-optimal power allocation for N users.

Generates random user demands, solves the knapsack dynamic program, checks
it against the exhaustive oracle, and prints the plan.

    python scripts/run_scheduler_demo.py --users 10 --p-max 30 --alpha 0.5
"""

import argparse

import numpy as np

from semtx.scheduler import (
    SchedulerParams,
    UserRequest,
    brute_force,
    optimize,
)

MODE_NAMES = {-1: "skip", 0: "direct", 1: "keyinfo"}


def main() -> None:
    parser = argparse.ArgumentParser(
        description=__doc__, formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    parser.add_argument("--users", type=int, default=10)
    parser.add_argument("--p-max", type=float, default=30.0)
    parser.add_argument("--alpha", type=float, default=0.5)
    parser.add_argument("--deadline", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    users = []
    for i in range(args.users):
        d_key = float(rng.uniform(0.3, 2.5))
        d_direct = d_key + float(rng.uniform(0.5, 3.0))
        users.append(UserRequest(i, d_direct, d_key, float(rng.uniform(0.3, 2.0))))
    params = SchedulerParams(gain=1.0, loss=0.1, deadline=args.deadline,
                             p_max=args.p_max, alpha=args.alpha,
                             p_quantum=args.p_max / 10_000)

    plan = optimize(users, params)
    print(f"{'user':>4}  {'mode':<8} {'power':>9}  {'quality':>7}")
    for d in plan.decisions:
        print(f"{d.user_id:>4}  {MODE_NAMES[d.x]:<8} {d.power:>9.3f}  {d.quality:>7.2f}")
    print(f"\ntotal quality {plan.total_quality:.3f}, total power "
          f"{plan.total_power:.3f} of {params.p_max}")

    if args.users <= 12:
        oracle = brute_force(users, params)
        agrees = oracle.total_quality == plan.total_quality
        print(f"exhaustive oracle agrees: {agrees}")


if __name__ == "__main__":
    main()

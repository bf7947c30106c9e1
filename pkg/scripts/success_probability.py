#!/usr/bin/env python3
"""Tabulate the exact probability that one measurement yields a kept outcome
rounding to the hidden dual lattice, for real quadratic fields (rank 1) and a
planted rank-2 instance."""

import argparse

import numpy as np

from regulus import ExperimentParams, make_field, make_synthetic
from regulus.unitgroup import empirical_success


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d-list", type=int, nargs="+",
                    default=[2, 3, 6, 7, 13, 19])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--log2q", type=int, default=16)
    ap.add_argument("--k", type=int, default=3)
    args = ap.parse_args()

    params = ExperimentParams(rank=1, n_param=args.n, q=2 ** args.log2q, k=args.k)
    bound1 = 1.0 / (100 * 3 ** 2 * 5)
    print(f"rank 1 (bound {bound1:.2e}):")
    for d in args.d_list:
        value = empirical_success(make_field(d), params)
        print(f"  D={d:<4} success = {value:.6f}")

    oracle = make_synthetic(16.0 * np.eye(2), n_param=4, bucket=5, q=2 ** 8)
    p2 = ExperimentParams(rank=2, n_param=4, q=2 ** 8, k=6)
    bound2 = 1.0 / (100 * 6 ** 4 * 25)
    value = empirical_success(oracle, p2)
    print(f"rank 2 planted diag(64, 64), width-5 buckets "
          f"(bound {bound2:.2e}):")
    print(f"  success = {value:.6e}")


if __name__ == "__main__":
    main()

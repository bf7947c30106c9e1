#!/usr/bin/env python3
"""Sweep period-finding regulator recovery over a list of discriminant values
and compare against the continued-fraction ground truth."""

import argparse
import json
import time

import numpy as np

from regulus import ExperimentParams, Inconclusive, RealLattice, cf_regulator, make_field
from regulus.unitgroup import run_unit_group


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d-list", type=int, nargs="+",
                    default=[2, 3, 6, 7, 13, 19])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--log2q", type=int, default=16)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=20260808)
    ap.add_argument("--out", type=str, default=None)
    args = ap.parse_args()

    params = ExperimentParams(rank=1, n_param=args.n, q=2 ** args.log2q, k=args.k)
    rows = []
    print(f"{'D':>4} {'R (cf)':>12} {'R (recovered)':>14} {'|err|':>10} "
          f"{'unit':>12} {'acc':>5} {'time':>6}")
    for d in args.d_list:
        field = make_field(d)
        r_true = float(cf_regulator(d))
        lat = RealLattice(np.array([[params.n_param * r_true]]))
        t0 = time.time()
        try:
            res = run_unit_group(field, params, trials=args.trials,
                                 seed=args.seed, oracle_lattice=lat)
            err = abs(res.regulator - r_true)
            print(f"{d:>4} {r_true:>12.6f} {res.regulator:>14.6f} {err:>10.2e} "
                  f"{str(res.fundamental_unit):>12} {res.stats['accepted']:>5} "
                  f"{time.time() - t0:>5.1f}s")
            rows.append({"d": d, "regulator_cf": r_true,
                         "regulator": res.regulator, "error": err,
                         "unit": list(res.fundamental_unit),
                         "stats": res.stats})
        except Inconclusive as exc:
            print(f"{d:>4} {r_true:>12.6f} {'inconclusive':>14} {'-':>10} "
                  f"{'-':>12} {'-':>5} {time.time() - t0:>5.1f}s   [{exc}]")
            rows.append({"d": d, "regulator_cf": r_true, "regulator": None,
                         "error": None, "reason": str(exc)})
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Decide principality for every reduced ideal of an order: walk the full
reduced-ideal list, run the period-finding test on each, and compare with the
exhaustive classification."""

import argparse
import time

from regulus import certified_nonprincipal, make_field, principal_cycle, reduced_ideals
from regulus.errors import EmptySet
from regulus.pip_solver import PipInstance, run_pip


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--trials", type=int, default=48)
    ap.add_argument("--seed", type=int, default=20260808)
    args = ap.parse_args()

    field = make_field(args.d)
    cyc = principal_cycle(field)
    principal = {i.label() for i in cyc.ideals}
    print(f"D={args.d}: {len(reduced_ideals(field))} reduced ideals, "
          f"{len(principal)} on the principal cycle "
          f"(R = {cyc.regulator_f:.6f})")
    try:
        cert = certified_nonprincipal(field)
        print(f"exhaustive certificate: ({cert.ideal.p},{cert.ideal.q}) "
              f"is not principal")
    except EmptySet:
        print("exhaustive certificate: every reduced ideal is principal")

    for ideal in reduced_ideals(field):
        truth = "principal" if ideal.label() in principal else "not_principal"
        t0 = time.time()
        res = run_pip(PipInstance(field=field, ideal=ideal),
                      trials=args.trials, seed=args.seed)
        mark = "ok" if res.verdict == truth else "MISMATCH"
        theta = f"{res.theta:.6f}" if res.theta is not None else "-"
        print(f"  ({ideal.p},{ideal.q}): {res.verdict:<14} theta'={theta:<10} "
              f"truth={truth:<14} [{mark}, {time.time() - t0:.1f}s]")


if __name__ == "__main__":
    main()

"""Solve every bundled benchmark and print a one-line summary for each."""

import argparse
import time

import numpy as np

import ergodic_control as ec


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--only", nargs="*", default=None, help="subset of problem names")
    args = parser.parse_args()

    names = args.only if args.only else ec.catalog.names()
    for name in names:
        prob = ec.catalog.build(name)
        t0 = time.perf_counter()
        res = ec.solve(prob)
        elapsed = time.perf_counter() - t0
        rep = ec.verify_solution(prob, res.value, res.rho)
        core = prob.domain.core_mask
        u = res.strategy.values[core]
        print(f"{name:18s} rho={res.rho:+.10f}  iters={len(res.iterations):2d}  "
              f"reason={res.reason:12s}  residual={rep.sup_core_full:.2e}  "
              f"verified={rep.verified}  u in [{u.min():+.3f}, {u.max():+.3f}]  "
              f"{elapsed:6.3f}s")


if __name__ == "__main__":
    main()

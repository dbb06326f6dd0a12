"""Refinement study: how the computed average cost moves under node doubling.

Doubles the cell count twice starting from each problem's stock grid and
prints the successive changes and their ratio.  A ratio near 4 is the
second-order signature; problems whose optimum is smooth converge so much
faster that both changes sit at round-off, and the ratio is then noise.
"""

import argparse

import ergodic_control as ec


def refine(name: str, levels: int):
    prob0 = ec.catalog.build(name)
    base = prob0.domain.n_nodes
    rhos = []
    for k in range(levels):
        n = (base - 1) * 2**k + 1
        res = ec.solve(ec.catalog.build(name, n_nodes=n))
        rhos.append(res.rho)
        print(f"  n={n:6d}  rho={res.rho:.15f}")
    for i in range(len(rhos) - 2):
        d1, d2 = rhos[i + 1] - rhos[i], rhos[i + 2] - rhos[i + 1]
        ratio = abs(d1) / abs(d2) if d2 else float("inf")
        print(f"  d{i+1}={d1:+.3e}  d{i+2}={d2:+.3e}  ratio={ratio:.3f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--problems", nargs="*",
                        default=["ou", "drift_control", "diffusion_control", "soft_quartic"])
    parser.add_argument("--levels", type=int, default=3)
    args = parser.parse_args()
    for name in args.problems:
        print(f"{name}:")
        refine(name, args.levels)


if __name__ == "__main__":
    main()

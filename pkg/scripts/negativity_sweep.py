"""Exact finite-D negativity moments of the three-leg star, against the D -> infinity law.

For a star with flat legs of dimension D the replica sum gives E tr[(rho^T_B)^k]
exactly; rescaling gives the finite-D moments of the squared and signed
negativity measures. The squared moments tend to the Catalan numbers and the
odd signed moments decay like D^{-1/2}.
"""

import argparse

from rtnlab.experiments import star_graph
from rtnlab.freeprob import mp_moments
from rtnlab.replicaoracle import replica_expectation
from rtnlab.symgroup import Permutation


def finite_d_moments(D: int, kmax: int) -> dict[int, float]:
    g = star_graph(D)
    out = {}
    for k in range(1, kmax + 1):
        tau = Permutation.full_cycle(k)
        out[k] = float(replica_expectation(g, ["A"], k, boundary_perms={"B": tau.inverse()}, exact=True))
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[4, 8, 16, 32, 64, 128, 256])
    args = ap.parse_args()
    cat = mp_moments(1, 2)
    print(f"{'D':>5} {'sq m1':>8} {'sq m2':>8} {'signed m1':>10} {'signed m3':>10}")
    for D in args.dims:
        tr = finite_d_moments(D, 4)
        sq1 = D * tr[2]
        sq2 = D**4 * tr[4]
        s1 = D**-0.5 * tr[1]
        s3 = D**2.5 * tr[3]
        print(f"{D:5d} {sq1:8.4f} {sq2:8.4f} {s1:10.4f} {s3:10.4f}")
    print(f"limit {float(cat[1]):8.4f} {float(cat[2]):8.4f} {0:10.4f} {0:10.4f}")


if __name__ == "__main__":
    main()

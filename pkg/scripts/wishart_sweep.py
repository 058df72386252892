"""Rescaled moments of a single random tensor between two flat links, over the bond dimension.

With equal dimensions the spectrum tends to MP(1); with dimensions (D, D/t) to
the law with moments sum_{NC} t^{d(pi, id)}.
"""

import argparse
from fractions import Fraction

import numpy as np

from rtnlab.experiments import rescaled_moments, run_trials, single_vertex_graph
from rtnlab.freeprob import two_cut_prediction
from rtnlab.rtncore import build_rtn_state, schmidt_spectrum
from rtnlab.series import MomentSequence


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[16, 64, 256, 512])
    ap.add_argument("--ratio", type=int, default=1, help="second link has dimension ratio * D")
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--kmax", type=int, default=4)
    args = ap.parse_args()
    ones = MomentSequence.ones(args.kmax)
    target = two_cut_prediction(ones, ones, Fraction(1, args.ratio), args.kmax)
    print("target " + " ".join(f"{float(x):9.4f}" for x in target))
    for D in args.dims:
        D2 = D * args.ratio
        g = single_vertex_graph([1 / D] * D, [1 / D2] * D2)

        def trial(rng, g=g, D=D):
            s = build_rtn_state(g, rng)
            return rescaled_moments(schmidt_spectrum(s, s.labels_for(["a"])), D, args.kmax)

        m = np.mean(run_trials(trial, args.seed, args.trials), axis=0)
        print(f"D={D:<4d} " + " ".join(f"{x:9.4f}" for x in m))


if __name__ == "__main__":
    main()

"""Spectra of random tensor network states: exact predictors, a replica oracle and a Monte Carlo harness."""

from .symgroup import Permutation, cayley_distance, cycle_type, non_crossing_permutations
from .series import FormalSeries, MomentSequence, s_transform
from .freeprob import free_product, mp_moments, nc_convolution, negativity_prediction, two_cut_prediction
from .measures import PointMeasure, h_star, ks_distance, min_pushforward
from .netgraph import TNGraph, load_graph, minimal_cuts
from .rtncore import TrialRNG, build_rtn_state, reduced_density, schmidt_spectrum
from .replicaoracle import cut_sum_k2, replica_expectation

__version__ = "0.1.0"

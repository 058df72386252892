"""Brute-force replica sums: exact ground truth for E tr[R(pi) rho^{⊗k}].

A configuration assigns a permutation to every bulk vertex; boundary vertices
are pinned (``pi`` on A, identity elsewhere). Its weight is
``prod_e prod_{l in C(pi_x^-1 pi_y)} tr[phi_e^l]``.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .netgraph import TNGraph, enumerate_cuts, cut_edge_set, minimal_cuts
from .rtncore import DensityMatrix, PureState, reduced_density
from .symgroup import Permutation, all_permutations, cayley_distance, cycle_type, non_crossing_permutations

__all__ = [
    "DEFAULT_BUDGET",
    "BudgetExceeded",
    "SpinConfiguration",
    "budget_from_env",
    "edge_power_sums",
    "replica_expectation",
    "cut_sum_k2",
    "cut_sum_k2_background",
    "normalization_eta",
    "flat_spin_model",
    "configuration_weight",
    "dominant_configurations",
]

DEFAULT_BUDGET = 10**8
_CHUNK = 1 << 16


class BudgetExceeded(RuntimeError):
    pass


def budget_from_env(default: int = DEFAULT_BUDGET) -> int:
    raw = os.environ.get("RTNLAB_BUDGET")
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(float(raw))
    except ValueError as exc:
        raise ValueError(f"RTNLAB_BUDGET must be a number, got {raw!r}") from exc


@dataclass
class SpinConfiguration:
    assignment: dict  # vertex name -> Permutation
    weight: float | Fraction


def edge_power_sums(g: TNGraph, kmax: int, exact: bool = False) -> list[list]:
    """tr[phi_e^l] for l = 0..kmax, per edge. Flat edges are exact in both modes."""
    out = []
    for e in g.edges:
        if exact:
            lam = [Fraction(1, e.dim)] * e.dim if e.flat else [Fraction(repr(x)) for x in e.spectrum]
            row = [sum((x**l for x in lam), Fraction(0)) for l in range(kmax + 1)]
        else:
            lam = np.asarray(e.spectrum, dtype=float)
            row = [math.fsum(lam**l) for l in range(kmax + 1)]
        out.append(row)
    return out


def _boundary_assignment(
    g: TNGraph, a: Iterable[str], k: int, pi: Permutation | None, boundary_perms: Mapping | None
) -> dict:
    a = set(a)
    if not a <= set(g.boundary):
        raise ValueError("A must be a set of boundary vertices")
    ident = Permutation.identity(k)
    if pi is None:
        pi = Permutation.full_cycle(k)
    if pi.k != k:
        raise ValueError("pi has the wrong degree")
    fixed = {b: (pi if b in a else ident) for b in g.boundary}
    if boundary_perms:
        for b, p in boundary_perms.items():
            if b not in fixed:
                raise ValueError(f"{b!r} is not a boundary vertex")
            if p.k != k:
                raise ValueError("boundary permutation has the wrong degree")
            fixed[b] = p
    return fixed


def replica_expectation(
    g: TNGraph,
    a: Iterable[str],
    k: int,
    pi: Permutation | None = None,
    *,
    boundary_perms: Mapping[str, Permutation] | None = None,
    exact: bool = False,
    budget: int | None = None,
):
    """Sum over all bulk assignments in S_k of the configuration weight.

    ``pi`` defaults to the full cycle, giving E tr[rho_A^k]. ``boundary_perms``
    overrides individual boundary pins (e.g. tau^-1 on B for negativity moments).
    ``exact=True`` returns a Fraction (float spectra are read at face value).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if budget is None:
        budget = budget_from_env()
    perms = all_permutations(k)
    n = len(perms)
    bulk = list(g.bulk)
    total_configs = n ** len(bulk)
    if total_configs > budget:
        raise BudgetExceeded(f"{n}^{len(bulk)} = {total_configs} configurations exceed budget {budget}")
    fixed = _boundary_assignment(g, a, k, pi, boundary_perms)
    index = {p.mapping: i for i, p in enumerate(perms)}
    # cycle type of p_i^-1 p_j for every pair, as an index into a table of types
    types: dict[tuple, int] = {}
    pair_type = np.empty((n, n), dtype=np.int64)
    for i, p in enumerate(perms):
        pinv = p.inverse()
        for j, q in enumerate(perms):
            ct = cycle_type(pinv * q)
            pair_type[i, j] = types.setdefault(ct, len(types))
    type_list = sorted(types, key=types.get)
    powers = edge_power_sums(g, k, exact)
    # per-edge weight of each cycle type, then of each permutation pair
    edge_tables = []
    for row in powers:
        per_type = [math.prod((row[l] for l in ct), start=Fraction(1) if exact else 1.0) for ct in type_list]
        if exact:
            edge_tables.append([[per_type[pair_type[i, j]] for j in range(n)] for i in range(n)])
        else:
            edge_tables.append(np.asarray(per_type, dtype=float)[pair_type])

    pos = {v: i for i, v in enumerate(bulk)}
    # each edge: (table, slot of u or fixed perm index, slot of v or fixed perm index)
    edge_specs = []
    for e, table in zip(g.edges, edge_tables):
        ends = []
        for x in (e.u, e.v):
            ends.append(("bulk", pos[x]) if x in pos else ("fixed", index[fixed[x].mapping]))
        edge_specs.append((table, ends[0], ends[1]))

    if exact:
        return _exact_sum(edge_specs, n, len(bulk))
    return _float_sum(edge_specs, n, len(bulk))


def _exact_sum(edge_specs, n: int, nb: int) -> Fraction:
    total = Fraction(0)
    for conf in itertools.product(range(n), repeat=nb):
        w = Fraction(1)
        for table, (ku, iu), (kv, iv) in edge_specs:
            i = conf[iu] if ku == "bulk" else iu
            j = conf[iv] if kv == "bulk" else iv
            w *= table[i][j]
            if not w:
                break
        total += w
    return total


def _float_sum(edge_specs, n: int, nb: int) -> float:
    total_configs = n**nb
    partials = []
    for start in range(0, total_configs, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total_configs))
        # digits of the configuration number, slot 0 most significant
        conf = np.empty((idx.size, nb), dtype=np.int64)
        rest = idx.copy()
        for s in range(nb - 1, -1, -1):
            conf[:, s] = rest % n
            rest //= n
        w = np.ones(idx.size)
        for table, (ku, iu), (kv, iv) in edge_specs:
            i = conf[:, iu] if ku == "bulk" else np.full(idx.size, iu)
            j = conf[:, iv] if kv == "bulk" else np.full(idx.size, iv)
            w *= table[i, j]
        partials.extend(w.tolist())
    return math.fsum(partials)


def cut_sum_k2(g: TNGraph, a: Iterable[str], *, exact: bool = False):
    """sum over cuts Delta for A of tr[phi_Delta^2] = prod over crossing edges of tr[phi_e^2]."""
    total = Fraction(0) if exact else []
    purities = []
    for e in g.edges:
        if exact:
            lam = [Fraction(1, e.dim)] * e.dim if e.flat else [Fraction(repr(x)) for x in e.spectrum]
            purities.append(sum((x * x for x in lam), Fraction(0)))
        else:
            purities.append(math.fsum(np.asarray(e.spectrum) ** 2))
    for c in enumerate_cuts(g, a):
        crossing = cut_edge_set(g, c)
        if exact:
            term = Fraction(1)
            for i in crossing:
                term *= purities[i]
            total += term
        else:
            total.append(math.prod(purities[i] for i in crossing))
    return total if exact else math.fsum(total)


def _purity(d: DensityMatrix) -> float:
    m = d.matrix
    return float(np.real(np.vdot(m.conj().T, m)))


def cut_sum_k2_background(
    background: PureState, a_labels: Iterable[str], bulk_labels: Iterable[str], budget: int | None = None
) -> float:
    """Same cut sum for an explicit background state over vertex (and reference) systems."""
    a_labels, bulk_labels = list(a_labels), list(bulk_labels)
    if budget is None:
        budget = budget_from_env()
    if 2 ** len(bulk_labels) > budget:
        raise BudgetExceeded("too many bulk subsets")
    terms = []
    for r in range(len(bulk_labels) + 1):
        for sub in itertools.combinations(bulk_labels, r):
            keep = a_labels + list(sub)
            if not keep:
                terms.append(background.norm_squared() ** 2)
                continue
            terms.append(_purity(reduced_density(background, keep)))
    return math.fsum(terms)


def normalization_eta(g: TNGraph, *, exact: bool = False):
    """max over nonempty bulk subsets Delta of tr[phi_Delta^2]."""
    best = None
    bulk = list(g.bulk)
    purities = edge_power_sums(g, 2, exact)
    for r in range(1, len(bulk) + 1):
        for sub in itertools.combinations(bulk, r):
            s = set(sub)
            term = Fraction(1) if exact else 1.0
            for e, row in zip(g.edges, purities):
                if (e.u in s) != (e.v in s):
                    term *= row[2]
            if best is None or term > best:
                best = term
    return best


def flat_spin_model(g: TNGraph, a: Iterable[str], k: int, pi: Permutation | None = None, *, budget: int | None = None) -> Fraction:
    """sum over configurations of prod_e D_e^{-d(pi_x, pi_y)}; flat links only."""
    if not g.all_flat():
        raise ValueError("the Cayley spin model needs flat link spectra")
    if budget is None:
        budget = budget_from_env()
    perms = all_permutations(k)
    bulk = list(g.bulk)
    if len(perms) ** len(bulk) > budget:
        raise BudgetExceeded("configuration count exceeds budget")
    fixed = _boundary_assignment(g, a, k, pi, None)
    total = Fraction(0)
    for conf in itertools.product(perms, repeat=len(bulk)):
        assign = dict(fixed)
        assign.update(zip(bulk, conf))
        exponent_by_dim: dict[int, int] = {}
        for e in g.edges:
            d = cayley_distance(assign[e.u], assign[e.v])
            exponent_by_dim[e.dim] = exponent_by_dim.get(e.dim, 0) + d
        w = Fraction(1)
        for dim, ex in exponent_by_dim.items():
            w /= Fraction(dim) ** ex
        total += w
    return total


def configuration_weight(g: TNGraph, assignment: Mapping[str, Permutation], *, exact: bool = False):
    """Weight of one full assignment (bulk and boundary)."""
    k = next(iter(assignment.values())).k
    powers = edge_power_sums(g, k, exact)
    w = Fraction(1) if exact else 1.0
    for e, row in zip(g.edges, powers):
        for l in cycle_type(assignment[e.u].inverse() * assignment[e.v]):
            w *= row[l]
    return w


def dominant_configurations(g: TNGraph, a: Iterable[str], k: int, *, exact: bool = False) -> list[SpinConfiguration]:
    """Leading configurations for a unique minimal cut, or for two non-intersecting ones.

    Unique cut Gamma: tau on Gamma, identity outside. Two nested cuts
    Gamma_1 < Gamma_2: tau on Gamma_1, sigma on Gamma_2 minus Gamma_1, identity
    outside Gamma_2, one configuration per sigma in NC(k).
    """
    a = set(a)
    mc = minimal_cuts(g, a)
    tau, ident = Permutation.full_cycle(k), Permutation.identity(k)
    verts = list(g.vertices)
    if mc.flag == "unique":
        region = mc.cuts[0].region
        assign = {v: (tau if v in region else ident) for v in verts}
        return [SpinConfiguration(assign, configuration_weight(g, assign, exact=exact))]
    if mc.flag == "exactly-two-nonintersecting":
        c1, c2 = sorted(mc.cuts, key=lambda c: len(c.region))
        if not c1.region < c2.region:
            raise ValueError("the two minimal cuts are not nested")
        out = []
        for sigma in non_crossing_permutations(k):
            assign = {}
            for v in verts:
                if v in c1.region:
                    assign[v] = tau
                elif v in c2.region:
                    assign[v] = sigma
                else:
                    assign[v] = ident
            out.append(SpinConfiguration(assign, configuration_weight(g, assign, exact=exact)))
        return out
    raise ValueError(f"minimal-cut structure {mc.flag!r} is not handled")

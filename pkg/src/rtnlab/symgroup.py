"""Permutation combinatorics on S_k.

Permutations are image tuples with 0-based points; cycle notation (1-based)
is only used for parsing and printing, e.g. ``"(1 2 3)(4)"``.

The spectral metric ``d_rho(p1, p2) = -sum_{l in C(p1^-1 p2)} log2 tr[rho^l]``
generalizes the Cayley distance, which it reproduces (times ``log2 D``) for a
flat spectrum of dimension ``D``.
"""

from __future__ import annotations

import itertools
import math
import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "Permutation",
    "CycleType",
    "cycle_type",
    "cayley_distance",
    "is_geodesic",
    "are_disjoint",
    "non_crossing_permutations",
    "nc_type_table",
    "catalan",
    "spectral_metric",
    "is_flat",
    "MetricReport",
    "check_metric",
    "all_permutations",
]

CycleType = tuple  # non-increasing tuple of cycle lengths, summing to k

_CYCLE_RE = re.compile(r"\(([^()]*)\)")


@dataclass(frozen=True)
class Permutation:
    """A bijection of {0, ..., k-1} stored as its image tuple."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(i) for i in self.mapping)
        if sorted(m) != list(range(len(m))) or not m:
            raise ValueError(f"not a permutation of [k]: {self.mapping!r}")
        object.__setattr__(self, "mapping", m)

    # constructors -------------------------------------------------------

    @classmethod
    def identity(cls, k: int) -> Permutation:
        return cls(tuple(range(k)))

    @classmethod
    def full_cycle(cls, k: int) -> Permutation:
        """tau_k = (1 2 ... k), i.e. i -> i+1 mod k."""
        return cls(tuple((i + 1) % k for i in range(k)))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], k: int) -> Permutation:
        """Build from 0-based cycles; unlisted points are fixed."""
        img = list(range(k))
        seen: set[int] = set()
        for cyc in cycles:
            cyc = list(cyc)
            for i in cyc:
                if not 0 <= i < k or i in seen:
                    raise ValueError(f"bad cycle {cyc} for degree {k}")
                seen.add(i)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                img[a] = b
        return cls(tuple(img))

    @classmethod
    def parse(cls, text: str, k: int | None = None) -> Permutation:
        """Parse 1-based cycle notation such as ``"(1 2 3)(4)"``.

        ``"()"`` or ``"id"`` denote the identity and need ``k``.
        """
        text = text.strip()
        if text in ("", "id", "()"):
            if k is None:
                raise ValueError("degree required for the identity")
            return cls.identity(k)
        if _CYCLE_RE.sub("", text).strip():
            raise ValueError(f"malformed cycle notation: {text!r}")
        cycles = []
        for body in _CYCLE_RE.findall(text):
            items = body.replace(",", " ").split()
            cycles.append([int(x) - 1 for x in items])
        top = max((max(c) + 1 for c in cycles if c), default=0)
        if k is None:
            k = top
        elif top > k:
            raise ValueError(f"point {top} exceeds degree {k}")
        return cls.from_cycles([c for c in cycles if c], k)

    # group structure ----------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def __mul__(self, other: Permutation) -> Permutation:
        """Composition, right factor acts first: (p*q)(i) = p(q(i))."""
        _check_degree(self, other)
        p = self.mapping
        return Permutation(tuple(p[j] for j in other.mapping))

    def inverse(self) -> Permutation:
        inv = [0] * self.k
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return Permutation(tuple(inv))

    def cycles(self, include_fixed: bool = True) -> list[tuple[int, ...]]:
        seen = [False] * self.k
        out = []
        for start in range(self.k):
            if seen[start]:
                continue
            cyc = []
            i = start
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = self.mapping[i]
            if include_fixed or len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def support(self) -> frozenset[int]:
        return frozenset(i for i, j in enumerate(self.mapping) if i != j)

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.mapping))

    def __str__(self) -> str:
        return "".join("(" + " ".join(str(i + 1) for i in c) + ")" for c in self.cycles())

    def __repr__(self) -> str:
        return f"Permutation({self})"


def _check_degree(p: Permutation, q: Permutation) -> None:
    if p.k != q.k:
        raise ValueError(f"degree mismatch: {p.k} != {q.k}")


def cycle_type(p: Permutation) -> CycleType:
    """Cycle lengths of ``p`` (fixed points included), non-increasing."""
    return tuple(sorted((len(c) for c in p.cycles()), reverse=True))


def cayley_distance(p1: Permutation, p2: Permutation) -> int:
    """k minus the number of cycles of p1^-1 p2."""
    _check_degree(p1, p2)
    return p1.k - len((p1.inverse() * p2).cycles())


def is_geodesic(p: Permutation, a: Permutation, b: Permutation) -> bool:
    """True iff ``p`` lies on a Cayley geodesic between ``a`` and ``b``."""
    return cayley_distance(a, p) + cayley_distance(p, b) == cayley_distance(a, b)


def are_disjoint(alpha: Permutation, beta: Permutation) -> bool:
    """Points moved by ``alpha`` are fixed by ``beta`` and vice versa."""
    _check_degree(alpha, beta)
    return not (alpha.support() & beta.support())


def all_permutations(k: int) -> list[Permutation]:
    return [Permutation(m) for m in itertools.permutations(range(k))]


def catalan(k: int) -> int:
    if k < 0:
        raise ValueError("catalan index must be nonnegative")
    return math.comb(2 * k, k) // (k + 1)


# non-crossing partitions ------------------------------------------------


def _nc_blocks(points: tuple[int, ...]) -> Iterator[list[tuple[int, ...]]]:
    """All non-crossing partitions of an increasing tuple of points."""
    if not points:
        yield []
        return
    first, rest = points[0], points[1:]
    n = len(rest)
    for mask in range(1 << n):
        chosen = [i for i in range(n) if mask >> i & 1]
        block = (first,) + tuple(rest[i] for i in chosen)
        # elements strictly between consecutive block members, and after the last
        cuts = [-1] + chosen + [n]
        gaps = [rest[cuts[j] + 1 : cuts[j + 1]] for j in range(len(cuts) - 1)]
        for parts in itertools.product(*(list(_nc_blocks(g)) for g in gaps)):
            out = [block]
            for part in parts:
                out.extend(part)
            yield out


@lru_cache(maxsize=None)
def non_crossing_permutations(k: int) -> tuple[Permutation, ...]:
    """Permutations of NC(k), each block {i1<...<il} mapped to the cycle (i1 ... il).

    Ordered lexicographically by image tuple. Size is ``catalan(k)``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    perms = [Permutation.from_cycles(blocks, k) for blocks in _nc_blocks(tuple(range(k)))]
    perms.sort(key=lambda p: p.mapping)
    return tuple(perms)


@lru_cache(maxsize=None)
def nc_type_table(k: int) -> tuple[tuple[CycleType, CycleType, int, int], ...]:
    """Aggregated NC(k) data: (C(pi), C(pi^-1 tau), d(pi, id), multiplicity).

    Sums of the form ``sum_{pi in NC(k)} f_pi g_{pi^-1 tau} t^{d(pi,id)}`` only
    depend on these triples, so predictors iterate over this table.
    Rows are sorted, so reductions are in a fixed order.
    """
    tau = Permutation.full_cycle(k)
    counts: Counter = Counter()
    for pi in non_crossing_permutations(k):
        ct = cycle_type(pi)
        counts[(ct, cycle_type(pi.inverse() * tau), k - len(ct))] += 1
    return tuple((a, b, d, m) for (a, b, d), m in sorted(counts.items()))


# spectral metric ---------------------------------------------------------

_NORM_TOL = 1e-9


def _power_sums(spec: Sequence[float], kmax: int) -> np.ndarray:
    lam = np.asarray(spec, dtype=float)
    if np.any(lam < 0):
        raise ValueError("spectrum has negative entries")
    if abs(lam.sum() - 1.0) > _NORM_TOL:
        raise ValueError(f"spectrum not normalized (sum={lam.sum()!r})")
    return np.array([0.0] + [math.fsum(lam**l) for l in range(1, kmax + 1)])


def spectral_metric(spec: Sequence[float], p1: Permutation, p2: Permutation) -> float:
    """Sum over cycles l of p1^-1 p2 of (l-1) H_l(spec), in bits."""
    _check_degree(p1, p2)
    ps = _power_sums(spec, p1.k)
    total = 0.0
    for length in cycle_type(p1.inverse() * p2):
        if length > 1:
            total -= math.log2(ps[length])
    return max(total, 0.0)


def is_flat(spec: Sequence[float], rtol: float = 1e-12) -> bool:
    """All nonzero entries equal within relative tolerance."""
    lam = np.asarray(spec, dtype=float)
    lam = lam[lam > 0]
    if lam.size == 0:
        return True
    return bool(np.max(lam) - np.min(lam) <= rtol * np.max(lam))


@dataclass
class MetricReport:
    k: int
    n_triples: int
    violations: int
    equality_mismatches: int
    max_violation: float
    flat: bool

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.equality_mismatches == 0


def check_metric(spec: Sequence[float], k: int, tol: float = 1e-9) -> MetricReport:
    """Exhaustive triangle-inequality check of ``spectral_metric`` over S_k^3.

    A triple is tight when |d12 + d23 - d13| <= tol. For a non-flat spectrum the
    tight set must equal {pi1^-1 pi2 and pi2^-1 pi3 disjoint}; for a flat one,
    it must equal the Cayley-geodesic set.
    """
    perms = all_permutations(k)
    n = len(perms)
    index = {p.mapping: i for i, p in enumerate(perms)}
    mult = np.empty((n, n), dtype=np.int64)
    for i, p in enumerate(perms):
        for j, q in enumerate(perms):
            mult[i, j] = index[(p * q).mapping]
    inv = np.array([index[p.inverse().mapping] for p in perms])
    ident = index[tuple(range(k))]
    dist_from_id = np.array([spectral_metric(spec, perms[ident], p) for p in perms])
    cayley_from_id = np.array([cayley_distance(perms[ident], p) for p in perms])
    supports = [p.support() for p in perms]
    disjoint = np.array([[not (supports[a] & supports[b]) for b in range(n)] for a in range(n)])
    flat = is_flat(spec)

    violations = 0
    mismatches = 0
    worst = 0.0
    for i1 in range(n):
        alpha = mult[inv[i1]]  # alpha[j] = index of pi1^-1 pi_j
        d1 = dist_from_id[alpha]  # d(pi1, pi_j) for every j
        for i2 in range(n):
            beta = mult[inv[i2]]  # beta[i3] = index of pi2^-1 pi3
            d23 = dist_from_id[beta]
            slack = d1[i2] + d23 - d1
            worst = max(worst, float(-slack.min()))
            violations += int(np.count_nonzero(slack < -tol))
            tight = np.abs(slack) <= tol
            if flat:
                expected = (
                    cayley_from_id[alpha[i2]] + cayley_from_id[beta] == cayley_from_id[alpha]
                )
            else:
                expected = disjoint[alpha[i2], beta]
            mismatches += int(np.count_nonzero(tight != expected))
    return MetricReport(k, n**3, violations, mismatches, worst, flat)

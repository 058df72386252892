"""Tensor-network graphs, cuts, minimal cuts and cut certification.

A cut for a boundary region ``A`` is a vertex set ``Gamma`` with
``Gamma & boundary == A``. Cuts are enumerated by bitmask over the bulk
vertices in sorted-name order, so bit ``i`` is ``bulk[i]``.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .measures import smooth_min_entropy_classical, tensor_spectrum

__all__ = [
    "Edge",
    "TNGraph",
    "Cut",
    "make_cut",
    "random_graph",
    "CutCeilingExceeded",
    "enumerate_cuts",
    "cut_edge_set",
    "cut_weight",
    "MinimalCuts",
    "minimal_cuts",
    "max_flow_value",
    "CutClasses",
    "classify_between_cuts",
    "ConditionalTerm",
    "CutCertificate",
    "conditional_min_entropy",
    "certify_min_cut",
    "certify_pair_cut",
    "load_graph",
    "DEFAULT_CEILING",
]

DEFAULT_CEILING = 20
SPECTRUM_TOL = 1e-9


class CutCeilingExceeded(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    dim: int
    spectrum: tuple[float, ...]
    flat: bool = False

    @property
    def endpoints(self) -> tuple[str, str]:
        return (self.u, self.v)

    def other(self, x: str) -> str:
        return self.v if x == self.u else self.u

    def h_min(self) -> float:
        return -math.log2(max(self.spectrum))

    def h_max(self) -> float:
        """log (sum_i sqrt(lambda_i))^2, the max-entropy of either marginal."""
        return 2 * math.log2(math.fsum(math.sqrt(x) for x in self.spectrum))


@dataclass(frozen=True)
class TNGraph:
    """Connected graph with boundary/bulk vertices and normalized link spectra."""

    vertices: tuple[str, ...]
    kinds: tuple[str, ...]
    edges: tuple[Edge, ...]
    _index: dict = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if len(self.vertices) != len(self.kinds):
            raise ValueError("one kind per vertex required")
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex names")
        for k in self.kinds:
            if k not in ("boundary", "bulk"):
                raise ValueError(f"unknown vertex kind {k!r}")
        names = set(self.vertices)
        for e in self.edges:
            if e.u not in names or e.v not in names:
                raise ValueError(f"edge {e.u}-{e.v} has an unknown endpoint")
            if e.u == e.v:
                raise ValueError(f"self-loop at {e.u}")
            if e.dim < 1 or len(e.spectrum) != e.dim:
                raise ValueError(f"edge {e.u}-{e.v}: spectrum length must equal dim {e.dim}")
            if min(e.spectrum) < 0 or abs(math.fsum(e.spectrum) - 1) > SPECTRUM_TOL:
                raise ValueError(f"edge {e.u}-{e.v}: link spectrum must be a normalized distribution")
        if not self._connected():
            raise ValueError("graph is not connected")
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.vertices)})

    @classmethod
    def build(cls, boundary: Iterable[str], bulk: Iterable[str], edges: Iterable) -> TNGraph:
        """Edges as (u, v, dim) for flat links or (u, v, dim, spectrum)."""
        boundary, bulk = list(boundary), list(bulk)
        out = []
        for item in edges:
            if len(item) == 3:
                u, v, d = item
                out.append(Edge(u, v, int(d), tuple([1.0 / d] * d), True))
            else:
                u, v, d, spec = item
                if isinstance(spec, str) and spec == "flat":
                    out.append(Edge(u, v, int(d), tuple([1.0 / d] * d), True))
                else:
                    spec = tuple(sorted((float(x) for x in spec), reverse=True))
                    out.append(Edge(u, v, int(d), spec, False))
        return cls(tuple(boundary + bulk), tuple(["boundary"] * len(boundary) + ["bulk"] * len(bulk)), tuple(out))

    def _connected(self) -> bool:
        if not self.vertices:
            return True
        adj = {v: set() for v in self.vertices}
        for e in self.edges:
            adj[e.u].add(e.v)
            adj[e.v].add(e.u)
        seen = {self.vertices[0]}
        todo = [self.vertices[0]]
        while todo:
            x = todo.pop()
            for y in adj[x] - seen:
                seen.add(y)
                todo.append(y)
        return len(seen) == len(self.vertices)

    @property
    def boundary(self) -> tuple[str, ...]:
        return tuple(sorted(v for v, k in zip(self.vertices, self.kinds) if k == "boundary"))

    @property
    def bulk(self) -> tuple[str, ...]:
        return tuple(sorted(v for v, k in zip(self.vertices, self.kinds) if k == "bulk"))

    def kind(self, v: str) -> str:
        return self.kinds[self._index[v]]

    def incident(self, v: str) -> list[int]:
        return [i for i, e in enumerate(self.edges) if v in e.endpoints]

    def all_flat(self) -> bool:
        return all(e.flat or len(set(e.spectrum)) == 1 for e in self.edges)

    # serialization

    def to_dict(self) -> dict:
        return {
            "vertices": [{"name": v, "kind": k} for v, k in zip(self.vertices, self.kinds)],
            "edges": [
                {"u": e.u, "v": e.v, "dim": e.dim, "spectrum": "flat" if e.flat else list(e.spectrum)}
                for e in self.edges
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> TNGraph:
        verts = data["vertices"]
        edges = []
        for e in data["edges"]:
            d = int(e["dim"])
            spec = e.get("spectrum", "flat")
            if spec == "flat":
                edges.append(Edge(e["u"], e["v"], d, tuple([1.0 / d] * d), True))
            else:
                edges.append(Edge(e["u"], e["v"], d, tuple(sorted((float(x) for x in spec), reverse=True))))
        return cls(tuple(v["name"] for v in verts), tuple(v["kind"] for v in verts), tuple(edges))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def load_graph(source) -> TNGraph:
    """From a dict, a JSON string, or a path to a JSON file."""
    if isinstance(source, TNGraph):
        return source
    if isinstance(source, dict):
        return TNGraph.from_dict(source)
    text = str(source)
    if text.lstrip().startswith("{"):
        return TNGraph.from_dict(json.loads(text))
    return TNGraph.from_dict(json.loads(Path(text).read_text()))


@dataclass(frozen=True)
class Cut:
    region: frozenset
    boundary_target: frozenset

    def __str__(self) -> str:
        return "{" + ",".join(sorted(self.region)) + "}"

    def sorted_region(self) -> tuple[str, ...]:
        return tuple(sorted(self.region))


def _make_cut(g: TNGraph, region: Iterable[str], a: Iterable[str]) -> Cut:
    region, a = frozenset(region), frozenset(a)
    if not a <= set(g.boundary):
        raise ValueError("boundary target must consist of boundary vertices")
    if region & set(g.boundary) != a:
        raise ValueError("region must meet the boundary exactly in A")
    unknown = region - set(g.vertices)
    if unknown:
        raise ValueError(f"unknown vertices {sorted(unknown)}")
    return Cut(region, a)


def make_cut(g: TNGraph, region: Iterable[str], a: Iterable[str] | None = None) -> Cut:
    region = frozenset(region)
    if a is None:
        a = region & set(g.boundary)
    return _make_cut(g, region, a)


def enumerate_cuts(g: TNGraph, a: Iterable[str], ceiling: int = DEFAULT_CEILING) -> list[Cut]:
    a = frozenset(a)
    bulk = g.bulk
    if len(bulk) > ceiling:
        raise CutCeilingExceeded(f"{len(bulk)} bulk vertices exceed the enumeration ceiling {ceiling}")
    _make_cut(g, a, a)
    out = []
    for mask in range(1 << len(bulk)):
        region = a | {bulk[i] for i in range(len(bulk)) if mask >> i & 1}
        out.append(Cut(frozenset(region), a))
    return out


def cut_edge_set(g: TNGraph, c: Cut) -> list[int]:
    """Indices of edges with exactly one endpoint in the region."""
    return [i for i, e in enumerate(g.edges) if (e.u in c.region) != (e.v in c.region)]


def cut_weight(g: TNGraph, c: Cut) -> int:
    """Exact product of bond dimensions across the cut."""
    return math.prod(g.edges[i].dim for i in cut_edge_set(g, c))


@dataclass
class MinimalCuts:
    cuts: list[Cut]
    weight: int
    flag: str  # "unique" | "exactly-two-nonintersecting" | "other"
    t: Fraction | None = None  # D_small / D_large for the two-cut case

    @property
    def count(self) -> int:
        return len(self.cuts)


def minimal_cuts(
    g: TNGraph, a: Iterable[str], weighting: str = "dimension", ceiling: int = DEFAULT_CEILING
) -> MinimalCuts:
    """All cuts minimizing prod D_e (``"dimension"``) or the edge count (``"count"``).

    Two minimal cuts with disjoint edge sets are flagged
    ``"exactly-two-nonintersecting"`` and ordered so the first has the smaller
    dimension; ``t`` is their dimension ratio.
    """
    cuts = enumerate_cuts(g, a, ceiling)
    if weighting == "dimension":
        key = lambda c: cut_weight(g, c)  # noqa: E731
    elif weighting == "count":
        key = lambda c: len(cut_edge_set(g, c))  # noqa: E731
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    weights = [key(c) for c in cuts]
    best = min(weights)
    mins = [c for c, w in zip(cuts, weights) if w == best]
    t = None
    if len(mins) == 1:
        flag = "unique"
    elif len(mins) == 2 and not set(cut_edge_set(g, mins[0])) & set(cut_edge_set(g, mins[1])):
        flag = "exactly-two-nonintersecting"
        d0, d1 = cut_weight(g, mins[0]), cut_weight(g, mins[1])
        if d0 > d1:
            mins = [mins[1], mins[0]]
            d0, d1 = d1, d0
        t = Fraction(d0, d1)
    else:
        flag = "other"
    return MinimalCuts(mins, best, flag, t)


def max_flow_value(g: TNGraph, a: Iterable[str]) -> int:
    """Number of edge-disjoint paths from A to the rest of the boundary.

    Breadth-first augmenting paths on a unit-capacity network in which every
    undirected edge is a pair of opposite arcs.
    """
    a = set(a)
    abar = set(g.boundary) - a
    if not a or not abar:
        return 0
    src, snk = ("__source__",), ("__sink__",)
    cap: dict = {}

    def add(u, v, c):
        cap.setdefault(u, {}).setdefault(v, 0)
        cap.setdefault(v, {}).setdefault(u, 0)
        cap[u][v] += c

    for e in g.edges:
        add(e.u, e.v, 1)
        add(e.v, e.u, 1)
    big = len(g.edges) + 1
    for x in a:
        add(src, x, big)
    for x in abar:
        add(x, snk, big)

    flow = 0
    while True:
        parent = {src: None}
        queue = deque([src])
        while queue and snk not in parent:
            u = queue.popleft()
            for v, c in cap[u].items():
                if c > 0 and v not in parent:
                    parent[v] = u
                    queue.append(v)
        if snk not in parent:
            return flow
        v = snk
        while parent[v] is not None:
            u = parent[v]
            cap[u][v] -= 1
            cap[v][u] += 1
            v = u
        flow += 1


@dataclass
class CutClasses:
    inside: list[Cut]  # strictly contained in the smaller cut
    outside: list[Cut]  # strictly containing the larger cut
    between: list[Cut]
    incomparable: list[Cut]


def classify_between_cuts(
    g: TNGraph, a: Iterable[str], c1: Cut, c2: Cut, ceiling: int = DEFAULT_CEILING
) -> CutClasses:
    if not c1.region < c2.region:
        raise ValueError("first cut must be a proper subset of the second")
    if set(cut_edge_set(g, c1)) & set(cut_edge_set(g, c2)):
        raise ValueError("the two cuts share edges")
    out = CutClasses([], [], [], [])
    for c in enumerate_cuts(g, a, ceiling):
        r = c.region
        if r == c1.region or r == c2.region:
            continue
        if r < c1.region:
            out.inside.append(c)
        elif c2.region < r:
            out.outside.append(c)
        elif c1.region < r < c2.region:
            out.between.append(c)
        else:
            out.incomparable.append(c)
    return out


# certification ------------------------------------------------------------


@dataclass
class ConditionalTerm:
    competitor: Cut
    x_region: frozenset
    y_region: frozenset
    value: float


@dataclass
class CutCertificate:
    K: float
    argmin: Cut | None
    eps: float
    terms: list[ConditionalTerm]
    excluded: list[Cut] = field(default_factory=list)


def conditional_min_entropy(
    g: TNGraph, x: Iterable[str], y: Iterable[str], eps: float = 0.0, mode: str = "step"
) -> float:
    """Smoothed H_min(X|Y) of the product link state, X and Y disjoint vertex sets.

    Edges inside X or away from X add nothing. An edge from X to Y is a pure
    bipartite state across the conditioning and contributes -H_max. An edge
    from X to the remaining vertices leaves X with the mixed marginal; these
    marginals form one classical tensor spectrum, which gets the smoothing.
    """
    x, y = set(x), set(y)
    if x & y:
        raise ValueError("X and Y must be disjoint")
    mixed = np.array([1.0])
    h_max_total = 0.0
    for e in g.edges:
        ux, vx = e.u in x, e.v in x
        if ux == vx:
            continue
        far = e.v if ux else e.u
        if far in y:
            h_max_total += e.h_max()
        else:
            mixed = tensor_spectrum(mixed, e.spectrum)
    h_mixed = smooth_min_entropy_classical(mixed / mixed.sum(), eps, mode=mode)
    return h_mixed - h_max_total


def _check_background(background) -> None:
    if background is not None:
        raise NotImplementedError("certification is implemented for product link states only")


def certify_min_cut(
    g: TNGraph,
    a: Iterable[str],
    c: Cut,
    eps: float = 0.0,
    *,
    mode: str = "step",
    background=None,
    ceiling: int = DEFAULT_CEILING,
) -> CutCertificate:
    """Largest K for which ``c`` is an (eps, K)-minimal cut, from classical entropies.

    Competitors strictly inside give H_min(Gamma \\ Delta | Gamma^c) and those
    strictly outside give H_min(Delta \\ Gamma | Gamma). No competitors: K = inf.
    """
    _check_background(background)
    verts = set(g.vertices)
    gamma = c.region
    terms = []
    for d in enumerate_cuts(g, a, ceiling):
        if d.region < gamma:
            xr, yr = gamma - d.region, verts - gamma
        elif gamma < d.region:
            xr, yr = d.region - gamma, gamma
        else:
            continue
        terms.append(ConditionalTerm(d, frozenset(xr), frozenset(yr), conditional_min_entropy(g, xr, yr, eps, mode)))
    return _certificate(terms, eps)


def certify_pair_cut(
    g: TNGraph,
    a: Iterable[str],
    c1: Cut,
    c2: Cut,
    eps: float = 0.0,
    *,
    mode: str = "step",
    background=None,
    ceiling: int = DEFAULT_CEILING,
) -> CutCertificate:
    """Shared K for a nested pair of cuts with disjoint edge sets.

    Cuts comparable to neither are listed in ``excluded`` and do not enter K.
    """
    _check_background(background)
    verts = set(g.vertices)
    classes = classify_between_cuts(g, a, c1, c2, ceiling)
    g1, g2 = c1.region, c2.region
    terms = []

    def add(d, xr, yr):
        terms.append(ConditionalTerm(d, frozenset(xr), frozenset(yr), conditional_min_entropy(g, xr, yr, eps, mode)))

    for d in classes.inside:
        add(d, g1 - d.region, verts - g1)
    for d in classes.outside:
        add(d, d.region - g2, g2)
    for d in classes.between:
        add(d, d.region - g1, g1)
        add(d, g2 - d.region, verts - g2)
    cert = _certificate(terms, eps)
    cert.excluded = list(classes.incomparable)
    return cert


def _certificate(terms: list[ConditionalTerm], eps: float) -> CutCertificate:
    if not terms:
        return CutCertificate(math.inf, None, eps, [])
    best = min(terms, key=lambda t: t.value)
    return CutCertificate(best.value, best.competitor, eps, terms)


def random_graph(
    rng: np.random.Generator,
    n_bulk: int,
    n_boundary: int,
    extra_edges: int,
    dims: Sequence[int] = (2,),
    flat: bool = True,
) -> TNGraph:
    """Random connected graph: a random tree plus extra edges, boundary vertices of degree one."""
    bulk = [f"x{i}" for i in range(n_bulk)]
    boundary = [f"b{i}" for i in range(n_boundary)]
    edges = []

    def spec(d):
        if flat:
            return "flat"
        w = rng.random(d) + 0.05
        return list(w / w.sum())

    def dim():
        return int(rng.choice(dims))

    for i in range(1, n_bulk):
        j = int(rng.integers(0, i))
        d = dim()
        edges.append((bulk[j], bulk[i], d, spec(d)))
    for b in boundary:
        d = dim()
        edges.append((b, bulk[int(rng.integers(0, n_bulk))], d, spec(d)))
    for _ in range(extra_edges):
        if n_bulk < 2:
            break
        i, j = rng.choice(n_bulk, size=2, replace=False)
        d = dim()
        edges.append((bulk[int(i)], bulk[int(j)], d, spec(d)))
    return TNGraph.build(boundary, bulk, edges)

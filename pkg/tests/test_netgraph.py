import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtnlab.netgraph import (
    CutCeilingExceeded,
    TNGraph,
    certify_min_cut,
    certify_pair_cut,
    classify_between_cuts,
    conditional_min_entropy,
    cut_edge_set,
    cut_weight,
    enumerate_cuts,
    load_graph,
    make_cut,
    max_flow_value,
    minimal_cuts,
    random_graph,
)
from rtnlab.rtncore import DensityMatrix, background_state, h_min_conditional_fixed_sigma, reduced_density


def path(d1=2, d2=2):
    return TNGraph.build(["a", "b"], ["x"], [("a", "x", d1), ("x", "b", d2)])


def chain(d1, d2, d3):
    return TNGraph.build(["a", "b"], ["x", "y"], [("a", "x", d1), ("x", "y", d2), ("y", "b", d3)])


def regions(cuts):
    return sorted(tuple(sorted(c.region)) for c in cuts)


def test_validation():
    with pytest.raises(ValueError):
        TNGraph.build(["a"], ["x"], [("a", "a", 2)])
    with pytest.raises(ValueError):
        TNGraph.build(["a", "b"], ["x", "y"], [("a", "x", 2), ("y", "b", 2)])  # disconnected
    with pytest.raises(ValueError):
        TNGraph.build(["a"], ["x"], [("a", "x", 2, [0.7, 0.7])])
    with pytest.raises(ValueError):
        TNGraph.build(["a"], ["x"], [("a", "x", 3, [0.5, 0.5])])
    with pytest.raises(ValueError):
        TNGraph.build(["a"], ["x"], [("a", "z", 2)])


def test_json_round_trip(tmp_path):
    g = TNGraph.build(["a", "b"], ["x"], [("a", "x", 2, [0.75, 0.25]), ("x", "b", 3)])
    data = json.loads(g.to_json())
    assert data["edges"][1]["spectrum"] == "flat"
    assert data["vertices"][0] == {"name": "a", "kind": "boundary"}
    p = tmp_path / "g.json"
    p.write_text(g.to_json())
    for src in (data, g.to_json(), str(p)):
        h = load_graph(src)
        assert h.to_json() == g.to_json()
    assert np.allclose(load_graph(data).edges[1].spectrum, [1 / 3] * 3)


def test_enumerate_examples():
    assert regions(enumerate_cuts(path(), ["a"])) == [("a",), ("a", "x")]
    assert len(enumerate_cuts(chain(2, 2, 2), ["a"])) == 4
    g = TNGraph.build(["a", "b"], [], [("a", "b", 2)])
    assert regions(enumerate_cuts(g, ["a"])) == [("a",)]
    with pytest.raises(CutCeilingExceeded):
        enumerate_cuts(chain(2, 2, 2), ["a"], ceiling=1)


def test_cut_edge_set_examples():
    g = path()
    assert cut_edge_set(g, make_cut(g, ["a"])) == [0]
    assert cut_edge_set(g, make_cut(g, ["a", "x"])) == [1]
    assert cut_edge_set(g, make_cut(g, ["a", "b", "x"])) == []
    with pytest.raises(ValueError):
        make_cut(g, ["a", "b", "x"], ["a"])


def test_minimal_cut_examples():
    mc = minimal_cuts(path(5, 5), ["a"])
    assert mc.flag == "exactly-two-nonintersecting" and mc.t == 1
    D = 3
    g = chain(D, D * D, D)
    mc = minimal_cuts(g, ["a"])
    assert regions(mc.cuts) == [("a",), ("a", "x", "y")]
    assert [cut_edge_set(g, c) for c in mc.cuts] == [[0], [2]]
    star = TNGraph.build(["a", "b"], ["x"], [("x", "a", 4), ("x", "b", 2)])
    mc = minimal_cuts(star, ["a"])
    assert mc.flag == "unique" and regions(mc.cuts) == [("a", "x")]


def test_minimal_cuts_t_ratio():
    g = chain(4, 64, 8)
    mc = minimal_cuts(g, ["a"], "count")
    assert mc.flag == "other"  # three single-edge cuts tie by count
    g = path(4, 8)
    mc = minimal_cuts(g, ["a"], "count")
    assert mc.flag == "exactly-two-nonintersecting"
    assert mc.t == Fraction(1, 2)
    assert regions(mc.cuts[:1]) == [("a",)]


def test_weights_exact_big_integers():
    leaves = [f"a{i}" for i in range(20)]
    g = TNGraph.build(leaves + ["b"], ["x"], [(v, "x", 16) for v in leaves] + [("x", "b", 2)])
    c = make_cut(g, leaves)
    assert cut_weight(g, c) == 2**80
    assert type(cut_weight(g, c)) is int
    mc = minimal_cuts(g, leaves)
    assert mc.flag == "unique" and mc.weight == 2


def test_max_flow_examples():
    assert max_flow_value(path(), ["a"]) == 1
    g = TNGraph.build(
        ["a", "b"], ["x", "y", "z"], [("a", "z", 2), ("z", "x", 2), ("z", "y", 2), ("x", "b", 2), ("y", "b", 2)]
    )
    # the single a-z edge bottlenecks; with a doubled a-z link the two branches give 2
    assert max_flow_value(g, ["a"]) == 1
    g2 = TNGraph.build(
        ["a", "b"],
        ["x", "y", "z"],
        [("a", "z", 2), ("a", "z", 2), ("z", "x", 2), ("z", "y", 2), ("x", "b", 2), ("y", "b", 2)],
    )
    assert max_flow_value(g2, ["a"]) == 2


@pytest.mark.parametrize("seed", range(50))
def test_max_flow_equals_min_cut(seed):
    rng = np.random.default_rng(seed)
    nb = int(rng.integers(1, 9))
    g = random_graph(rng, nb, int(rng.integers(2, 5)), int(rng.integers(0, 6)))
    boundary = list(g.boundary)
    a = boundary[: int(rng.integers(1, len(boundary)))]
    best = min(len(cut_edge_set(g, c)) for c in enumerate_cuts(g, a))
    assert max_flow_value(g, a) == best


@pytest.mark.parametrize("seed", range(10))
def test_complement_symmetry(seed):
    rng = np.random.default_rng(100 + seed)
    g = random_graph(rng, 4, 3, 2)
    a = [g.boundary[0]]
    abar = [b for b in g.boundary if b not in a]
    for c in enumerate_cuts(g, a):
        comp = make_cut(g, set(g.vertices) - c.region, abar)
        assert cut_edge_set(g, c) == cut_edge_set(g, comp)


def test_classify_chain():
    g = chain(2, 4, 2)
    c1, c2 = make_cut(g, ["a"]), make_cut(g, ["a", "x", "y"])
    cls = classify_between_cuts(g, ["a"], c1, c2)
    assert regions(cls.between) == [("a", "x"), ("a", "y")]
    assert cls.inside == [] and cls.outside == [] and cls.incomparable == []
    with pytest.raises(ValueError):
        classify_between_cuts(g, ["a"], c1, c1)
    h = TNGraph.build(["a", "b"], [], [("a", "b", 2)])
    c = make_cut(h, ["a"])
    with pytest.raises(ValueError):
        classify_between_cuts(h, ["a"], c, c)


@pytest.mark.parametrize("seed", range(10))
def test_classify_partitions(seed):
    rng = np.random.default_rng(200 + seed)
    g = random_graph(rng, 5, 3, 1)
    a = [g.boundary[0]]
    cuts = enumerate_cuts(g, a)
    pairs = [
        (c1, c2)
        for c1, c2 in itertools.combinations(cuts, 2)
        if c1.region < c2.region and not set(cut_edge_set(g, c1)) & set(cut_edge_set(g, c2))
    ]
    if not pairs:
        return
    c1, c2 = pairs[0]
    cls = classify_between_cuts(g, a, c1, c2)
    buckets = [cls.inside, cls.outside, cls.between, cls.incomparable]
    flat = [c.region for b in buckets for c in b] + [c1.region, c2.region]
    assert sorted(map(sorted, flat)) == sorted(map(sorted, (c.region for c in cuts)))


def quantum_h_min_cond(g, x, y, sigma_factors=None):
    """H_min(X|Y) of the product link state computed on the density matrix, at a given sigma."""
    bg = background_state(g)
    rho = reduced_density(bg, list(x) + list(y))
    sigma = None
    if sigma_factors is not None:
        sigma = DensityMatrix.from_matrix(sigma_factors)
    return h_min_conditional_fixed_sigma(rho, list(x), sigma)


def test_conditional_min_entropy_matches_quantum():
    p = np.array([0.7, 0.2, 0.1])
    q = np.array([0.6, 0.4])
    g = TNGraph.build(["a", "b"], ["x"], [("a", "x", 3, list(p)), ("x", "b", 2, list(q))])
    classical = conditional_min_entropy(g, ["x"], ["a"])
    assert classical == pytest.approx(-math.log2(0.6) - 2 * math.log2(np.sqrt(p).sum()))
    # optimal sigma on a is proportional to sqrt(p)
    sig = np.diag(np.sqrt(p) / np.sqrt(p).sum())
    assert quantum_h_min_cond(g, ["x"], ["a"], sig) == pytest.approx(classical, abs=1e-9)
    # any other sigma gives a smaller value
    assert quantum_h_min_cond(g, ["x"], ["a"]) <= classical + 1e-9


def test_certify_flat_margin():
    D = 4
    g = TNGraph.build(["a", "b1", "b2"], ["x"], [("a", "x", D), ("x", "b1", D), ("x", "b2", D)])
    c = make_cut(g, ["a"])
    cert = certify_min_cut(g, ["a"], c)
    assert cert.K == pytest.approx(math.log2(D))
    h = TNGraph.build(["a", "b"], [], [("a", "b", 2)])
    assert certify_min_cut(h, ["a"], make_cut(h, ["a"])).K == math.inf
    with pytest.raises(NotImplementedError):
        certify_min_cut(g, ["a"], c, background=object())


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=4), st.floats(0.0, 0.9), st.floats(0.0, 0.9))
def test_certificate_monotone_in_eps(w, e1, e2):
    s = list(np.asarray(w) / sum(w))
    g = TNGraph.build(["a", "b"], ["x"], [("a", "x", len(s), s), ("x", "b", 8)])
    c = make_cut(g, ["a"])
    lo, hi = sorted([e1, e2])
    assert certify_min_cut(g, ["a"], c, lo).K <= certify_min_cut(g, ["a"], c, hi).K + 1e-12


def test_certify_pair_chain():
    g = chain(4, 16, 4)
    c1, c2 = make_cut(g, ["a"]), make_cut(g, ["a", "x", "y"])
    cert = certify_pair_cut(g, ["a"], c1, c2)
    assert cert.K == pytest.approx(2.0)
    assert cert.excluded == []

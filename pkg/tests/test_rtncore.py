import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtnlab.measures import renyi_entropy
from rtnlab.netgraph import TNGraph
from rtnlab.replicaoracle import cut_sum_k2
from rtnlab.rtncore import (
    DensityMatrix,
    DimensionOverflowError,
    PureState,
    TrialRNG,
    background_state,
    build_rtn_state,
    build_rtn_state_from_background,
    fidelity,
    generalized_fidelity,
    h2_conditional,
    h_max,
    h_min,
    h_min_conditional_fixed_sigma,
    log_negativity,
    negativity_spectrum,
    partial_transpose,
    purified_distance,
    reduced_density,
    sample_gaussian_tensor,
    schmidt_spectrum,
    spectrum,
    trace_distance,
)


def bell(d):
    return PureState(np.eye(d, dtype=complex).ravel() / math.sqrt(d), (d, d), ("A", "B"))


def random_density(rng, d, rank=None):
    rank = rank or d
    x = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = x @ x.conj().T
    return m / np.trace(m).real


def test_gaussian_tensor_statistics():
    rng = np.random.default_rng(0)
    norms = np.array([np.vdot(v, v).real for v in (sample_gaussian_tensor(6, rng) for _ in range(10_000))])
    se = norms.std(ddof=1) / math.sqrt(norms.size)
    assert abs(norms.mean() - 6) < 3 * se
    draws = np.array([sample_gaussian_tensor(2, rng) for _ in range(20_000)])
    parts = np.concatenate([draws.real, draws.imag], axis=1)
    cov = np.cov(parts.T)
    assert np.allclose(cov, np.eye(4) / 2, atol=0.03)


def test_gaussian_tensor_deterministic():
    a = sample_gaussian_tensor(5, TrialRNG(9, 2).for_vertex(1))
    b = sample_gaussian_tensor(5, TrialRNG(9, 2).for_vertex(1))
    c = sample_gaussian_tensor(5, TrialRNG(9, 3).for_vertex(1))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_single_vertex_explicit_formula():
    p = np.array([0.5, 0.3, 0.2])
    q = np.array([0.9, 0.1])
    g = TNGraph.build(["a", "b"], ["x"], [("a", "x", 3, list(p)), ("x", "b", 2, list(q))])
    s = build_rtn_state(g, TrialRNG(4, 0))
    psi = sample_gaussian_tensor(6, TrialRNG(4, 0).for_vertex(0)).reshape(3, 2)
    expected = np.sqrt(p)[:, None] * np.sqrt(q)[None, :] * psi.conj()
    assert s.dims == (3, 2)
    assert np.allclose(s.amplitudes, expected.ravel())


def test_no_bulk_returns_link_state():
    g = TNGraph.build(["a", "b"], [], [("a", "b", 2, [0.75, 0.25])])
    s = build_rtn_state(g, TrialRNG(1))
    assert np.allclose(s.amplitudes, [math.sqrt(0.75), 0, 0, math.sqrt(0.25)])


def chain_graph():
    return TNGraph.build(
        ["a", "b"], ["x", "y"], [("a", "x", 2, [0.6, 0.4]), ("x", "y", 3), ("y", "b", 2, [0.7, 0.3])]
    )


def test_background_route_agrees():
    g = chain_graph()
    bg = background_state(g)
    for trial in range(3):
        rng = TrialRNG(11, trial)
        s1 = build_rtn_state(g, rng)
        s2 = build_rtn_state_from_background(bg, ["x", "y"], rng)
        assert np.allclose(s1.amplitudes, s2.amplitudes)
    with pytest.raises(ValueError):
        build_rtn_state_from_background(bg, ["nope"], TrialRNG(0))


def test_trivial_bulk_background_is_scalar_multiple():
    phi = bell(2)
    bg = PureState(np.kron(phi.amplitudes, [1.0]), (2, 2, 1), ("A", "B", "x"))
    s = build_rtn_state_from_background(bg, ["x"], TrialRNG(3))
    c = s.amplitudes[0] / phi.amplitudes[0]
    assert np.allclose(s.amplitudes, c * phi.amplitudes)
    assert s.labels == ("A", "B")


def test_contraction_order_invariance():
    g = chain_graph()
    s1 = build_rtn_state(g, TrialRNG(5), order=["x", "y"])
    s2 = build_rtn_state(g, TrialRNG(5), order=["y", "x"])
    assert np.allclose(s1.amplitudes, s2.amplitudes)


def test_size_cap():
    g = chain_graph()
    with pytest.raises(DimensionOverflowError):
        build_rtn_state(g, TrialRNG(5), size_cap=2)


def test_mean_trace_and_purity_match_cut_sum():
    # E tr rho = 1 and E tr rho_A^2 = cut sum, within 3 standard errors
    g = chain_graph()
    n = 3000
    traces, purities = [], []
    for i in range(n):
        s = build_rtn_state(g, TrialRNG(21, i))
        lam = schmidt_spectrum(s, s.labels_for(["a"]))
        traces.append(lam.sum())
        purities.append(np.sum(lam**2))
    for vals, target in ((traces, 1.0), (purities, float(cut_sum_k2(g, ["a"], exact=True)))):
        vals = np.asarray(vals)
        assert abs(vals.mean() - target) < 3 * vals.std(ddof=1) / math.sqrt(n)


def test_reduced_density_examples():
    d = reduced_density(bell(3), ["A"])
    assert np.allclose(d.matrix, np.eye(3) / 3)
    a = np.array([0.6, 0.8j])
    b = np.array([1.0, 0.0, 0.0])
    prod = PureState(np.kron(a, b), (2, 3), ("A", "B"))
    assert np.allclose(reduced_density(prod, ["A"]).matrix, np.outer(a, a.conj()))
    with pytest.raises(KeyError):
        reduced_density(prod, ["C"])


def test_spectrum_examples():
    assert np.allclose(spectrum(DensityMatrix.from_matrix(np.eye(4) / 4)), [0.25] * 4)
    assert np.allclose(spectrum(DensityMatrix.from_matrix(np.diag([0.1, 0.6, 0.3]))), [0.6, 0.3, 0.1])
    with pytest.raises(ValueError):
        spectrum(DensityMatrix.from_matrix(np.array([[0.5, 0.3], [0.0, 0.5]])))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 4))
def test_schmidt_symmetry(seed, da, db):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=da * db) + 1j * rng.normal(size=da * db)
    s = PureState(v, (da, db), ("A", "B"))
    la = spectrum(reduced_density(s, ["A"]))
    lb = spectrum(reduced_density(s, ["B"]))
    k = min(da, db)
    assert np.allclose(la[:k], lb[:k])
    assert np.allclose(la[k:], 0, atol=1e-10) and np.allclose(lb[k:], 0, atol=1e-10)
    assert np.allclose(schmidt_spectrum(s, ["A"]), la)


def test_partial_transpose_examples():
    rho = reduced_density(bell(2), ["A", "B"])
    w = negativity_spectrum(rho, ["B"])
    assert np.allclose(np.sort(w), [-0.5, 0.5, 0.5, 0.5])
    assert log_negativity(rho, ["B"]) == pytest.approx(1.0)
    rng = np.random.default_rng(3)
    ra, rb = random_density(rng, 2), random_density(rng, 3)
    prod = DensityMatrix(np.kron(ra, rb), (2, 3), ("A", "B"))
    assert np.allclose(np.sort(negativity_spectrum(prod, ["B"])), np.sort(np.linalg.eigvalsh(prod.matrix)))
    sep = DensityMatrix(np.diag([0.5, 0, 0, 0.5]).astype(complex), (2, 2), ("A", "B"))
    assert log_negativity(sep, ["B"]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        log_negativity(DensityMatrix(np.zeros((4, 4), dtype=complex), (2, 2), ("A", "B")), ["B"])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_partial_transpose_involution(seed):
    rng = np.random.default_rng(seed)
    m = random_density(rng, 6)
    d = DensityMatrix(m, (2, 3), ("A", "B"))
    pt = partial_transpose(d, ["B"])
    back = partial_transpose(DensityMatrix(pt, (2, 3), ("A", "B")), ["B"])
    assert np.allclose(back, m)
    assert np.sum(negativity_spectrum(d, ["B"])) == pytest.approx(1.0)


def test_one_shot_entropies():
    d = DensityMatrix.from_matrix(np.eye(4) / 4)
    assert h_min(d) == pytest.approx(2.0) and h_max(d) == pytest.approx(2.0)
    pure = reduced_density(PureState(np.array([0.6, 0.8], dtype=complex), (2,), ("A",)), ["A"])
    assert h_min(pure) == pytest.approx(0.0, abs=1e-12)
    assert h_max(pure) == pytest.approx(0.0, abs=1e-12)


def test_h2_conditional_examples():
    rng = np.random.default_rng(8)
    ra, rb = random_density(rng, 2), random_density(rng, 3)
    prod = DensityMatrix(np.kron(ra, rb), (2, 3), ("A", "B"))
    assert h2_conditional(prod, ["A"]) == pytest.approx(-math.log2(np.trace(ra @ ra).real))
    for D in (2, 3):
        rho = reduced_density(bell(D), ["A", "B"])
        assert h2_conditional(rho, ["A"]) == pytest.approx(-math.log2(D))


def test_h_min_conditional_examples():
    da, db = 2, 3
    d = DensityMatrix(np.eye(da * db, dtype=complex) / (da * db), (da, db), ("A", "B"))
    sig = DensityMatrix.from_matrix(np.eye(db) / db)
    assert h_min_conditional_fixed_sigma(d, ["A"], sig) == pytest.approx(1.0)
    a = np.array([1.0, 0.0], dtype=complex)
    b = np.array([0.0, 1.0, 0.0], dtype=complex)
    pure = reduced_density(PureState(np.kron(a, b), (2, 3), ("A", "B")), ["A", "B"])
    assert h_min_conditional_fixed_sigma(pure, ["A"]) == pytest.approx(0.0, abs=1e-9)
    wrong = DensityMatrix.from_matrix(np.diag([1.0, 0.0, 0.0]))
    assert h_min_conditional_fixed_sigma(pure, ["A"], wrong) == -math.inf
    # H_min <= H_2 for normalized states
    rng = np.random.default_rng(2)
    r = DensityMatrix(random_density(rng, 6), (2, 3), ("A", "B"))
    assert h_min_conditional_fixed_sigma(r, ["A"]) <= h2_conditional(r, ["A"]) + 1e-9


def test_distances_examples():
    rng = np.random.default_rng(1)
    r = random_density(rng, 3)
    assert trace_distance(r, r) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(r, r) == pytest.approx(1.0)
    half = r / 2
    assert fidelity(half, half) == pytest.approx(0.5)
    p0, p1 = np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)
    assert trace_distance(p0, p1) == pytest.approx(1.0)
    assert fidelity(p0, p1) == pytest.approx(0.0, abs=1e-12)
    assert purified_distance(p0, p1) == pytest.approx(1.0)
    assert generalized_fidelity(half, half) == pytest.approx(0.5 + 0.5)
    with pytest.raises(ValueError):
        trace_distance(np.eye(2), np.eye(3))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_purified_distance_dominates_trace_distance(seed):
    rng = np.random.default_rng(seed)
    a, b = random_density(rng, 3), random_density(rng, 3)
    assert trace_distance(a, b) <= purified_distance(a, b) + 1e-9


def von_neumann(m):
    lam = spectrum(DensityMatrix.from_matrix(m))
    return renyi_entropy(lam, 1)


def binary_entropy(t):
    return 0.0 if t in (0, 1) else -t * math.log2(t) - (1 - t) * math.log2(1 - t)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5), st.floats(1e-3, 0.3))
def test_fannes_audenaert_on_perturbed_pairs(seed, d, size):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, d)
    sigma = (1 - size) * rho + size * random_density(rng, d)
    T = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho - sigma)))
    gap = abs(von_neumann(rho) - von_neumann(sigma))
    # sharp form
    assert gap <= T * math.log2(d - 1) + binary_entropy(T) + 1e-9 if d > 2 else gap <= binary_entropy(T) + 1e-9
    # the T log d - T log T form, for T <= 1/e
    if T <= 1 / math.e:
        assert gap <= T * math.log2(d) - T * math.log2(T) + 1e-9


def test_fannes_short_form_fails_at_rank_deficient_state():
    # a pure state against a nearby mixed one: the short form is too weak here,
    # while the sharp form T log(d-1) + h(T) holds with equality
    rho = np.diag([1.0, 0.0]).astype(complex)
    sigma = np.diag([0.9, 0.1]).astype(complex)
    T, gap = 0.1, von_neumann(sigma)
    assert gap > T * math.log2(2) - T * math.log2(T)
    assert gap == pytest.approx(binary_entropy(T))

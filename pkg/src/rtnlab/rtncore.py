"""Dense sampling and linear algebra for random tensor network states.

The boundary state is ``|rho> = (I ⊗ <psi|) |phi>`` with ``|phi>`` the product
of link states ``sum_i sqrt(lambda_i) |ii>`` and one standard complex Gaussian
tensor per bulk vertex. It is not normalized: ``E tr rho = tr phi``.

Every boundary half-edge is its own subsystem, labelled ``"<vertex>/<edge index>"``.
Subsystems are ordered by sorted boundary vertex name, then by edge index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .netgraph import TNGraph

__all__ = [
    "HERMITIAN_RTOL",
    "CLAMP_RTOL",
    "DEFAULT_SIZE_CAP",
    "DimensionOverflowError",
    "TrialRNG",
    "PureState",
    "DensityMatrix",
    "sample_gaussian_tensor",
    "background_state",
    "build_rtn_state",
    "build_rtn_state_from_background",
    "contraction_order",
    "reduced_density",
    "schmidt_spectrum",
    "spectrum",
    "partial_transpose",
    "negativity_spectrum",
    "log_negativity",
    "h_min",
    "h_max",
    "h2_conditional",
    "h_min_conditional_fixed_sigma",
    "trace_distance",
    "fidelity",
    "generalized_fidelity",
    "purified_distance",
    "vertex_of",
]

HERMITIAN_RTOL = 1e-10
CLAMP_RTOL = 1e-10
DEFAULT_SIZE_CAP = 1 << 26  # complex entries in any intermediate tensor


class DimensionOverflowError(RuntimeError):
    pass


# randomness ------------------------------------------------------------------


@dataclass(frozen=True)
class TrialRNG:
    """Counter-based substreams: one independent generator per (trial, vertex)."""

    seed: int
    trial: int = 0

    def for_vertex(self, index: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.trial, index))
        return np.random.Generator(np.random.Philox(ss))


def _vertex_rng(rng, index: int) -> np.random.Generator:
    if isinstance(rng, TrialRNG):
        return rng.for_vertex(index)
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return TrialRNG(int(rng)).for_vertex(index)
    raise TypeError(f"unsupported rng {type(rng).__name__}")


def sample_gaussian_tensor(dim: int, rng) -> np.ndarray:
    """i.i.d. (x + iy)/sqrt(2) entries, x and y standard normal."""
    gen = _vertex_rng(rng, 0) if not isinstance(rng, np.random.Generator) else rng
    re = gen.standard_normal(dim)
    im = gen.standard_normal(dim)
    return (re + 1j * im) / math.sqrt(2)


# states ----------------------------------------------------------------------


def vertex_of(label: str) -> str:
    """Vertex part of a half-edge label ``"<vertex>/<edge>"``."""
    return label.rsplit("/", 1)[0] if "/" in label else label


def _check_labels(labels: Sequence[str], dims: Sequence[int], size: int) -> None:
    if len(set(labels)) != len(labels):
        raise ValueError("subsystem labels must be unique")
    if len(labels) != len(dims):
        raise ValueError("one label per subsystem dimension")
    if math.prod(dims) != size:
        raise ValueError(f"dims {tuple(dims)} do not match size {size}")


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(self.labels))
        _check_labels(self.labels, self.dims, amp.size)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims) if self.dims else self.amplitudes.reshape(())

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def labels_for(self, vertices: Iterable[str]) -> list[str]:
        vs = set(vertices)
        return [l for l in self.labels if vertex_of(l) in vs]

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "labels": list(self.labels),
            "amplitudes": _interleave(self.amplitudes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> PureState:
        return cls(_deinterleave(data["amplitudes"]), tuple(data["dims"]), tuple(data["labels"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> PureState:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(self.labels))
        _check_labels(self.labels, self.dims, m.shape[0])

    @classmethod
    def from_pure(cls, s: PureState) -> DensityMatrix:
        return cls(np.outer(s.amplitudes, s.amplitudes.conj()), s.dims, s.labels)

    @classmethod
    def from_matrix(cls, m, dims: Sequence[int] | None = None, labels: Sequence[str] | None = None) -> DensityMatrix:
        m = np.asarray(m, dtype=complex)
        if dims is None:
            dims = (m.shape[0],)
        if labels is None:
            labels = tuple(f"s{i}" for i in range(len(dims)))
        return cls(m, tuple(dims), tuple(labels))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermitian_error(self) -> float:
        scale = max(float(np.max(np.abs(self.matrix))), np.finfo(float).tiny)
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) / scale

    def normalized(self) -> DensityMatrix:
        return DensityMatrix(self.matrix / self.trace(), self.dims, self.labels)

    def permuted(self, order: Sequence[str]) -> DensityMatrix:
        """Reorder subsystems to the given label order."""
        idx = [self.labels.index(l) for l in order]
        n = len(self.dims)
        t = self.matrix.reshape(self.dims + self.dims)
        t = t.transpose(idx + [n + i for i in idx])
        dims = tuple(self.dims[i] for i in idx)
        d = math.prod(dims)
        return DensityMatrix(t.reshape(d, d), dims, tuple(order))

    def to_dict(self) -> dict:
        return {"dims": list(self.dims), "labels": list(self.labels), "matrix": _interleave(self.matrix.ravel())}

    @classmethod
    def from_dict(cls, data: dict) -> DensityMatrix:
        flat = _deinterleave(data["matrix"])
        d = int(round(math.isqrt(flat.size)))
        return cls(flat.reshape(d, d), tuple(data["dims"]), tuple(data["labels"]))


def _interleave(z: np.ndarray) -> list[float]:
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out.tolist()


def _deinterleave(vals: Sequence[float]) -> np.ndarray:
    a = np.asarray(vals, dtype=float)
    return a[0::2] + 1j * a[1::2]


# network contraction ---------------------------------------------------------


@dataclass
class _Node:
    data: np.ndarray
    legs: list  # ("bond", edge) contracted later, or ("open", vertex, edge)


def _link_weights(g: TNGraph) -> list[np.ndarray]:
    return [np.sqrt(np.asarray(e.spectrum, dtype=float)) for e in g.edges]


def _vertex_edges(g: TNGraph, v: str) -> list[int]:
    return [i for i, e in enumerate(g.edges) if v in e.endpoints]


def contraction_order(g: TNGraph) -> list[str]:
    """Greedy order over bulk vertices: always merge the vertex giving the smallest tensor."""
    bulk = list(g.bulk)
    legs_of = {v: {i: g.edges[i].dim for i in _vertex_edges(g, v)} for v in bulk}
    current: dict[int, int] = {}  # open legs of the running tensor
    order: list[str] = []
    remaining = list(bulk)
    while remaining:
        best, best_size = None, None
        for v in remaining:
            # shared bonds become internal, everything else stays open
            merged = {i: d for i, d in current.items() if i not in legs_of[v]}
            merged.update({i: d for i, d in legs_of[v].items() if i not in current})
            size = math.prod(merged.values())
            if best_size is None or size < best_size:
                best, best_size = v, size
        order.append(best)
        remaining.remove(best)
        new = {i: d for i, d in current.items() if i not in legs_of[best]}
        new.update({i: d for i, d in legs_of[best].items() if i not in current})
        current = new
    return order


def _contract_pair(a: _Node, b: _Node, cap: int) -> _Node:
    shared = [l for l in a.legs if l[0] == "bond" and l in b.legs]
    ia = [a.legs.index(l) for l in shared]
    ib = [b.legs.index(l) for l in shared]
    legs = [l for l in a.legs if l not in shared] + [l for l in b.legs if l not in shared]
    size = (a.data.size // max(1, math.prod(a.data.shape[i] for i in ia))) * (
        b.data.size // max(1, math.prod(b.data.shape[i] for i in ib))
    )
    if size > cap:
        raise DimensionOverflowError(f"intermediate tensor of {size} entries exceeds cap {cap}")
    data = np.tensordot(a.data, b.data, axes=(ia, ib))
    return _Node(data, legs)


def build_rtn_state(
    g: TNGraph,
    rng,
    *,
    order: Sequence[str] | None = None,
    size_cap: int = DEFAULT_SIZE_CAP,
) -> PureState:
    """Sample the boundary state for graph ``g``.

    ``rng`` is a :class:`TrialRNG` (bulk vertex ``i`` in sorted order uses
    substream ``i``), a seed, or a single Generator drawn from in sorted order.
    """
    weights = _link_weights(g)
    bulk = g.bulk
    bulk_set = set(bulk)
    nodes: dict[str, _Node] = {}
    absorbed: set[int] = set()
    for idx, v in enumerate(bulk):
        eids = _vertex_edges(g, v)
        shape = tuple(g.edges[i].dim for i in eids)
        if math.prod(shape) > size_cap:
            raise DimensionOverflowError(f"tensor at {v} has {math.prod(shape)} entries")
        psi = sample_gaussian_tensor(math.prod(shape), _vertex_rng(rng, idx))
        t = psi.conj().reshape(shape) if shape else psi.conj().reshape(())
        legs = []
        for axis, i in enumerate(eids):
            e = g.edges[i]
            if i not in absorbed:
                w = weights[i].reshape([-1 if a == axis else 1 for a in range(len(shape))])
                t = t * w
                absorbed.add(i)
            other = e.other(v)
            legs.append(("bond", i) if other in bulk_set else ("open", other, i))
        nodes[v] = _Node(t, legs)

    acc = _Node(np.ones(()), [])
    for v in (order if order is not None else contraction_order(g)):
        if v not in nodes:
            raise ValueError(f"order lists {v!r}, which is not a bulk vertex")
        acc = _contract_pair(acc, nodes.pop(v), size_cap)
    if nodes:
        raise ValueError(f"order misses bulk vertices {sorted(nodes)}")

    # boundary-boundary links are untouched by the tensors
    for i, e in enumerate(g.edges):
        if e.u not in bulk_set and e.v not in bulk_set:
            acc = _contract_pair(acc, _Node(np.diag(weights[i]).astype(complex), [("open", e.u, i), ("open", e.v, i)]), size_cap)

    target = [("open", b, i) for b in g.boundary for i in _vertex_edges(g, b)]
    perm = [acc.legs.index(l) for l in target]
    data = np.transpose(acc.data, perm) if perm else acc.data
    dims = tuple(g.edges[i].dim for (_, _, i) in target)
    labels = tuple(f"{b}/{i}" for (_, b, i) in target)
    return PureState(np.ascontiguousarray(data).ravel(), dims, labels)


def background_state(g: TNGraph, extra: PureState | None = None) -> PureState:
    """Product of link states as a state on the vertex systems (sorted names).

    Each vertex system is the tensor product of its half-edges in edge order.
    ``extra`` (e.g. a reference system) is appended as a tensor factor.
    """
    verts = sorted(g.vertices)
    weights = _link_weights(g)
    half = [(v, i) for v in verts for i in _vertex_edges(g, v)]
    data = np.ones(())
    legs: list = []
    for i, e in enumerate(g.edges):
        data = np.multiply.outer(data, np.diag(weights[i]).astype(complex))
        legs.extend([(e.u, i), (e.v, i)])
    perm = [legs.index(h) for h in half]
    data = np.transpose(data, perm)
    dims = tuple(math.prod(g.edges[i].dim for i in _vertex_edges(g, v)) for v in verts)
    state = PureState(np.ascontiguousarray(data).ravel(), dims, tuple(verts))
    if extra is not None:
        state = PureState(
            np.kron(state.amplitudes, extra.amplitudes), state.dims + extra.dims, state.labels + extra.labels
        )
    return state


def build_rtn_state_from_background(
    background: PureState, bulk_labels: Sequence[str], rng
) -> PureState:
    """Project each bulk system of a general background onto a Gaussian tensor.

    Bulk label ``i`` in sorted order uses substream ``i``, matching
    :func:`build_rtn_state` on the corresponding product background.
    """
    bulk_sorted = sorted(bulk_labels)
    missing = [l for l in bulk_sorted if l not in background.labels]
    if missing:
        raise ValueError(f"bulk labels {missing} not in background")
    t = background.tensor()
    labels = list(background.labels)
    dims = list(background.dims)
    for idx, lab in enumerate(bulk_sorted):
        ax = labels.index(lab)
        psi = sample_gaussian_tensor(dims[ax], _vertex_rng(rng, idx))
        t = np.tensordot(t, psi.conj(), axes=([ax], [0]))
        del labels[ax], dims[ax]
    return PureState(np.ascontiguousarray(t).ravel(), tuple(dims), tuple(labels))


# reduced states and spectra ---------------------------------------------------


def _split(labels: Sequence[str], keep: Iterable[str]) -> tuple[list[int], list[int]]:
    keep = list(keep)
    for l in keep:
        if l not in labels:
            raise KeyError(f"unknown label {l!r}")
    ki = [labels.index(l) for l in keep]
    rest = [i for i in range(len(labels)) if i not in ki]
    return ki, rest


def reduced_density(s: PureState | DensityMatrix, keep_labels: Iterable[str]) -> DensityMatrix:
    """Partial trace onto ``keep_labels`` (in the given order)."""
    keep_labels = list(keep_labels)
    if isinstance(s, DensityMatrix):
        ki, rest = _split(s.labels, keep_labels)
        n = len(s.dims)
        t = s.matrix.reshape(s.dims + s.dims).transpose(ki + rest + [n + i for i in ki] + [n + i for i in rest])
        dk = math.prod(s.dims[i] for i in ki)
        dr = math.prod(s.dims[i] for i in rest)
        t = t.reshape(dk, dr, dk, dr)
        m = np.einsum("ajbj->ab", t)
        return DensityMatrix(m, tuple(s.dims[i] for i in ki), tuple(keep_labels))
    ki, rest = _split(s.labels, keep_labels)
    t = s.tensor().transpose(ki + rest)
    dk = math.prod(s.dims[i] for i in ki)
    mat = t.reshape(dk, -1)
    return DensityMatrix(mat @ mat.conj().T, tuple(s.dims[i] for i in ki), tuple(keep_labels))


def schmidt_spectrum(s: PureState, keep_labels: Iterable[str]) -> np.ndarray:
    """Nonzero-padded eigenvalues of the reduced state via SVD, non-increasing."""
    ki, rest = _split(s.labels, list(keep_labels))
    t = s.tensor().transpose(ki + rest)
    dk = math.prod(s.dims[i] for i in ki)
    sv = np.linalg.svd(t.reshape(dk, -1), compute_uv=False)
    out = np.zeros(dk)
    out[: sv.size] = sv**2
    return out


def _eigh(d: DensityMatrix | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = d.matrix if isinstance(d, DensityMatrix) else np.asarray(d, dtype=complex)
    scale = max(float(np.max(np.abs(m))), np.finfo(float).tiny)
    if float(np.max(np.abs(m - m.conj().T))) > HERMITIAN_RTOL * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    return np.linalg.eigh((m + m.conj().T) / 2)


def _clamp(vals: np.ndarray, ref: float) -> np.ndarray:
    tol = CLAMP_RTOL * ref
    if np.any(vals < -max(tol, 1e-300)):
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {vals.min():.3e})")
    return np.where(vals < tol, 0.0, vals)


def spectrum(d: DensityMatrix) -> np.ndarray:
    """Eigenvalues, non-increasing, with |negatives| below tolerance clamped to 0."""
    w, _ = _eigh(d)
    ref = float(np.max(np.abs(w))) if w.size else 0.0
    w = _clamp(w, ref)
    return np.sort(w)[::-1]


def _psd_parts(d: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    w, v = _eigh(d)
    ref = float(np.max(np.abs(w))) if w.size else 0.0
    return _clamp(w, ref), v


def partial_transpose(d: DensityMatrix, labels_B: Iterable[str]) -> np.ndarray:
    """Transpose the B factors; returns the (Hermitian, possibly indefinite) matrix."""
    labels_B = list(labels_B)
    for l in labels_B:
        if l not in d.labels:
            raise KeyError(f"unknown label {l!r}")
    n = len(d.dims)
    axes = list(range(2 * n))
    for l in labels_B:
        i = d.labels.index(l)
        axes[i], axes[n + i] = n + i, i
    t = d.matrix.reshape(d.dims + d.dims).transpose(axes)
    return t.reshape(d.dim, d.dim)


def negativity_spectrum(d: DensityMatrix, labels_B: Iterable[str]) -> np.ndarray:
    """Signed eigenvalues of the partial transpose, sorted by |value| descending."""
    w, _ = _eigh(partial_transpose(d, labels_B))
    return w[np.argsort(-np.abs(w), kind="stable")]


def log_negativity(d: DensityMatrix, labels_B: Iterable[str]) -> float:
    tr = d.trace()
    if tr <= 0:
        raise ValueError("zero trace")
    w = negativity_spectrum(d, labels_B)
    return math.log2(math.fsum(np.abs(w)) / tr)


# one-shot entropies -------------------------------------------------------------


def h_min(d: DensityMatrix) -> float:
    lam = spectrum(d)
    if lam[0] <= 0:
        raise ValueError("zero matrix")
    return -math.log2(lam[0])


def h_max(d: DensityMatrix) -> float:
    lam = spectrum(d)
    if lam[0] <= 0:
        raise ValueError("zero matrix")
    return 2 * math.log2(math.fsum(np.sqrt(lam)))


def _matrix_power_on_support(d: DensityMatrix, power: float) -> tuple[np.ndarray, np.ndarray]:
    """(d^power on its support, projector onto the support)."""
    w, v = _psd_parts(d)
    ref = float(w.max()) if w.size else 0.0
    keep = w > CLAMP_RTOL * ref
    wp = np.zeros_like(w)
    wp[keep] = w[keep] ** power
    return (v * wp) @ v.conj().T, (v[:, keep]) @ v[:, keep].conj().T


def _ordered(d: DensityMatrix, labels_A: Sequence[str]) -> tuple[DensityMatrix, list[str]]:
    labels_A = list(labels_A)
    for l in labels_A:
        if l not in d.labels:
            raise KeyError(f"unknown label {l!r}")
    labels_B = [l for l in d.labels if l not in labels_A]
    return d.permuted(labels_A + labels_B), labels_B


def h2_conditional(d: DensityMatrix, labels_A: Sequence[str]) -> float:
    """-log tr[((I ⊗ rho_B)^-1/4 rho (I ⊗ rho_B)^-1/4)^2] + log tr rho, rho_B inverted on its support."""
    dd, labels_B = _ordered(d, labels_A)
    dA = math.prod(dd.dims[: len(labels_A)])
    if labels_B:
        rho_B = reduced_density(dd, labels_B)
        q, _ = _matrix_power_on_support(rho_B, -0.25)
    else:
        q = np.ones((1, 1), dtype=complex)
    op = np.kron(np.eye(dA), q)
    x = op @ dd.matrix @ op
    val = float(np.real(np.vdot(x.conj().T, x)))  # tr[x^2] for Hermitian x
    return -math.log2(val) + math.log2(dd.trace())


def h_min_conditional_fixed_sigma(d: DensityMatrix, labels_A: Sequence[str], sigma_B: DensityMatrix | None = None) -> float:
    """-log lambda_max((I ⊗ sigma)^-1/2 rho (I ⊗ sigma)^-1/2); -inf if supp rho_B is not in supp sigma_B.

    ``sigma_B`` defaults to the marginal rho_B.
    """
    dd, labels_B = _ordered(d, labels_A)
    dA = math.prod(dd.dims[: len(labels_A)])
    if not labels_B:
        lam = spectrum(dd)
        return -math.log2(lam[0])
    rho_B = reduced_density(dd, labels_B)
    if sigma_B is None:
        sigma_B = rho_B
    if sigma_B.dim != rho_B.dim:
        raise ValueError("sigma_B has the wrong dimension")
    q, proj = _matrix_power_on_support(sigma_B, -0.5)
    outside = rho_B.matrix - proj @ rho_B.matrix @ proj
    if np.max(np.abs(outside)) > 1e-9 * max(float(np.max(np.abs(rho_B.matrix))), np.finfo(float).tiny):
        return -math.inf
    op = np.kron(np.eye(dA), q)
    x = op @ dd.matrix @ op
    top = float(np.linalg.eigvalsh((x + x.conj().T) / 2)[-1])
    if top <= 0:
        return math.inf
    return -math.log2(top)


# distances -----------------------------------------------------------------------


def _mat(d) -> np.ndarray:
    return d.matrix if isinstance(d, DensityMatrix) else np.asarray(d, dtype=complex)


def trace_distance(d1, d2) -> float:
    """Generalized trace distance 1/2 ||rho - sigma||_1 + 1/2 |tr(rho - sigma)|."""
    a, b = _mat(d1), _mat(d2)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    diff = a - b
    w = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return 0.5 * math.fsum(np.abs(w)) + 0.5 * abs(float(np.trace(diff).real))


def _sqrtm_psd(m: np.ndarray) -> np.ndarray:
    w, v = _psd_parts(DensityMatrix.from_matrix(m))
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(d1, d2) -> float:
    """||sqrt(rho) sqrt(sigma)||_1."""
    a, b = _mat(d1), _mat(d2)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    sv = np.linalg.svd(_sqrtm_psd(a) @ _sqrtm_psd(b), compute_uv=False)
    return math.fsum(sv)


def generalized_fidelity(d1, d2) -> float:
    """F + sqrt((1 - tr rho)(1 - tr sigma)) for subnormalized states."""
    a, b = _mat(d1), _mat(d2)
    ta, tb = float(np.trace(a).real), float(np.trace(b).real)
    return fidelity(a, b) + math.sqrt(max(1 - ta, 0.0) * max(1 - tb, 0.0))


def purified_distance(d1, d2) -> float:
    f = generalized_fidelity(d1, d2)
    return math.sqrt(max(1 - f * f, 0.0))

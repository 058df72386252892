"""Spectra and finite point measures on the real line.

A spectrum is a non-increasing vector of nonnegative numbers with total mass at
most one. A :class:`PointMeasure` is a finite weighted list of atoms, kept in
canonical form (positions strictly increasing, near-equal positions merged).
Logarithms are base 2.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .freeprob import mp_moments
from .series import MomentSequence

__all__ = [
    "as_spectrum",
    "tensor_spectrum",
    "tensor_power",
    "PointMeasure",
    "rescaled_empirical_measure",
    "clt_measure",
    "moments",
    "mp_moments",
    "mp_density",
    "mp_atom",
    "min_pushforward",
    "h_star",
    "renyi_entropy",
    "shannon_entropy",
    "max_entry_after_removal",
    "smooth_min_entropy_classical",
    "ks_distance",
    "spectrum_to_csv",
    "spectrum_from_csv",
]

MASS_TOL = 1e-9
MERGE_RTOL = 1e-12


def as_spectrum(values: Iterable[float], *, check_mass: bool = True) -> np.ndarray:
    """Validate and sort a spectrum (non-increasing, nonnegative, mass <= 1)."""
    lam = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    lam = lam.ravel()
    if np.any(lam < 0):
        raise ValueError("spectrum has negative entries")
    if check_mass and lam.sum() > 1 + MASS_TOL:
        raise ValueError(f"spectrum mass {lam.sum()} exceeds 1")
    return np.sort(lam)[::-1].copy()


def tensor_spectrum(s1: Sequence[float], s2: Sequence[float]) -> np.ndarray:
    """All products s1_i s2_j, non-increasing."""
    a, b = as_spectrum(s1), as_spectrum(s2)
    return np.sort(np.multiply.outer(a, b).ravel())[::-1].copy()


def tensor_power(s: Sequence[float], n: int) -> np.ndarray:
    out = np.array([1.0])
    for _ in range(n):
        out = tensor_spectrum(out, s)
    return out


# point measures -----------------------------------------------------------


def _is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object


@dataclass(frozen=True)
class PointMeasure:
    """Finite atomic measure sum_i w_i delta_{x_i} in canonical form.

    Float atoms closer than ``1e-12`` (relative) are merged; Fraction atoms are
    merged only when equal, so exact computations stay exact.
    """

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.positions)
        w = np.asarray(self.weights)
        exact = x.dtype == object or w.dtype == object
        if exact:
            x = np.array([Fraction(v) for v in x.ravel()], dtype=object)
            w = np.array([Fraction(v) for v in w.ravel()], dtype=object)
        else:
            x = x.astype(float).ravel()
            w = w.astype(float).ravel()
        if x.shape != w.shape:
            raise ValueError("positions and weights differ in length")
        if any(v < 0 for v in w):
            raise ValueError("negative weight")
        x, w = _canonical(x, w, exact)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple]) -> PointMeasure:
        atoms = list(atoms)
        if not atoms:
            return cls(np.zeros(0), np.zeros(0))
        exact = any(isinstance(v, Fraction) for a in atoms for v in a)
        dtype = object if exact else float
        return cls(np.array([a[0] for a in atoms], dtype=dtype), np.array([a[1] for a in atoms], dtype=dtype))

    @classmethod
    def delta(cls, x, mass=1.0) -> PointMeasure:
        return cls.from_atoms([(x, mass)])

    @property
    def exact(self) -> bool:
        return _is_exact(self.positions)

    @property
    def mass(self):
        if self.exact:
            return sum(self.weights, Fraction(0))
        return math.fsum(self.weights)

    def atoms(self) -> list[tuple]:
        return list(zip(self.positions.tolist(), self.weights.tolist()))

    def __len__(self) -> int:
        return len(self.positions)

    def normalized(self) -> PointMeasure:
        m = self.mass
        if m == 0:
            raise ValueError("cannot normalize a zero measure")
        return PointMeasure(self.positions, self.weights / m)

    def integrate(self, f) -> float:
        vals = [w * f(x) for x, w in zip(self.positions, self.weights)]
        return sum(vals, Fraction(0)) if self.exact else math.fsum(vals)

    def mean(self) -> float:
        return self.integrate(lambda x: x) / self.mass

    def cdf(self, x) -> np.ndarray:
        """Right-continuous CDF of the normalized measure at points x."""
        w = np.asarray(self.weights, dtype=float)
        c = np.cumsum(w) / w.sum()
        idx = np.searchsorted(np.asarray(self.positions, dtype=float), np.asarray(x, dtype=float), side="right")
        return np.where(idx > 0, c[np.maximum(idx - 1, 0)], 0.0)

    def quantiles(self, probs: Sequence[float]) -> np.ndarray:
        """Generalized inverse CDF of the normalized measure."""
        w = np.asarray(self.weights, dtype=float)
        c = np.cumsum(w) / w.sum()
        idx = np.searchsorted(c, np.asarray(probs, dtype=float) - 1e-15, side="left")
        idx = np.clip(idx, 0, len(c) - 1)
        return np.asarray(self.positions, dtype=float)[idx]

    # serialization

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["position", "weight"])
        for x, w in self.atoms():
            wr.writerow([_fmt(x), _fmt(w)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> PointMeasure:
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls.from_atoms((_parse_num(r["position"]), _parse_num(r["weight"])) for r in rows)

    def to_dict(self) -> dict:
        return {"atoms": [{"position": _fmt(x), "weight": _fmt(w)} for x, w in self.atoms()]}

    @classmethod
    def from_dict(cls, data: dict) -> PointMeasure:
        return cls.from_atoms((_parse_num(a["position"]), _parse_num(a["weight"])) for a in data["atoms"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> PointMeasure:
        return cls.from_dict(json.loads(text))


def _fmt(v) -> str:
    return str(v) if isinstance(v, Fraction) else repr(float(v))


def _parse_num(s: str):
    s = str(s)
    return Fraction(s) if "/" in s else float(s)


def _canonical(x: np.ndarray, w: np.ndarray, exact: bool) -> tuple[np.ndarray, np.ndarray]:
    if len(x) == 0:
        return x, w
    if not exact:
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
        gap = np.diff(x) > MERGE_RTOL * np.maximum(np.maximum(np.abs(x[1:]), np.abs(x[:-1])), 1.0)
        starts = np.concatenate([[0], np.flatnonzero(gap) + 1])
        return x[starts].copy(), np.add.reduceat(w, starts)
    order = sorted(range(len(x)), key=lambda i: x[i])
    x, w = x[order], w[order]
    keep_x, keep_w = [x[0]], [w[0]]
    for xi, wi in zip(x[1:], w[1:]):
        last = keep_x[-1]
        if xi == last:
            keep_w[-1] = keep_w[-1] + wi
        else:
            keep_x.append(xi)
            keep_w.append(wi)
    return np.array(keep_x, dtype=object), np.array(keep_w, dtype=object)


def rescaled_empirical_measure(s: Sequence[float], scale: float, count: int) -> PointMeasure:
    """(1/count) sum_i delta_{scale * s_i}, zero-padded to ``count`` atoms."""
    lam = as_spectrum(s, check_mass=False)
    support = int(np.count_nonzero(lam > 0))
    if count < support:
        raise ValueError(f"count {count} smaller than support size {support}")
    lam = lam[lam > 0]
    pos = np.concatenate([scale * lam, np.zeros(count - support)])
    return PointMeasure(pos, np.full(count, 1.0 / count))


def clt_measure(s: Sequence[float], h: float, sigma: float) -> PointMeasure:
    """sum_i s_i delta_{(log(1/s_i) - h)/sigma} over positive entries."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    lam = as_spectrum(s, check_mass=False)
    lam = lam[lam > 0]
    if lam.size == 0:
        raise ValueError("spectrum has no positive entry")
    return PointMeasure((-np.log2(lam) - h) / sigma, lam)


def moments(m: PointMeasure, kmax: int) -> list:
    """m_k = sum_i w_i x_i^k for k = 1..kmax, with compensated summation."""
    if m.exact:
        return [sum((w * x**k for x, w in zip(m.positions, m.weights)), Fraction(0)) for k in range(1, kmax + 1)]
    x, w = m.positions, m.weights
    return [math.fsum(w * x**k) for k in range(1, kmax + 1)]


def mp_atom(t: float) -> float:
    """Point mass of MP(t) at zero."""
    return max(1.0 - float(t), 0.0)


def mp_density(t: float, x) -> np.ndarray | float:
    """Density sqrt(4t - (x-1-t)^2) / (2 pi x) of the continuous part of MP(t)."""
    t = float(t)
    if t <= 0:
        raise ValueError("MP parameter must be positive")
    xa = np.asarray(x, dtype=float)
    disc = 4 * t - (xa - 1 - t) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where((xa > 0) & (disc > 0), np.sqrt(np.maximum(disc, 0.0)) / (2 * np.pi * xa), 0.0)
    return float(val) if np.ndim(x) == 0 else val


def min_pushforward(nu1: PointMeasure, nu2: PointMeasure) -> PointMeasure:
    """Law of min(X, Y) for independent X ~ nu1, Y ~ nu2 (product of masses)."""
    pos = np.minimum.outer(nu1.positions, nu2.positions).ravel()
    wts = np.multiply.outer(nu1.weights, nu2.weights).ravel()
    return PointMeasure(pos, wts)


def h_star(p: Sequence[float], q: Sequence[float]) -> float:
    """sum_{i,j} p_i q_j min(log 1/p_i, log 1/q_j), zero entries skipped."""
    a = np.asarray(p, dtype=float)
    b = np.asarray(q, dtype=float)
    a, b = a[a > 0], b[b > 0]
    if a.size == 0 or b.size == 0:
        raise ValueError("h_star needs positive mass on both sides")
    # sort by information content so the min splits into two cumulative sums
    la, lb = -np.log2(a), -np.log2(b)
    oa, ob = np.argsort(la), np.argsort(lb)
    la, a, lb, b = la[oa], a[oa], lb[ob], b[ob]
    # for each i: sum_j b_j min(la_i, lb_j) = sum_{lb_j < la_i} b_j lb_j + la_i * sum_{lb_j >= la_i} b_j
    cut = np.searchsorted(lb, la, side="left")
    cum_blb = np.concatenate([[0.0], np.cumsum(b * lb)])
    cum_b = np.concatenate([[0.0], np.cumsum(b)])
    inner = cum_blb[cut] + la * (cum_b[-1] - cum_b[cut])
    return math.fsum(a * inner)


def shannon_entropy(s: Sequence[float]) -> float:
    return renyi_entropy(s, 1)


def renyi_entropy(s: Sequence[float], k: float) -> float:
    """H_k = log(sum s^k / sum s) / (1 - k), with the k -> 0, 1, inf limits.

    For subnormalized input the limits are taken of this same expression:
    H_0 = log(rank / mass), H_1 = -sum s log s / mass, H_inf = -log max s.
    """
    lam = np.asarray(s, dtype=float)
    lam = lam[lam > 0]
    if lam.size == 0:
        raise ValueError("all-zero spectrum")
    if k < 0:
        raise ValueError("Renyi index must be nonnegative")
    mass = math.fsum(lam)
    if k == 0:
        return math.log2(lam.size / mass)
    if k == 1:
        return -math.fsum(lam * np.log2(lam)) / mass
    if math.isinf(k):
        return -math.log2(lam.max())
    # factor out the largest entry to keep lam^k in range
    top = lam.max()
    log_tr = k * math.log2(top) + math.log2(math.fsum((lam / top) ** k))
    return (log_tr - math.log2(mass)) / (1 - k)


def max_entry_after_removal(s: Sequence[float], mass: float, mode: str = "step") -> float:
    """Largest entry left after deleting at most ``mass`` from the top of ``s``.

    ``mode="step"`` lowers the current top block to the next distinct value
    while the budget allows it, and stops at the first level it cannot reach.
    ``mode="water"`` spends the whole budget, lowering the top entries to a
    common level L with sum_i max(s_i - L, 0) = mass.
    Both are certified: the result is achieved by an explicit sub-state.
    """
    lam = as_spectrum(s, check_mass=False)
    lam = lam[lam > 0]
    if mass < 0:
        raise ValueError("mass must be nonnegative")
    if lam.size == 0:
        return 0.0
    levels = np.concatenate([np.unique(lam)[::-1], [0.0]])
    spent = 0.0
    level = levels[0]
    for nxt in levels[1:]:
        count = int(np.count_nonzero(lam >= level - MERGE_RTOL * level))
        cost = count * (level - nxt)
        if spent + cost <= mass + 1e-15:
            spent += cost
            level = nxt
            continue
        if mode == "water":
            level = level - (mass - spent) / count
        elif mode != "step":
            raise ValueError(f"unknown mode {mode!r}")
        break
    return float(level)


def smooth_min_entropy_classical(s: Sequence[float], eps: float, mode: str = "step") -> float:
    """Certified lower bound on the eps-smooth min-entropy of a diagonal state.

    Removing mass delta from the top entries gives a sub-state at generalized
    trace distance delta, hence purified distance at most sqrt(2 delta); the
    budget is delta = eps^2/2. See :func:`max_entry_after_removal` for modes.
    """
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1)")
    lam = as_spectrum(s)
    if abs(lam.sum() - 1) > MASS_TOL:
        raise ValueError("spectrum must be normalized")
    top = max_entry_after_removal(lam, eps**2 / 2, mode=mode)
    return math.inf if top <= 0 else -math.log2(top)


def ks_distance(mu: PointMeasure, nu: PointMeasure) -> float:
    """sup_x |F_mu(x) - F_nu(x)| after normalizing both masses."""
    grid = np.union1d(np.asarray(mu.positions, dtype=float), np.asarray(nu.positions, dtype=float))
    if grid.size == 0:
        return 0.0
    return float(np.max(np.abs(mu.cdf(grid) - nu.cdf(grid))))


def spectrum_to_csv(s: Sequence[float]) -> str:
    lam = as_spectrum(s, check_mass=False)
    return "".join(repr(float(v)) + "\n" for v in lam)


def spectrum_from_csv(text: str) -> np.ndarray:
    vals = [float(line.split(",")[0]) for line in text.splitlines() if line.strip() and not line[0].isalpha()]
    return as_spectrum(vals, check_mass=False)


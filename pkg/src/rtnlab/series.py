"""Truncated formal power series over the rationals, and moment sequences.

Everything here is exact (``fractions.Fraction``). A series of order ``K``
carries coefficients ``c_0 .. c_K`` and no operation reads past ``K``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

__all__ = [
    "to_fraction",
    "FormalSeries",
    "MomentSequence",
    "series_inverse",
    "s_transform",
    "moments_from_s_transform",
]


def to_fraction(x) -> Fraction:
    """Exact conversion. Floats go through their shortest repr, so 0.1 -> 1/10."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


@dataclass(frozen=True)
class FormalSeries:
    """c_0 + c_1 z + ... + c_K z^K + O(z^{K+1})."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("a series needs at least a constant coefficient")
        object.__setattr__(self, "coeffs", tuple(to_fraction(c) for c in self.coeffs))

    @classmethod
    def from_terms(cls, terms: Iterable, order: int, start: int = 0) -> FormalSeries:
        """Coefficients given from index ``start`` on; missing ones are zero."""
        c = [Fraction(0)] * (order + 1)
        for i, v in enumerate(terms, start=start):
            if i > order:
                break
            c[i] = to_fraction(v)
        return cls(tuple(c))

    @classmethod
    def constant(cls, value, order: int) -> FormalSeries:
        return cls.from_terms([value], order)

    @classmethod
    def z(cls, order: int) -> FormalSeries:
        return cls.from_terms([0, 1], order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, i: int) -> Fraction:
        return self.coeffs[i]

    def truncate(self, order: int) -> FormalSeries:
        if order > self.order:
            raise ValueError(f"cannot extend a series of order {self.order} to {order}")
        return FormalSeries(self.coeffs[: order + 1])

    def _align(self, other) -> tuple[FormalSeries, FormalSeries]:
        if not isinstance(other, FormalSeries):
            other = FormalSeries.constant(other, self.order)
        k = min(self.order, other.order)
        return self.truncate(k), other.truncate(k)

    def __add__(self, other) -> FormalSeries:
        a, b = self._align(other)
        return FormalSeries(tuple(x + y for x, y in zip(a.coeffs, b.coeffs)))

    __radd__ = __add__

    def __neg__(self) -> FormalSeries:
        return FormalSeries(tuple(-c for c in self.coeffs))

    def __sub__(self, other) -> FormalSeries:
        return self + (-other if isinstance(other, FormalSeries) else -to_fraction(other))

    def __mul__(self, other) -> FormalSeries:
        if not isinstance(other, FormalSeries):
            s = to_fraction(other)
            return FormalSeries(tuple(c * s for c in self.coeffs))
        a, b = self._align(other)
        k = a.order
        out = [Fraction(0)] * (k + 1)
        for i, ai in enumerate(a.coeffs):
            if ai:
                for j in range(k + 1 - i):
                    out[i + j] += ai * b.coeffs[j]
        return FormalSeries(tuple(out))

    __rmul__ = __mul__

    def reciprocal(self) -> FormalSeries:
        """1/f, requires c_0 != 0."""
        if self.coeffs[0] == 0:
            raise ZeroDivisionError("series with zero constant term is not invertible")
        k = self.order
        inv0 = 1 / self.coeffs[0]
        out = [inv0]
        for n in range(1, k + 1):
            acc = sum((self.coeffs[i] * out[n - i] for i in range(1, n + 1)), Fraction(0))
            out.append(-acc * inv0)
        return FormalSeries(tuple(out))

    def __truediv__(self, other) -> FormalSeries:
        if isinstance(other, FormalSeries):
            return self * other.reciprocal()
        return self * (1 / to_fraction(other))

    def shift_down(self) -> FormalSeries:
        """f(z)/z for f with zero constant term; order drops by one."""
        if self.coeffs[0] != 0:
            raise ValueError("constant term must vanish to divide by z")
        if self.order < 1:
            raise ValueError("series too short to divide by z")
        return FormalSeries(self.coeffs[1:])

    def shift_up(self) -> FormalSeries:
        """z f(z); order grows by one."""
        return FormalSeries((Fraction(0),) + self.coeffs)

    def compose(self, g: FormalSeries) -> FormalSeries:
        """f(g(z)) for g with zero constant term, by Horner's scheme."""
        if g.coeffs[0] != 0:
            raise ValueError("inner series must have zero constant term")
        k = min(self.order, g.order)
        g = g.truncate(k)
        acc = FormalSeries.constant(self.coeffs[k], k)
        for i in range(k - 1, -1, -1):
            acc = acc * g + self.coeffs[i]
        return acc

    def __call__(self, x):
        """Evaluate the truncated polynomial at a number."""
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __str__(self) -> str:
        terms = [f"{c}*z^{i}" for i, c in enumerate(self.coeffs) if c]
        return (" + ".join(terms) or "0") + f" + O(z^{self.order + 1})"


def series_inverse(f: FormalSeries) -> FormalSeries:
    """Compositional inverse g with f(g(z)) = z + O(z^{K+1}).

    f must have c_0 = 0 and c_1 != 0. Coefficients are fixed one order at a time:
    with g_{<n} known, [z^n] f(g) = f_1 g_n + (terms in g_{<n}), so g_n follows.
    """
    if f.coeffs[0] != 0:
        raise ValueError("series to invert must have zero constant term")
    if f.order < 1 or f.coeffs[1] == 0:
        raise ValueError("vanishing first coefficient: series is not invertible")
    k = f.order
    f1 = f.coeffs[1]
    g = [Fraction(0), 1 / f1] + [Fraction(0)] * (k - 1)
    for n in range(2, k + 1):
        partial = FormalSeries(tuple(g[:n] + [Fraction(0)] * (k + 1 - n)))
        residual = f.compose(partial).coeffs[n]
        g[n] = -residual / f1
    return FormalSeries(tuple(g))


@dataclass(frozen=True)
class MomentSequence:
    """Exact moments m_1 .. m_K of a (compactly supported) distribution."""

    moments: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "moments", tuple(to_fraction(m) for m in self.moments))

    @classmethod
    def of(cls, values: Iterable) -> MomentSequence:
        return cls(tuple(values))

    @classmethod
    def ones(cls, order: int) -> MomentSequence:
        """Moments of delta_1."""
        return cls((Fraction(1),) * order)

    @property
    def order(self) -> int:
        return len(self.moments)

    def __getitem__(self, k: int) -> Fraction:
        """1-based: ``m[k]`` is the k-th moment; ``m[0]`` is the mass, 1."""
        if k == 0:
            return Fraction(1)
        if not 1 <= k <= self.order:
            raise IndexError(f"moment {k} outside 1..{self.order}")
        return self.moments[k - 1]

    def __len__(self) -> int:
        return self.order

    def __iter__(self):
        return iter(self.moments)

    def truncate(self, order: int) -> MomentSequence:
        if order > self.order:
            raise ValueError(f"need {order} moments, have {self.order}")
        return MomentSequence(self.moments[:order])

    def of_cycle_type(self, lengths: Sequence[int]) -> Fraction:
        """m_pi = prod over cycle lengths l of m_l."""
        out = Fraction(1)
        for l in lengths:
            out *= self[l]
        return out

    def generating_series(self) -> FormalSeries:
        """M(z) = sum_k m_k z^k, order K."""
        return FormalSeries((Fraction(0),) + self.moments)

    def as_floats(self) -> list[float]:
        return [float(m) for m in self.moments]

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_dict(self) -> dict:
        return {"order": self.order, "moments": [str(m) for m in self.moments]}

    @classmethod
    def from_json(cls, text: str) -> MomentSequence:
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_dict(cls, data: dict) -> MomentSequence:
        moments = [Fraction(s) for s in data["moments"]]
        if "order" in data and int(data["order"]) != len(moments):
            raise ValueError("order field disagrees with number of moments")
        return cls(tuple(moments))


def s_transform(m: MomentSequence) -> FormalSeries:
    """S(z) = ((1+z)/z) M^{-1}(z), known to order K-1 from K moments."""
    if m.order < 1 or m[1] == 0:
        raise ValueError("S-transform needs a nonzero first moment")
    g = series_inverse(m.generating_series())
    one_plus_z = FormalSeries.from_terms([1, 1], g.order - 1)
    return one_plus_z * g.shift_down()


def moments_from_s_transform(S: FormalSeries, kmax: int) -> MomentSequence:
    """Moments m_1..m_kmax whose S-transform agrees with S to order kmax-1.

    Inverts the definition: M^{-1}(z) = z S(z)/(1+z), then M = inverse of that.
    """
    if S.coeffs[0] == 0:
        raise ValueError("S-transform must have a nonzero constant term")
    if S.order < kmax - 1:
        raise ValueError(f"S known to order {S.order}, need {kmax - 1}")
    S = S.truncate(kmax - 1)
    one_plus_z = FormalSeries.from_terms([1, 1], kmax)
    g = S.shift_up() / one_plus_z
    M = series_inverse(g)
    return MomentSequence(M.coeffs[1:])

"""Free multiplicative convolution and exact limiting-moment predictors.

All predictors return :class:`MomentSequence` objects with exact rational
entries. The NC sums run over the aggregated table from
:func:`rtnlab.symgroup.nc_type_table`, so evaluation order is fixed.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .series import (
    FormalSeries,
    MomentSequence,
    moments_from_s_transform,
    s_transform,
    series_inverse,
    to_fraction,
)
from .symgroup import nc_type_table

__all__ = [
    "DEFAULT_KMAX",
    "FormalSeries",
    "MomentSequence",
    "series_inverse",
    "s_transform",
    "moments_from_s_transform",
    "mp_moments",
    "free_product",
    "nc_convolution",
    "two_cut_prediction",
    "intersecting_cut_prediction",
    "negativity_prediction",
    "UnsupportedConfiguration",
]

DEFAULT_KMAX = 14


class UnsupportedConfiguration(ValueError):
    """The requested cut geometry has no known limiting law."""


def _as_moments(m, kmax: int) -> MomentSequence:
    if not isinstance(m, MomentSequence):
        m = MomentSequence.of(m)
    return m.truncate(kmax)


def mp_moments(t=1, kmax: int = 10) -> MomentSequence:
    """Moments of MP(t), the law with S-transform 1/(t+z).

    For t = 1 the closed form sum_i binom(k,i) binom(k-1,i)/(i+1) is used;
    otherwise the moments are read off the S-transform.
    """
    t = to_fraction(t)
    if t <= 0:
        raise ValueError("MP parameter must be positive")
    if t == 1:
        from math import comb

        return MomentSequence(
            tuple(
                sum(Fraction(comb(k, i) * comb(k - 1, i), i + 1) for i in range(k))
                for k in range(1, kmax + 1)
            )
        )
    S = (FormalSeries.from_terms([t, 1], kmax)).reciprocal()
    return moments_from_s_transform(S, kmax)


def free_product(m1, m2, kmax: int | None = None) -> MomentSequence:
    """Moments of mu1 boxtimes mu2 by multiplying S-transforms."""
    if kmax is None:
        kmax = min(len(m1), len(m2))
    a, b = _as_moments(m1, kmax), _as_moments(m2, kmax)
    if a[1] == 0 or b[1] == 0:
        raise ValueError("free product needs nonzero first moments")
    return moments_from_s_transform(s_transform(a) * s_transform(b), kmax)


def _nc_sum(k: int, left: MomentSequence, right: MomentSequence, t: Fraction = Fraction(1)) -> Fraction:
    """sum_{pi in NC(k)} t^{d(pi,id)} left_{C(pi)} right_{C(pi^-1 tau)}."""
    total = Fraction(0)
    for ct_pi, ct_rest, dist, mult in nc_type_table(k):
        total += mult * t**dist * left.of_cycle_type(ct_pi) * right.of_cycle_type(ct_rest)
    return total


def nc_convolution(m1, m2, kmax: int | None = None) -> MomentSequence:
    """m_k = sum_{pi in NC(k)} m1_pi m2_{pi^-1 tau_k}; the moments of MP(1) boxtimes mu1 boxtimes mu2."""
    if kmax is None:
        kmax = min(len(m1), len(m2))
    a, b = _as_moments(m1, kmax), _as_moments(m2, kmax)
    return MomentSequence(tuple(_nc_sum(k, a, b) for k in range(1, kmax + 1)))


def two_cut_prediction(m1, m2, t, kmax: int | None = None) -> MomentSequence:
    """Limit moments for a region with exactly two non-intersecting minimal cuts.

    m_k = sum_{pi in NC(k)} t^{d(pi,id)} m1_{tau^-1 pi} m2_pi, where ``m1`` belongs
    to the cut with the smaller dimension and t = D_1/D_2 in (0, 1].
    """
    t = to_fraction(t)
    if not 0 < t <= 1:
        raise ValueError(f"t must lie in (0, 1], got {t}")
    if kmax is None:
        kmax = min(len(m1), len(m2))
    a, b = _as_moments(m1, kmax), _as_moments(m2, kmax)
    # C(tau^-1 pi) = C(pi^-1 tau), so m2 sits on pi and m1 on the complement
    return MomentSequence(tuple(_nc_sum(k, b, a, t) for k in range(1, kmax + 1)))


def intersecting_cut_prediction(m_common, m1_rest, m2_rest, t, kmax: int | None = None) -> MomentSequence:
    """Shared edges contribute a tensor factor: multiply moments componentwise."""
    if kmax is None:
        kmax = min(len(m_common), len(m1_rest), len(m2_rest))
    c = _as_moments(m_common, kmax)
    rest = two_cut_prediction(m1_rest, m2_rest, t, kmax)
    return MomentSequence(tuple(x * y for x, y in zip(c, rest)))


def negativity_prediction(
    mA: Sequence,
    mB: Sequence,
    mC2,
    r: int,
    kmax: int | None = None,
    *,
    mC=None,
    cut_sizes: tuple[int, int, int] | None = None,
) -> MomentSequence:
    """Limit moments of the squared negativity spectrum measure.

    For r > 0 components, entry n is
    ``mC2^n prod_i sum_{sigma in NC(n)} (mA_i mB_i)_sigma (mA_i mB_i)_{sigma^-1 tau}``,
    i.e. the moments of ``prod_i ((mu_A,i x mu_B,i) boxtimes (mu_A,i x mu_B,i) boxtimes MP(1))``
    scaled by ``mC2``. Pass ``mC2=1`` for the measure rescaled by the second
    moment of the C cut.

    For r = 0 the limit is the C-cut law itself, which the caller supplies as
    ``mC``. ``cut_sizes=(|gA|, |gB|, |gC|)`` lets the function reject the
    r = 0, |gA|+|gB| > |gC| geometry, for which no limit is known.
    """
    if r < 0:
        raise ValueError("number of components must be nonnegative")
    if len(mA) != r or len(mB) != r:
        raise ValueError(f"expected {r} moment sequences for A and for B")
    if r == 0:
        if cut_sizes is not None:
            a, b, c = cut_sizes
            if a + b > c:
                raise UnsupportedConfiguration(
                    "r = 0 with |gA| + |gB| > |gC| has no known negativity limit"
                )
        if mC is None:
            raise ValueError("r = 0: the C-cut moments mC must be supplied")
        if kmax is None:
            kmax = len(mC)
        return _as_moments(mC, kmax)
    if kmax is None:
        kmax = min(len(x) for x in list(mA) + list(mB))
    mC2 = to_fraction(mC2)
    factors = []
    for a, b in zip(mA, mB):
        a, b = _as_moments(a, kmax), _as_moments(b, kmax)
        ab = MomentSequence(tuple(x * y for x, y in zip(a, b)))
        factors.append(nc_convolution(ab, ab, kmax))
    out = []
    for n in range(1, kmax + 1):
        val = mC2**n
        for f in factors:
            val *= f[n]
        out.append(val)
    return MomentSequence(tuple(out))

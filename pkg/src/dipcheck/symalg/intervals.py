"""Certified rational interval arithmetic.

Endpoints are exact Fractions; every operation rounds outward, so a true
value contained in the inputs is contained in the output.  Rounding snaps
endpoints to the dyadic grid 2^-prec, which keeps denominators bounded no
matter how deep a computation goes.  exp() is evaluated by argument
reduction, an exact rational Taylor partial sum with an explicit remainder
bound, and interval squaring -- no floating point anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

_ZERO = Fraction(0)
_ONE = Fraction(1)
_HALF = Fraction(1, 2)


@dataclass(frozen=True)
class Iv:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("inverted interval [%s, %s]" % (self.lo, self.hi))

    # -- queries -------------------------------------------------------------

    def width(self) -> Fraction:
        return self.hi - self.lo

    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def strictly_positive(self) -> bool:
        return self.lo > 0

    def strictly_negative(self) -> bool:
        return self.hi < 0

    def nonnegative(self) -> bool:
        return self.lo >= 0

    def straddles_zero(self) -> bool:
        return self.lo < 0 < self.hi

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "Iv") -> "Iv":
        return Iv(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "Iv") -> "Iv":
        return Iv(self.lo - other.hi, self.hi - other.lo)

    def __neg__(self) -> "Iv":
        return Iv(-self.hi, -self.lo)

    def __mul__(self, other: "Iv") -> "Iv":
        cands = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Iv(min(cands), max(cands))

    def scale(self, c: Fraction) -> "Iv":
        if c >= 0:
            return Iv(self.lo * c, self.hi * c)
        return Iv(self.hi * c, self.lo * c)

    def recip(self) -> "Iv":
        if self.lo <= 0 <= self.hi:
            raise ZeroDivisionError("interval straddles zero")
        return Iv(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other: "Iv") -> "Iv":
        return self * other.recip()

    def pow_int(self, n: int) -> "Iv":
        if n == 0:
            return Iv(_ONE, _ONE)
        if n < 0:
            return self.pow_int(-n).recip()
        out = Iv(_ONE, _ONE)
        base = self
        k = n
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def hull(self, other: "Iv") -> "Iv":
        return Iv(min(self.lo, other.lo), max(self.hi, other.hi))

    def round_out(self, prec: int) -> "Iv":
        return Iv(_round_down(self.lo, prec), _round_up(self.hi, prec))

    @staticmethod
    def point(x) -> "Iv":
        x = Fraction(x)
        return Iv(x, x)


def _round_down(x: Fraction, prec: int) -> Fraction:
    scaled = (x.numerator << prec) // x.denominator
    return Fraction(scaled, 1 << prec)


def _round_up(x: Fraction, prec: int) -> Fraction:
    scaled = -((-x.numerator << prec) // x.denominator)
    return Fraction(scaled, 1 << prec)


# -- certified exponential ---------------------------------------------------------

_exp_cache: dict[tuple[Fraction, int], Iv] = {}


def _exp_taylor_small(f: Fraction, prec: int) -> Iv:
    """exp(f) for |f| <= 1/2 via exact partial sums.

    Remainder after N terms is bounded by |f|^(N+1)/(N+1)! * 2 (geometric
    tail with ratio <= 1/2).
    """
    target = Fraction(1, 1 << (prec + 2))
    s = _ONE
    term = _ONE
    k = 0
    af = abs(f)
    while True:
        k += 1
        term *= f / k
        s += term
        rem = abs(term) * af / (k + 1) * 2
        if rem <= target:
            break
        if k > prec + 64:  # cannot happen for |f| <= 1/2; guard anyway
            break
    return Iv(s - rem, s + rem)


def exp_point(q: Fraction, prec: int) -> Iv:
    """Certified enclosure of e^q with relative width about 2^-prec."""
    q = Fraction(q)
    key = (q, prec)
    hit = _exp_cache.get(key)
    if hit is not None:
        return hit
    if q == 0:
        out = Iv(_ONE, _ONE)
    elif q < 0:
        out = exp_point(-q, prec + 4).recip().round_out(prec)
    else:
        s = 0
        scaled = q
        while scaled > _HALF:
            scaled /= 2
            s += 1
        work = prec + 2 * s + 8
        iv = _exp_taylor_small(scaled, work)
        for _ in range(s):
            iv = Iv(iv.lo * iv.lo, iv.hi * iv.hi).round_out(work)
        out = iv.round_out(prec)
    if len(_exp_cache) > 200000:
        _exp_cache.clear()
    _exp_cache[key] = out
    return out


def exp_range(qlo: Fraction, qhi: Fraction, prec: int) -> Iv:
    """Enclosure of {e^x : x in [qlo, qhi]} (monotone)."""
    lo = exp_point(qlo, prec).lo
    hi = exp_point(qhi, prec).hi
    return Iv(lo, hi)


# -- pseudo-polynomial / pseudo-rational evaluation -----------------------------------


def eval_poly_point(p, eps: Fraction, prec: int) -> Iv:
    """Enclosure of a PseudoPoly at a positive rational eps."""
    eps = Fraction(eps)
    acc = Iv(_ZERO, _ZERO)
    for (n, q, m), c in p.terms:
        iv = exp_point(q * eps, prec)
        if m != 0:
            iv = iv * exp_point(m, prec)
        if n != 0:
            iv = iv.scale(eps**n)
        acc = acc + iv.scale(c)
    return acc.round_out(prec)


def eval_poly_range(p, lo: Fraction, hi: Fraction, prec: int) -> Iv:
    """Enclosure of a PseudoPoly over [lo, hi], 0 <= lo <= hi.

    Per-term monotone bounds; loose near heavy cancellation, which the
    sign-decision bisection compensates for by splitting.
    """
    acc = Iv(_ZERO, _ZERO)
    for (n, q, m), c in p.terms:
        if q >= 0:
            iv = exp_range(q * lo, q * hi, prec)
        else:
            iv = exp_range(q * hi, q * lo, prec)
        if m != 0:
            iv = iv * exp_point(m, prec)
        if n != 0:
            iv = iv * Iv(lo**n, hi**n)
        acc = acc + iv.scale(c)
    return acc.round_out(prec)


class PoleError(ArithmeticError):
    """Denominator enclosure kept straddling zero at maximum precision."""


def eval_pseudo_point(f, eps: Fraction, prec: int, max_prec: int = 4096) -> Iv:
    """Certified enclosure of a PseudoRational at a positive rational eps.

    Refines the working precision until the denominator enclosure excludes
    zero; raises PoleError if that never happens (possible pole).
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    work = prec
    while True:
        den = eval_poly_point(f.den, eps, work)
        if not (den.lo <= 0 <= den.hi):
            num = eval_poly_point(f.num, eps, work)
            return (num / den).round_out(prec)
        if work >= max_prec:
            raise PoleError("denominator enclosure straddles 0 at eps=%s" % eps)
        work *= 2

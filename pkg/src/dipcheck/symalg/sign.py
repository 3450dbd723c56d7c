"""Certified sign decisions for exponential polynomials on sub-intervals of (0, inf).

Deciding whether E(eps) = sum_j P_j(eps) * e^(r_j * eps) stays nonnegative is
the single primitive every privacy verdict reduces to.  The method:

  1. normalize: divide out eps^min_pow and e^(max_expo * eps) (both positive
     on (0, inf), so the sign is unchanged) to keep every quantity bounded;
  2. near 0+: exact rational Taylor coefficients at 0 with an explicit
     remainder bound give the sign on a certified (0, eta];
  3. near +inf: the (expo, degree)-dominant monomial certifiably dominates
     beyond a rational bound L, tightened by binary search;
  4. on [eta, L]: adaptive interval bisection; a strictly negative box is a
     witness, a box that cannot be resolved at maximum depth is reported
     honestly as Inconclusive (tangential zeros land here by design).

Exact zero tests at rational points use the grouped-exponent criterion:
sum beta_g * e^(gamma_g) with distinct rational gamma_g vanishes only if
every beta_g does (Lindemann-Weierstrass), so "is the value exactly zero"
is decidable and point-sign refinement always terminates on nonzero values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .intervals import Iv, eval_poly_point, eval_poly_range, eval_pseudo_point, exp_point
from .pseudo import PseudoPoly, PseudoRational

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class EpsInterval:
    """Sub-interval of (0, inf); lo == 0 means open at 0+, hi None means +inf."""

    lo: Fraction = Fraction(0)
    hi: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        if self.hi is not None:
            object.__setattr__(self, "hi", Fraction(self.hi))
            if self.lo >= self.hi:
                raise ValueError("empty eps interval")
        if self.lo < 0:
            raise ValueError("eps interval must lie in (0, inf)")

    @staticmethod
    def all_eps() -> "EpsInterval":
        return EpsInterval(Fraction(0), None)

    def __str__(self) -> str:
        hi = "inf" if self.hi is None else str(self.hi)
        return "(%s, %s)" % (self.lo, hi)


@dataclass(frozen=True)
class Witness:
    eps0: Fraction
    enclosure: Iv  # enclosure of the analyzed expression at eps0; hi < 0


@dataclass(frozen=True)
class SignVerdict:
    kind: str  # "nonneg" | "witness" | "inconclusive"
    witness: Optional[Witness] = None
    reason: str = ""
    regions: tuple = ()  # unresolved (lo, hi) sub-intervals for inconclusive

    @property
    def is_nonneg(self) -> bool:
        return self.kind == "nonneg"


@dataclass
class SignConfig:
    prec: int = 128
    max_prec: int = 1024
    depth: int = 60
    taylor_cap: int = 64


DEFAULT_SIGN_CONFIG = SignConfig()


# -- Taylor expansion at 0 ------------------------------------------------------------
#
# A coefficient is stored as a bucket {m: rational} standing for
# sum_m c_m * e^m; with no constant-delta extension in play the bucket is
# {0: c} and everything below is exact rational arithmetic.


def _taylor_buckets(p: PseudoPoly, upto: int) -> list[dict[Fraction, Fraction]]:
    out: list[dict[Fraction, Fraction]] = [dict() for _ in range(upto + 1)]
    for (n, q, m), c in p.terms:
        if n > upto:
            continue
        fac = Fraction(1)
        power = Fraction(1)
        for k in range(n, upto + 1):
            coef = c * power / fac
            if coef != 0:
                b = out[k]
                b[m] = b.get(m, _ZERO) + coef
            power *= q
            fac *= k - n + 1
            if q == 0:
                break
    for b in out:
        for m in [m for m, v in b.items() if v == 0]:
            del b[m]
    return out


def _bucket_sign(bucket: dict[Fraction, Fraction], cfg: SignConfig) -> int:
    """Sign of sum c_m e^m; zero only when the bucket is empty (L-W)."""
    if not bucket:
        return 0
    if len(bucket) == 1:
        ((_, c),) = bucket.items()
        return 1 if c > 0 else -1
    prec = cfg.prec
    while True:
        acc = Iv.point(0)
        for m, c in bucket.items():
            acc = acc + exp_point(m, prec).scale(c)
        if acc.strictly_positive():
            return 1
        if acc.strictly_negative():
            return -1
        prec *= 2
        if prec > cfg.max_prec * 8:
            raise ArithmeticError("bucket sign refinement exhausted")


def _bucket_bounds(bucket: dict[Fraction, Fraction], prec: int) -> Iv:
    acc = Iv.point(0)
    for m, c in bucket.items():
        acc = acc + exp_point(m, prec).scale(c)
    return acc


def _bucket_abs_ub(bucket: dict[Fraction, Fraction], prec: int) -> Fraction:
    ub = _ZERO
    for m, c in bucket.items():
        ub += abs(c) * exp_point(m, prec).hi
    return ub


def _tail_bound(p: PseudoPoly, upto: int, prec: int) -> Fraction:
    """K with |sum of Taylor terms of p beyond order `upto`| <= K * eps^(upto+1)
    for 0 < eps <= 1."""
    out = _ZERO
    for (n, q, m), c in p.terms:
        i0 = max(upto + 1 - n, 0)
        fac = 1
        for i in range(2, i0 + 1):
            fac *= i
        out += (
            abs(c)
            * exp_point(m, prec).hi
            * (abs(q) ** i0)
            / fac
            * exp_point(abs(q), prec).hi
        )
    return out


@dataclass
class _ZeroSide:
    sign: int
    order: int
    eta: Fraction


def _sign_near_zero(p: PseudoPoly, cfg: SignConfig) -> Optional[_ZeroSide]:
    """Certified sign of p on some (0, eta]; None if the first nonzero
    Taylor order exceeds the cap (reported as inconclusive upstream)."""
    buckets = _taylor_buckets(p, cfg.taylor_cap)
    k = None
    for j, b in enumerate(buckets):
        if b:
            k = j
            break
    if k is None:
        return None
    sign = _bucket_sign(buckets[k], cfg)
    lead = _bucket_bounds(buckets[k], cfg.prec)
    lb = lead.lo if sign > 0 else -lead.hi
    while lb <= 0:
        # widen precision until a positive lower bound on |A_k| appears
        prec2 = cfg.prec * 4
        lead = _bucket_bounds(buckets[k], prec2)
        lb = lead.lo if sign > 0 else -lead.hi
        if lb <= 0:
            raise ArithmeticError("cannot bound leading Taylor coefficient")
    best = None
    for extra in (8, 24, cfg.taylor_cap - k - 1):
        upper = k + max(1, extra)
        if upper > cfg.taylor_cap:
            upper = cfg.taylor_cap
        ubs = [_bucket_abs_ub(buckets[j], cfg.prec) for j in range(k + 1, upper + 1)]
        km = _tail_bound(p, upper, cfg.prec)

        def ok(eta: Fraction) -> bool:
            tot = _ZERO
            pw = _ONE
            for ub in ubs:
                pw *= eta
                tot += ub * pw
            tot += km * pw * eta
            return tot <= lb / 2

        eta = _ONE
        steps = 0
        while not ok(eta):
            eta /= 2
            steps += 1
            if steps > cfg.depth:
                eta = None
                break
        if eta is not None and (best is None or eta > best):
            # grow back up while still certified (ok is monotone in eta)
            while eta < 1 and ok(eta * 2):
                eta *= 2
            if best is None or eta > best:
                best = eta
    if best is None:
        return None
    return _ZeroSide(sign=sign, order=k, eta=best)


# -- dominance at +inf ---------------------------------------------------------------


@dataclass
class _InfSide:
    sign: int
    bound: Fraction  # certified constant sign on [bound, inf)


def _sign_at_infinity(p: PseudoPoly, cfg: SignConfig) -> _InfSide:
    groups: dict[tuple[int, Fraction], dict[Fraction, Fraction]] = {}
    for (n, q, m), c in p.terms:
        b = groups.setdefault((n, q), {})
        b[m] = b.get(m, _ZERO) + c
    groups = {k: {m: c for m, c in b.items() if c != 0} for k, b in groups.items()}
    groups = {k: b for k, b in groups.items() if b}
    lead_key = max(groups, key=lambda k: (k[1], k[0]))
    n0, q0 = lead_key
    sign = _bucket_sign(groups[lead_key], cfg)
    lead = _bucket_bounds(groups[lead_key], cfg.prec)
    lb = lead.lo if sign > 0 else -lead.hi
    others = [(k, b) for k, b in groups.items() if k != lead_key]
    if not others:
        return _InfSide(sign=sign, bound=_ONE)
    mcount = len(others)
    floor_l = _ONE
    crude = _ONE
    for (n, q), b in others:
        ub = _bucket_abs_ub(b, cfg.prec)
        dn = n - n0
        delta = q0 - q
        ratio = Fraction(2 * mcount) * ub / lb
        if delta == 0:
            # strictly lower degree; eps^dn with dn <= -1
            crude = max(crude, ratio)
        else:
            if dn > 0:
                floor_l = max(floor_l, Fraction(dn) / delta)
                fac = 1
                for i in range(2, dn + 2):
                    fac *= i
                crude = max(crude, ratio * fac / delta ** (dn + 1))
            else:
                crude = max(crude, ratio / delta)
    crude = max(crude, floor_l)

    def holds(point: Fraction) -> bool:
        tot = _ZERO
        for (n, q), b in others:
            ub = _bucket_abs_ub(b, cfg.prec)
            dn = n - n0
            delta = q0 - q
            val = ub * (point ** dn if dn >= 0 else Fraction(1) / point ** (-dn))
            if delta != 0:
                val *= exp_point(-delta * point, 64).hi
            tot += val
        return tot <= lb / 2

    # Each comparison term is monotone decreasing beyond floor_l, so a point
    # check extends to everything to its right.  Shrink crude by bisection.
    lo, hi = floor_l, crude
    if not holds(hi):
        # fall back to doubling; the analytic crude bound can be off only
        # through rounding of the exp upper bounds
        while not holds(hi):
            hi *= 2
    for _ in range(16):
        mid = (lo + hi) / 2
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return _InfSide(sign=sign, bound=hi)


# -- exact point sign -----------------------------------------------------------------


def poly_value_is_exactly_zero(p: PseudoPoly, eps0: Fraction) -> bool:
    groups: dict[Fraction, Fraction] = {}
    for (n, q, m), c in p.terms:
        g = q * eps0 + m
        groups[g] = groups.get(g, _ZERO) + c * eps0**n
    return all(v == 0 for v in groups.values())


def poly_sign_at(p: PseudoPoly, eps0: Fraction, cfg: SignConfig) -> int:
    """Sign of p(eps0) at rational eps0 > 0: -1, 0, or +1 (always decides)."""
    if poly_value_is_exactly_zero(p, eps0):
        return 0
    prec = cfg.prec
    while True:
        iv = eval_poly_point(p, eps0, prec)
        if iv.strictly_positive():
            return 1
        if iv.strictly_negative():
            return -1
        prec *= 2


def pseudo_sign_at(f: PseudoRational, eps0: Fraction, cfg: SignConfig) -> int:
    sn = poly_sign_at(f.num, eps0, cfg)
    if sn == 0:
        return 0
    sd = poly_sign_at(f.den, eps0, cfg)
    if sd == 0:
        raise ZeroDivisionError("denominator vanishes at eps=%s" % eps0)
    return sn * sd


# -- the interval engine -------------------------------------------------------------


def _normalized(p: PseudoPoly) -> PseudoPoly:
    """Sign-equivalent form on (0, inf): strip eps^min_pow, e^(max_expo*eps)
    and e^(min_ecoef) so ranges stay bounded at both ends."""
    if p.is_zero():
        return p
    return p.shift(-p.min_pow(), -p.max_expo(), -p.min_ecoef())


@dataclass
class _Analysis:
    nonneg: bool = True
    strict_pos: bool = True
    strict_neg: bool = True
    nonpos: bool = True
    witness_neg: Optional[Witness] = None
    witness_pos: Optional[Fraction] = None
    unresolved: list = field(default_factory=list)


def _certify_neg_at(p: PseudoPoly, eps0: Fraction, cfg: SignConfig) -> Witness:
    prec = cfg.prec
    while True:
        iv = eval_poly_point(p, eps0, prec)
        if iv.strictly_negative():
            return Witness(eps0=eps0, enclosure=iv)
        prec *= 2
        if prec > cfg.max_prec * 16:
            raise ArithmeticError("failed to certify negative value at eps=%s" % eps0)


def _segments(a: Fraction, b: Fraction) -> list[tuple[Fraction, Fraction]]:
    """Geometric pre-split of [a, b] so adaptive bisection matches the
    function's natural scale near 0 and spends no effort on huge flats."""
    segs = []
    x = a
    while x * 4 < b:
        segs.append((x, x * 2))
        x = x * 2
    segs.append((x, b))
    return segs


def _scan_range(
    p: PseudoPoly,
    a: Fraction,
    b: Fraction,
    cfg: SignConfig,
    res: _Analysis,
    stop_on_witness: bool,
) -> None:
    if a >= b:
        return
    work: list[tuple[Fraction, Fraction, int]] = [
        (lo, hi, 0) for lo, hi in _segments(a, b)
    ]
    # depth-first, leftmost first, for a deterministic first witness
    work.reverse()
    while work:
        lo, hi, depth = work.pop()
        iv = eval_poly_range(p, lo, hi, cfg.prec)
        if iv.strictly_positive():
            res.strict_neg = False
            res.nonpos = False
            if res.witness_pos is None:
                res.witness_pos = (lo + hi) / 2
            continue
        if iv.strictly_negative():
            res.strict_pos = False
            res.nonneg = False
            if res.witness_neg is None:
                res.witness_neg = _certify_neg_at(p, (lo + hi) / 2, cfg)
                if stop_on_witness:
                    return
            continue
        if iv.nonnegative():
            # touches zero from above; fine for nonneg, kills strictness
            res.strict_pos = False
            res.strict_neg = False
            res.nonpos = False
            continue
        if depth >= cfg.depth:
            res.unresolved.append((lo, hi))
            res.strict_pos = False
            res.strict_neg = False
            continue
        mid = (lo + hi) / 2
        work.append((mid, hi, depth + 1))
        work.append((lo, mid, depth + 1))


def analyze_poly(
    p: PseudoPoly,
    interval: EpsInterval,
    cfg: SignConfig = DEFAULT_SIGN_CONFIG,
    stop_on_witness: bool = True,
) -> _Analysis:
    """Full sign analysis of a pseudo-polynomial over the interval."""
    res = _Analysis()
    if p.is_zero():
        res.strict_pos = False
        res.strict_neg = False
        return res
    q = _normalized(p)
    lo, hi = interval.lo, interval.hi
    if lo == 0:
        side = _sign_near_zero(q, cfg)
        if side is None:
            res.unresolved.append((_ZERO, Fraction(1, 2**cfg.depth)))
            res.strict_pos = res.strict_neg = False
            lo = Fraction(1, 2**cfg.depth)
        else:
            if side.sign < 0:
                res.nonneg = False
                res.strict_pos = False
                pt = side.eta / 2 if hi is None else min(side.eta, hi) / 2
                res.witness_neg = _certify_neg_at(q, pt, cfg)
                if stop_on_witness:
                    return res
            else:
                res.strict_neg = False
                res.nonpos = False
                if res.witness_pos is None:
                    res.witness_pos = side.eta / 2
            lo = side.eta
            if hi is not None and lo >= hi:
                return res
    if hi is None:
        inf = _sign_at_infinity(q, cfg)
        if inf.sign < 0:
            res.nonneg = False
            res.strict_pos = False
            if res.witness_neg is None:
                res.witness_neg = _certify_neg_at(q, max(inf.bound, lo) + 1, cfg)
                if stop_on_witness:
                    return res
        else:
            res.strict_neg = False
            res.nonpos = False
            if res.witness_pos is None:
                res.witness_pos = max(inf.bound, lo) + 1
        hi = max(inf.bound, lo)
    _scan_range(q, lo, hi, cfg, res, stop_on_witness)
    return res


_strict_sign_cache: dict[tuple, Optional[int]] = {}


def strict_sign(
    p: PseudoPoly, interval: EpsInterval, cfg: SignConfig = DEFAULT_SIGN_CONFIG
) -> Optional[int]:
    """+1 / -1 when p is certified strictly positive / negative on the whole
    interval; None when that cannot be certified (including p == 0)."""
    key = (p, interval.lo, interval.hi)
    if key in _strict_sign_cache:
        return _strict_sign_cache[key]
    if p.is_zero():
        _strict_sign_cache[key] = None
        return None
    if len(p) == 1:
        (_, c), = p.terms
        out = 1 if c > 0 else -1
        _strict_sign_cache[key] = out
        return out
    res = analyze_poly(p, interval, cfg, stop_on_witness=False)
    out: Optional[int]
    if res.strict_pos and not res.unresolved and res.witness_neg is None:
        out = 1
    elif res.strict_neg and not res.unresolved and res.witness_pos is None:
        out = -1
    else:
        out = None
    _strict_sign_cache[key] = out
    return out


def sign_on_interval(
    f: PseudoRational,
    interval: EpsInterval,
    cfg: SignConfig = DEFAULT_SIGN_CONFIG,
) -> SignVerdict:
    """Decide the sign of f on the interval.

    Returns NonNegativeEverywhere only with a full certificate; a Witness
    carries a rational point and a certified strictly-negative enclosure of
    f there; anything unresolved is surfaced as Inconclusive.
    """
    if f.is_zero():
        return SignVerdict("nonneg")
    sd = strict_sign(f.den, interval, cfg)
    if sd is None:
        return SignVerdict(
            "inconclusive", reason="denominator sign undecided on %s" % interval
        )
    p = f.num if sd > 0 else -f.num
    res = analyze_poly(p, interval, cfg, stop_on_witness=True)
    if res.witness_neg is not None:
        w = res.witness_neg
        # translate the witness enclosure back to f itself
        prec = cfg.prec
        while True:
            iv = eval_pseudo_point(f, w.eps0, prec)
            if iv.strictly_negative():
                return SignVerdict("witness", witness=Witness(w.eps0, iv))
            prec *= 2
            if prec > cfg.max_prec * 16:
                return SignVerdict(
                    "inconclusive",
                    reason="witness at eps=%s failed re-certification" % w.eps0,
                )
    if res.unresolved:
        return SignVerdict(
            "inconclusive",
            reason="sign unresolved on %d sub-interval(s)" % len(res.unresolved),
            regions=tuple(res.unresolved),
        )
    return SignVerdict("nonneg")


def eval_interval(
    f: PseudoRational, eps, precision_bits: int = 128, max_prec: int = 4096
) -> Iv:
    """Certified enclosure [lo, hi] of f(eps) at rational eps > 0."""
    return eval_pseudo_point(f, Fraction(eps), precision_bits, max_prec)


# -- root isolation -------------------------------------------------------------------


@dataclass(frozen=True)
class RootIsolation:
    roots: tuple[Iv, ...]
    complete: bool
    reason: str = ""


def _root_count_bound(p: PseudoPoly) -> int:
    groups: dict[Fraction, int] = {}
    for (n, q, _m), _c in p.terms:
        groups[q] = max(groups.get(q, 0), n)
    return sum(d + 1 for d in groups.values()) - 1


def isolate_roots(
    f: PseudoRational,
    interval: EpsInterval,
    cfg: SignConfig = DEFAULT_SIGN_CONFIG,
) -> RootIsolation:
    """Disjoint rational-endpoint intervals containing exactly one root of f
    each, with a certificate that no root of f lies outside them.

    Only the numerator matters provided the denominator has certified
    strict sign; otherwise the isolation is reported incomplete.
    """
    if f.is_zero():
        raise ValueError("cannot isolate roots of the zero function")
    sd = strict_sign(f.den, interval, cfg)
    if sd is None:
        return RootIsolation((), False, "denominator sign undecided")
    p = _normalized(f.num)
    if p.is_const():
        return RootIsolation((), True)
    lo, hi = interval.lo, interval.hi
    roots: list[Iv] = []
    if lo == 0:
        side = _sign_near_zero(p, cfg)
        if side is None:
            return RootIsolation((), False, "0+ analysis exhausted")
        lo = side.eta
        if hi is not None and lo >= hi:
            return RootIsolation((), True)
    if hi is None:
        inf = _sign_at_infinity(p, cfg)
        hi = max(inf.bound, lo)
        if lo >= hi:
            return RootIsolation((), True)
    dp = p.derivative()
    bound = _root_count_bound(p)
    work: list[tuple[Fraction, Fraction, int]] = [(a, b, 0) for a, b in _segments(lo, hi)]
    work.reverse()
    unresolved = []
    while work:
        a, b, depth = work.pop()
        iv = eval_poly_range(p, a, b, cfg.prec)
        if not (iv.lo <= 0 <= iv.hi):
            continue
        sa = poly_sign_at(p, a, cfg)
        sb = poly_sign_at(p, b, cfg)
        if sa == 0:
            roots.append(Iv(a, a))
            eps_step = (b - a) / 4
            work.append((a + eps_step, b, depth + 1))
            continue
        if sb == 0:
            roots.append(Iv(b, b))
            work.append((a, b - (b - a) / 4, depth + 1))
            continue
        div = eval_poly_range(dp, a, b, cfg.prec)
        if not (div.lo <= 0 <= div.hi):
            # p monotone here: at most one root, present iff signs differ
            if sa * sb < 0:
                roots.append(Iv(a, b))
            continue
        if depth >= cfg.depth:
            unresolved.append((a, b))
            continue
        mid = (a + b) / 2
        work.append((mid, b, depth + 1))
        work.append((a, mid, depth + 1))
    roots.sort(key=lambda r: r.lo)
    if unresolved:
        return RootIsolation(
            tuple(roots), False, "cannot separate potential tangency in %d box(es)" % len(unresolved)
        )
    if len(roots) > max(bound, 0):
        # more sign changes than the derivative-reduction bound allows;
        # indicates an engine bug rather than an input problem
        raise ArithmeticError("root count exceeds structural bound")
    return RootIsolation(tuple(roots), True)


def refine_root(
    f: PseudoRational,
    box: Iv,
    max_width: Fraction,
    cfg: SignConfig = DEFAULT_SIGN_CONFIG,
) -> Iv:
    """Shrink an isolating interval around its (unique, simple) root."""
    a, b = box.lo, box.hi
    if a == b:
        return box
    sa = poly_sign_at(f.num, a, cfg)
    sb = poly_sign_at(f.num, b, cfg)
    if sa == 0:
        return Iv(a, a)
    if sb == 0:
        return Iv(b, b)
    if sa * sb > 0:
        raise ValueError("box endpoints have equal signs; not an isolating box")
    while b - a > max_width:
        mid = (a + b) / 2
        sm = poly_sign_at(f.num, mid, cfg)
        if sm == 0:
            return Iv(mid, mid)
        if sm == sa:
            a = mid
        else:
            b = mid
    return Iv(a, b)

"""Exact arithmetic of exponential polynomials in a single parameter eps.

The closed form of every probability the engine produces is a ratio of
"pseudo-polynomials": finite sums of terms

    c * eps^n * exp(q*eps) * exp(m)

with rational c, q, m and natural n.  The extra constant factor exp(m)
(``ecoef``) is only exercised by (eps, delta) queries whose delta is a
constant like exp(-2); everywhere else m == 0.

Monomials {eps^n * exp(q*eps) * exp(m)} are linearly independent over the
rationals (for the constant part this is Lindemann-Weierstrass), so the
normal form -- a coefficient map with no zero entries -- decides equality:
a function is identically zero iff its term map is empty.  Everything here
is immutable and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd
from typing import Iterable, Iterator, Optional

Rat = Fraction

# A term key: (n, q, m) for eps^n * exp(q*eps) * exp(m).  n may go negative
# in intermediate Laurent form; PseudoRational normalization restores n >= 0.
Key = tuple[int, Fraction, Fraction]

_ZERO = Fraction(0)
_ONE = Fraction(1)


class PseudoPoly:
    """Normal-form sum of c * eps^n * exp(q*eps) * exp(m) terms.

    Stored as a sorted tuple of (key, coef) with nonzero coefficients;
    the zero polynomial is the empty tuple.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: dict[Key, Fraction] | Iterable[tuple[Key, Fraction]] = ()):
        if isinstance(terms, dict):
            items = terms.items()
        else:
            items = terms
        self.terms: tuple[tuple[Key, Fraction], ...] = tuple(
            sorted((k, c) for k, c in items if c != 0)
        )
        self._hash: Optional[int] = None

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def zero() -> "PseudoPoly":
        return _POLY_ZERO

    @staticmethod
    def one() -> "PseudoPoly":
        return _POLY_ONE

    @staticmethod
    def const(c) -> "PseudoPoly":
        c = Fraction(c)
        if c == 0:
            return _POLY_ZERO
        return PseudoPoly({(0, _ZERO, _ZERO): c})

    @staticmethod
    def term(coef, pow: int = 0, expo=0, ecoef=0) -> "PseudoPoly":
        coef = Fraction(coef)
        if coef == 0:
            return _POLY_ZERO
        return PseudoPoly({(int(pow), Fraction(expo), Fraction(ecoef)): coef})

    @staticmethod
    def eps() -> "PseudoPoly":
        return PseudoPoly.term(1, pow=1)

    @staticmethod
    def exp_eps(q) -> "PseudoPoly":
        return PseudoPoly.term(1, expo=q)

    # -- predicates ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.terms or (
            len(self.terms) == 1 and self.terms[0][0] == (0, _ZERO, _ZERO)
        )

    def const_value(self) -> Fraction:
        if not self.terms:
            return _ZERO
        (key, coef), = self.terms
        if key != (0, _ZERO, _ZERO):
            raise ValueError("not a constant: %s" % (self,))
        return coef

    def min_pow(self) -> int:
        return min(k[0] for k, _ in self.terms)

    def min_expo(self) -> Fraction:
        return min(k[1] for k, _ in self.terms)

    def max_expo(self) -> Fraction:
        return max(k[1] for k, _ in self.terms)

    def min_ecoef(self) -> Fraction:
        return min(k[2] for k, _ in self.terms)

    def leading(self) -> tuple[Key, Fraction]:
        """Largest term under (expo, pow, ecoef) order; requires nonzero."""
        return max(self.terms, key=lambda t: (t[0][1], t[0][0], t[0][2]))

    # -- ring operations ---------------------------------------------------------

    def __add__(self, other: "PseudoPoly") -> "PseudoPoly":
        acc = dict(self.terms)
        for k, c in other.terms:
            s = acc.get(k, _ZERO) + c
            if s == 0:
                acc.pop(k, None)
            else:
                acc[k] = s
        return PseudoPoly(acc)

    def __sub__(self, other: "PseudoPoly") -> "PseudoPoly":
        return self + (-other)

    def __neg__(self) -> "PseudoPoly":
        return PseudoPoly({k: -c for k, c in self.terms})

    def __mul__(self, other: "PseudoPoly") -> "PseudoPoly":
        if not self.terms or not other.terms:
            return _POLY_ZERO
        acc: dict[Key, Fraction] = {}
        for (n1, q1, m1), c1 in self.terms:
            for (n2, q2, m2), c2 in other.terms:
                k = (n1 + n2, q1 + q2, m1 + m2)
                s = acc.get(k, _ZERO) + c1 * c2
                if s == 0:
                    acc.pop(k, None)
                else:
                    acc[k] = s
        return PseudoPoly(acc)

    def scale(self, c) -> "PseudoPoly":
        c = Fraction(c)
        if c == 0:
            return _POLY_ZERO
        return PseudoPoly({k: c * v for k, v in self.terms})

    def shift(self, pow: int = 0, expo=0, ecoef=0) -> "PseudoPoly":
        """Multiply by eps^pow * exp(expo*eps) * exp(ecoef)."""
        expo = Fraction(expo)
        ecoef = Fraction(ecoef)
        return PseudoPoly(
            {(n + pow, q + expo, m + ecoef): c for (n, q, m), c in self.terms}
        )

    def derivative(self) -> "PseudoPoly":
        acc: dict[Key, Fraction] = {}
        for (n, q, m), c in self.terms:
            if n != 0:
                k = (n - 1, q, m)
                s = acc.get(k, _ZERO) + c * n
                if s == 0:
                    acc.pop(k, None)
                else:
                    acc[k] = s
            if q != 0:
                k = (n, q, m)
                s = acc.get(k, _ZERO) + c * q
                if s == 0:
                    acc.pop(k, None)
                else:
                    acc[k] = s
        return PseudoPoly(acc)

    def exact_div(self, other: "PseudoPoly", max_steps: int = 256) -> Optional["PseudoPoly"]:
        """Exact quotient self/other if it exists as a pseudo-polynomial
        (Laurent exponents allowed), else None.

        Long division under the (expo, pow, ecoef) term order; bounded by
        max_steps and a remainder-growth guard so hopeless divisions fail
        fast (failing remainders grow, successful ones shrink).
        """
        if other.is_zero():
            raise ZeroDivisionError("division by zero pseudo-polynomial")
        if self.is_zero():
            return _POLY_ZERO
        lk, lc = other.leading()
        rem = dict(self.terms)
        quot: dict[Key, Fraction] = {}
        steps = 0
        growth_cap = len(self.terms) + 2 * len(other.terms) + 8
        while rem:
            steps += 1
            if steps > max_steps or len(rem) > growth_cap:
                return None
            rk = max(rem, key=lambda t: (t[1], t[0], t[2]))
            qk = (rk[0] - lk[0], rk[1] - lk[1], rk[2] - lk[2])
            qc = rem[rk] / lc
            quot[qk] = qc
            for (n, q, m), c in other.terms:
                k = (n + qk[0], q + qk[1], m + qk[2])
                s = rem.get(k, _ZERO) - qc * c
                if s == 0:
                    rem.pop(k, None)
                else:
                    rem[k] = s
        return PseudoPoly(quot)

    # -- misc ----------------------------------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, PseudoPoly) and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.terms)
        return self._hash

    def __iter__(self) -> Iterator[tuple[Key, Fraction]]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return "PseudoPoly(%s)" % format_poly(self)


_POLY_ZERO = PseudoPoly.__new__(PseudoPoly)
_POLY_ZERO.terms = ()
_POLY_ZERO._hash = None
_POLY_ONE = PseudoPoly.__new__(PseudoPoly)
_POLY_ONE.terms = (((0, _ZERO, _ZERO), _ONE),)
_POLY_ONE._hash = None


def _coef_lcm_den(polys: Iterable[PseudoPoly]) -> int:
    l = 1
    for p in polys:
        for _, c in p.terms:
            l = l * c.denominator // gcd(l, c.denominator)
    return l


def _coef_gcd_num(polys: Iterable[PseudoPoly]) -> int:
    g = 0
    for p in polys:
        for _, c in p.terms:
            g = gcd(g, c.numerator)
    return g or 1


class PseudoRational:
    """Ratio of two pseudo-polynomials, normalized.

    Invariants of the normal form:
      - denominator is not the zero polynomial;
      - joint minimum eps-power over num and den is 0 (and all powers >= 0);
      - joint minimum exp(q*eps) exponent is 0 (all q >= 0);
      - joint minimum constant exponent m is 0;
      - coefficients are integers with overall gcd 1;
      - the denominator's leading coefficient is positive.

    Nothing here certifies that the denominator is nonvanishing on
    (0, inf); users that need that (sign decisions) certify it on demand.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: PseudoPoly, den: PseudoPoly = _POLY_ONE):
        if den.is_zero():
            raise ZeroDivisionError("identically-zero denominator")
        if num.is_zero():
            den = _POLY_ONE
        else:
            if not den.is_const() and len(num.terms) <= 64 and len(den.terms) <= 24:
                q = num.exact_div(den, max_steps=96)
                if q is not None:
                    num, den = q, _POLY_ONE
            dp = min(num.min_pow(), den.min_pow())
            dq = min(num.min_expo(), den.min_expo())
            dm = min(num.min_ecoef(), den.min_ecoef())
            if dp or dq or dm:
                num = num.shift(-dp, -dq, -dm)
                den = den.shift(-dp, -dq, -dm)
        l = _coef_lcm_den((num, den))
        if l != 1:
            num = num.scale(l)
            den = den.scale(l)
        g = _coef_gcd_num((num, den))
        if den.leading()[1] < 0:
            g = -g
        if g != 1:
            num = num.scale(Fraction(1, g))
            den = den.scale(Fraction(1, g))
        self.num = num
        self.den = den
        self._hash: Optional[int] = None

    # -- construction ---------------------------------------------------------

    @staticmethod
    def const(c) -> "PseudoRational":
        return PseudoRational(PseudoPoly.const(c))

    @staticmethod
    def zero() -> "PseudoRational":
        return _RAT_ZERO

    @staticmethod
    def one() -> "PseudoRational":
        return _RAT_ONE

    @staticmethod
    def from_poly(p: PseudoPoly) -> "PseudoRational":
        return PseudoRational(p)

    @staticmethod
    def exp_eps(q) -> "PseudoRational":
        return PseudoRational(PseudoPoly.exp_eps(q))

    @staticmethod
    def eps() -> "PseudoRational":
        return PseudoRational(PseudoPoly.eps())

    # -- predicates ---------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.num == self.den

    def is_const(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def const_value(self) -> Fraction:
        return self.num.const_value() / self.den.const_value()

    # -- field operations --------------------------------------------------------

    def __add__(self, other: "PseudoRational") -> "PseudoRational":
        if self.den == other.den:
            return PseudoRational(self.num + other.num, self.den)
        return PseudoRational(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    def __sub__(self, other: "PseudoRational") -> "PseudoRational":
        return self + (-other)

    def __neg__(self) -> "PseudoRational":
        return PseudoRational(-self.num, self.den)

    def __mul__(self, other: "PseudoRational") -> "PseudoRational":
        # Opportunistic cross-cancellation keeps telescoping conditional
        # products (P(C and e)/P(C) chains) from swelling.
        n1, d1, n2, d2 = self.num, self.den, other.num, other.den
        if not d2.is_const() and len(n1.terms) <= 64 and len(d2.terms) <= 24:
            q = n1.exact_div(d2, max_steps=96)
            if q is not None:
                n1, d2 = q, _POLY_ONE
        if not d1.is_const() and len(n2.terms) <= 64 and len(d1.terms) <= 24:
            q = n2.exact_div(d1, max_steps=96)
            if q is not None:
                n2, d1 = q, _POLY_ONE
        return PseudoRational(n1 * n2, d1 * d2)

    def __truediv__(self, other: "PseudoRational") -> "PseudoRational":
        if other.is_zero():
            raise ZeroDivisionError("division by identically-zero function")
        return self * PseudoRational(other.den, other.num)

    def scale(self, c) -> "PseudoRational":
        return PseudoRational(self.num.scale(c), self.den)

    def shift_exp(self, q) -> "PseudoRational":
        """Multiply by exp(q*eps)."""
        return PseudoRational(self.num.shift(0, q, 0), self.den)

    def equivalent(self, other: "PseudoRational") -> bool:
        """Mathematical equality of the two functions."""
        return (self.num * other.den - other.num * self.den).is_zero()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PseudoRational)
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __repr__(self) -> str:
        return "PseudoRational(%s)" % format_pseudo(self)


_RAT_ZERO = PseudoRational(_POLY_ZERO)
_RAT_ONE = PseudoRational(_POLY_ONE)


def combine(a: PseudoRational, b: PseudoRational, op: str) -> PseudoRational:
    """Spec-surface arithmetic entry point: op in {add, sub, mul, div}."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError("unknown op %r" % op)


def is_zero(f: PseudoRational) -> bool:
    """True iff f is the zero function on (0, inf).

    Sound and complete: the numerator's normal form is empty exactly when
    the function vanishes identically, by linear independence of the
    monomials eps^n exp(q*eps) exp(m) over the rationals.
    """
    return f.is_zero()


def laurent_sum_to_rational(acc: dict[Key, Fraction]) -> PseudoRational:
    """Convert a raw (possibly Laurent, possibly negative-exponent) term sum
    into a normalized PseudoRational by clearing eps powers and exponents."""
    terms = {k: c for k, c in acc.items() if c != 0}
    if not terms:
        return _RAT_ZERO
    min_n = min(k[0] for k in terms)
    min_q = min(k[1] for k in terms)
    min_m = min(k[2] for k in terms)
    num = PseudoPoly(terms)
    den = _POLY_ONE
    sh_n = -min_n if min_n < 0 else 0
    sh_q = -min_q if min_q < 0 else 0
    sh_m = -min_m if min_m < 0 else 0
    if sh_n or sh_q or sh_m:
        num = num.shift(sh_n, sh_q, sh_m)
        den = den.shift(sh_n, sh_q, sh_m)
    return PseudoRational(num, den)


# -- canonical text form ------------------------------------------------------------
#
# Used in JSON reports and accepted back by parse_pseudo:
#   (c * eps^n * exp(q*eps) + ...) / (...)


def _fmt_rat(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else "%d/%d" % (x.numerator, x.denominator)


def _fmt_term(key: Key, coef: Fraction) -> str:
    n, q, m = key
    parts = []
    if coef != 1 or (n == 0 and q == 0 and m == 0):
        parts.append(_fmt_rat(coef))
    if n == 1:
        parts.append("eps")
    elif n != 0:
        parts.append("eps^%d" % n)
    if q != 0:
        parts.append("exp(%s*eps)" % _fmt_rat(q))
    if m != 0:
        parts.append("exp(%s)" % _fmt_rat(m))
    return " * ".join(parts)


def format_poly(p: PseudoPoly) -> str:
    if p.is_zero():
        return "0"
    out = []
    for key, coef in sorted(p.terms, key=lambda t: (t[0][1], t[0][0], t[0][2]), reverse=True):
        sign = "-" if coef < 0 else "+"
        body = _fmt_term(key, abs(coef))
        out.append((sign, body))
    first_sign, first_body = out[0]
    s = ("-" if first_sign == "-" else "") + first_body
    for sign, body in out[1:]:
        s += " %s %s" % (sign, body)
    return s


def format_pseudo(f: PseudoRational) -> str:
    if f.den == _POLY_ONE:
        return "(%s)" % format_poly(f.num)
    return "(%s) / (%s)" % (format_poly(f.num), format_poly(f.den))


# -- expression parser ----------------------------------------------------------------
#
# Grammar (for delta strings, choose pmf entries, and report round-trips):
#   expr   := term (('+'|'-') term)*
#   term   := unary (('*'|'/') unary)*
#   unary  := '-' unary | atom ('^' INT)?
#   atom   := NUMBER | 'eps' | 'exp' '(' expr ')' | '(' expr ')'
# NUMBER is an integer, p/q handled via '/', or an exact decimal like 2.125.
# The argument of exp() must reduce to c + q*eps.


class PseudoParseError(ValueError):
    pass


class _Tok:
    __slots__ = ("kind", "val", "pos")

    def __init__(self, kind, val, pos):
        self.kind, self.val, self.pos = kind, val, pos


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            lit = text[i:j]
            try:
                val = Fraction(lit)
            except ValueError:
                raise PseudoParseError("bad numeric literal %r at %d" % (lit, i))
            toks.append(_Tok("num", val, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("name", text[i:j], i))
            i = j
            continue
        if ch in "+-*/^()":
            toks.append(_Tok(ch, ch, i))
            i += 1
            continue
        raise PseudoParseError("unexpected character %r at %d" % (ch, i))
    toks.append(_Tok("end", None, n))
    return toks


class _PseudoParser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind=None) -> _Tok:
        t = self.toks[self.i]
        if kind is not None and t.kind != kind:
            raise PseudoParseError("expected %s, got %r at %d" % (kind, t.val, t.pos))
        self.i += 1
        return t

    def parse(self) -> PseudoRational:
        f = self.expr()
        if self.peek().kind != "end":
            t = self.peek()
            raise PseudoParseError("trailing input at %d: %r" % (t.pos, t.val))
        return f

    def expr(self) -> PseudoRational:
        f = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.take().kind
            g = self.term()
            f = f + g if op == "+" else f - g
        return f

    def term(self) -> PseudoRational:
        f = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.take().kind
            g = self.unary()
            f = f * g if op == "*" else f / g
        return f

    def unary(self) -> PseudoRational:
        if self.peek().kind == "-":
            self.take()
            return -self.unary()
        f = self.atom()
        if self.peek().kind == "^":
            self.take()
            neg = False
            if self.peek().kind == "-":
                self.take()
                neg = True
            t = self.take("num")
            if t.val.denominator != 1:
                raise PseudoParseError("non-integer power at %d" % t.pos)
            k = int(t.val)
            g = _RAT_ONE
            base = f
            for _ in range(k):
                g = g * base
            f = _RAT_ONE / g if neg else g
        return f

    def atom(self) -> PseudoRational:
        t = self.peek()
        if t.kind == "num":
            self.take()
            return PseudoRational.const(t.val)
        if t.kind == "(":
            self.take()
            f = self.expr()
            self.take(")")
            return f
        if t.kind == "name":
            if t.val == "eps":
                self.take()
                return PseudoRational.eps()
            if t.val == "exp":
                self.take()
                self.take("(")
                arg = self.expr()
                self.take(")")
                return _exp_of(arg, t.pos)
            raise PseudoParseError("unknown identifier %r at %d" % (t.val, t.pos))
        raise PseudoParseError("unexpected %r at %d" % (t.val, t.pos))


def _exp_of(arg: PseudoRational, pos: int) -> PseudoRational:
    if not arg.den.is_const():
        raise PseudoParseError("exp() argument must be c + q*eps (at %d)" % pos)
    d = arg.den.const_value()
    c = _ZERO
    q = _ZERO
    for (n, qq, m), coef in arg.num.terms:
        if qq != 0 or m != 0 or n > 1:
            raise PseudoParseError("exp() argument must be c + q*eps (at %d)" % pos)
        if n == 0:
            c = coef / d
        else:
            q = coef / d
    return PseudoRational(PseudoPoly.term(1, expo=q, ecoef=c))


def parse_pseudo(text: str) -> PseudoRational:
    """Parse the canonical text form (and ordinary arithmetic over eps,
    exp(q*eps), exp(m)) into a PseudoRational."""
    return _PseudoParser(text).parse()

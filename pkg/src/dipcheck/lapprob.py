"""Exact probabilities of linear-comparison systems over independent noise.

Given independent variables X_i ~ Lap(a_i*eps, mu_i) (continuous) or
Z_i ~ DLap(a_i*eps, mu_i) (integer), and a conjunction of linear
comparisons over them, the probability of the event is an exact ratio of
exponential polynomials in eps.  Continuous systems are integrated by a
nested innermost-out pass: each level integrates c * u^k * e^(r*eps*u)
between linear bounds, case-splitting on which bound is active and on
which side of the density kink (the mean) the variable lies, so every
piece has polynomial-times-exponential integrand and linear bounds.
Integer systems follow the same recursion with geometric-style sums via
exact discrete antidifferences.

Continuous systems accept arbitrary rational coefficients.  Integer
systems must be in difference form (unit coefficients after
normalization); anything else raises UnsupportedSystem, and callers fall
back to the fixed-eps truncated enclosure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Optional

from .symalg.intervals import Iv, exp_point
from .symalg.pseudo import PseudoPoly, PseudoRational, laurent_sum_to_rational

_ZERO = Fraction(0)
_ONE = Fraction(1)

REAL = "real"
INT = "int"


class UnsupportedSystem(Exception):
    """System shape outside the exact engine (general integer coefficients)."""


class IntegrationError(ArithmeticError):
    """A symbolic integral or sum diverged; indicates an ill-posed system."""


@dataclass(frozen=True)
class NoiseVar:
    id: str
    sort: str  # REAL or INT
    scale_coef: Fraction  # a in Lap(a*eps, mean); a > 0
    mean: Fraction

    def __post_init__(self):
        object.__setattr__(self, "scale_coef", Fraction(self.scale_coef))
        object.__setattr__(self, "mean", Fraction(self.mean))
        if self.scale_coef <= 0:
            raise ValueError("scale coefficient must be positive")
        if self.sort not in (REAL, INT):
            raise ValueError("bad sort %r" % self.sort)
        if self.sort == INT and self.mean.denominator != 1:
            raise ValueError("integer-sort mean must be an integer")


def _canon_coeffs(coeffs: dict[str, Fraction]) -> tuple[tuple[str, Fraction], ...]:
    return tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))


@dataclass(frozen=True)
class LinearConstraint:
    """sum(coeffs[v] * v) + const  REL  0, REL in {'<', '<=', '==', '!='}.

    Normalized to primitive integer coefficients (positive scaling only,
    so the inequality's orientation is preserved).
    """

    coeffs: tuple[tuple[str, Fraction], ...]
    const: Fraction
    rel: str

    @staticmethod
    def make(coeffs: dict[str, Fraction], const, rel: str) -> "LinearConstraint":
        if rel not in ("<", "<=", "==", "!="):
            raise ValueError("bad relation %r" % rel)
        const = Fraction(const)
        items = {v: Fraction(c) for v, c in coeffs.items() if c != 0}
        if items:
            mult = 1
            for c in list(items.values()) + [const]:
                mult = mult * c.denominator // gcd(mult, c.denominator)
            g = 0
            for c in items.values():
                g = gcd(g, abs(c.numerator * (mult // c.denominator)))
            g = gcd(g, abs(const.numerator * (mult // const.denominator))) or 1
            scale = Fraction(mult, g)
            items = {v: c * scale for v, c in items.items()}
            const = const * scale
        return LinearConstraint(_canon_coeffs(items), const, rel)

    @staticmethod
    def compare(lhs: dict[str, Fraction], lconst, op: str, rhs: dict[str, Fraction], rconst) -> "LinearConstraint":
        """lhs + lconst OP rhs + rconst, OP in {<, <=, >, >=, ==, !=}."""
        diff = dict(lhs)
        for v, c in rhs.items():
            diff[v] = diff.get(v, _ZERO) - c
        const = Fraction(lconst) - Fraction(rconst)
        if op in ("<", "<=", "==", "!="):
            return LinearConstraint.make(diff, const, op)
        if op in (">", ">="):
            flipped = {v: -c for v, c in diff.items()}
            return LinearConstraint.make(flipped, -const, "<" if op == ">" else "<=")
        raise ValueError("bad comparison %r" % op)

    def negated(self) -> "LinearConstraint":
        neg = {v: -c for v, c in self.coeffs}
        if self.rel == "<":  # not(f < 0)  <=>  -f <= 0
            return LinearConstraint.make(neg, -self.const, "<=")
        if self.rel == "<=":
            return LinearConstraint.make(neg, -self.const, "<")
        if self.rel == "==":
            return LinearConstraint(self.coeffs, self.const, "!=")
        return LinearConstraint(self.coeffs, self.const, "==")

    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)

    def __str__(self) -> str:
        parts = []
        for v, c in self.coeffs:
            parts.append("%s%s*%s" % ("+" if c > 0 and parts else "", c, v))
        if self.const or not parts:
            parts.append("%s%s" % ("+" if self.const > 0 and parts else "", self.const))
        return "%s %s 0" % (" ".join(parts), self.rel)


@dataclass(frozen=True)
class ConstraintSystem:
    vars: tuple[NoiseVar, ...]
    constraints: tuple[LinearConstraint, ...]

    def __post_init__(self):
        ids = {v.id for v in self.vars}
        if len(ids) != len(self.vars):
            raise ValueError("duplicate variable declaration")
        sorts = {v.sort for v in self.vars}
        if len(sorts) > 1:
            raise ValueError("constraint system must be single-sorted")
        for c in self.constraints:
            for v in c.variables():
                if v not in ids:
                    raise ValueError("undeclared variable %r" % v)

    @property
    def sort(self) -> str:
        return self.vars[0].sort if self.vars else REAL

    def with_extra(self, extra: LinearConstraint) -> "ConstraintSystem":
        return ConstraintSystem(self.vars, self.constraints + (extra,))

    @staticmethod
    def of(vars: Iterable[NoiseVar], constraints: Iterable[LinearConstraint] = ()) -> "ConstraintSystem":
        return ConstraintSystem(tuple(vars), tuple(constraints))


@dataclass(frozen=True)
class OrderRegion:
    """A chain over the system's variables: consecutive entries are related
    by `value(prev) + offset REL value(next)`; for the integer sort an entry
    may be a block of variables forced equal."""

    blocks: tuple[tuple[str, ...], ...]
    strict: tuple[bool, ...]  # len(blocks) - 1 link flags
    offsets: tuple[Fraction, ...]  # per-link offsets (0 in generated regions)

    def constraints(self, sort: str) -> list[LinearConstraint]:
        out: list[LinearConstraint] = []
        for block in self.blocks:
            for a, b in zip(block, block[1:]):
                out.append(LinearConstraint.make({a: _ONE, b: -_ONE}, 0, "=="))
        for i, (blk, nxt) in enumerate(zip(self.blocks, self.blocks[1:])):
            rel = "<" if self.strict[i] else "<="
            out.append(
                LinearConstraint.make({blk[0]: _ONE, nxt[0]: -_ONE}, self.offsets[i], rel)
            )
        return out


# -- canonical internal constraint form ------------------------------------------------
#
# (coeffs dict, const, strict) standing for  sum c_i v_i + const  (<|<=)  0.


def _orientations(c: LinearConstraint) -> list[list[tuple[dict, Fraction, bool]]]:
    """Expand a constraint into alternative conjunctions of (<|<=) atoms.

    '==' becomes one conjunction of two <=; '!=' becomes two alternative
    systems (strict < on either side) whose probabilities add.
    """
    coeffs = dict(c.coeffs)
    neg = {v: -x for v, x in coeffs.items()}
    if c.rel == "<":
        return [[(coeffs, c.const, True)]]
    if c.rel == "<=":
        return [[(coeffs, c.const, False)]]
    if c.rel == "==":
        return [[(coeffs, c.const, False), (neg, -c.const, False)]]
    # '!='
    return [[(coeffs, c.const, True)], [(neg, -c.const, True)]]


def _expand_atoms(constraints: Iterable[LinearConstraint]) -> list[list[tuple[dict, Fraction, bool]]]:
    """Cartesian expansion of '!=' splits; returns alternative atom lists."""
    alts: list[list[tuple[dict, Fraction, bool]]] = [[]]
    for c in constraints:
        options = _orientations(c)
        alts = [base + opt for base in alts for opt in options]
    return alts


def _settle_const_atom(const: Fraction, strict: bool) -> Optional[bool]:
    return const < 0 if strict else const <= 0


# -- continuous systems ---------------------------------------------------------------
#
# Term representation during integration:
#   key  = (epow, eexpo, vpart) with vpart a sorted tuple of (var, deg, rate)
#   value = rational coefficient
# standing for  coef * eps^epow * e^(eexpo*eps) * prod_v v^deg * e^(rate*eps*v).

_RKey = tuple[int, Fraction, tuple]


def _vpart_get(vpart: tuple, var: str) -> tuple[int, Fraction]:
    for v, d, r in vpart:
        if v == var:
            return d, r
    return 0, _ZERO


def _vpart_without(vpart: tuple, var: str) -> tuple:
    return tuple(e for e in vpart if e[0] != var)


def _vpart_merge(vpart: tuple, extra: dict[str, tuple[int, Fraction]]) -> tuple:
    acc = {v: (d, r) for v, d, r in vpart}
    for v, (d, r) in extra.items():
        d0, r0 = acc.get(v, (0, _ZERO))
        acc[v] = (d0 + d, r0 + r)
    return tuple(sorted((v, d, r) for v, (d, r) in acc.items() if d != 0 or r != 0))


def _form_pow(coeffs: dict[str, Fraction], const: Fraction, j: int) -> dict[tuple, Fraction]:
    """(sum coeffs*v + const)^j as {sorted degree tuple: coefficient}."""
    acc: dict[tuple, Fraction] = {(): _ONE}
    base: dict[tuple, Fraction] = {(): const} if const != 0 else {}
    for v, c in coeffs.items():
        base[((v, 1),)] = c
    for _ in range(j):
        nxt: dict[tuple, Fraction] = {}
        for k1, c1 in acc.items():
            for k2, c2 in base.items():
                degs = dict(k1)
                for v, d in k2:
                    degs[v] = degs.get(v, 0) + d
                key = tuple(sorted(degs.items()))
                nxt[key] = nxt.get(key, _ZERO) + c1 * c2
        acc = {k: c for k, c in nxt.items() if c != 0}
        if not acc:
            break
    return acc


def _real_eval_at_bound(
    coef: Fraction,
    epow: int,
    eexpo: Fraction,
    vpart: tuple,
    deg: int,
    rate: Fraction,
    bound,  # (coeffs dict, const) or '+inf' / '-inf'
    out: dict[_RKey, Fraction],
    sign: int,
) -> None:
    """Add sign * [antiderivative piece evaluated at bound] into out."""
    if bound == "+inf":
        if rate < 0:
            return  # vanishes
        raise IntegrationError("divergent upper limit (rate %s)" % rate)
    if bound == "-inf":
        if rate > 0:
            return
        raise IntegrationError("divergent lower limit (rate %s)" % rate)
    coeffs, const = bound
    add_expo = rate * const
    rate_adds = {v: rate * c for v, c in coeffs.items() if c != 0}
    for degs, pc in _form_pow(coeffs, const, deg).items():
        extra = {v: (d, _ZERO) for v, d in degs}
        for v, r in rate_adds.items():
            d0, r0 = extra.get(v, (0, _ZERO))
            extra[v] = (d0, r0 + r)
        key = (epow, eexpo + add_expo, _vpart_merge(vpart, extra))
        out[key] = out.get(key, _ZERO) + sign * coef * pc


def _integrate_term_real(
    key: _RKey, coef: Fraction, var: str, lower, upper, out: dict[_RKey, Fraction]
) -> None:
    """Integral of the term over var in [lower, upper] accumulated into out."""
    epow, eexpo, vpart = key
    deg, rate = _vpart_get(vpart, var)
    rest = _vpart_without(vpart, var)
    if rate == 0:
        # polynomial antiderivative u^(deg+1)/(deg+1)
        c = coef / (deg + 1)
        _real_eval_at_bound(c, epow, eexpo, rest, deg + 1, _ZERO, upper, out, +1)
        _real_eval_at_bound(c, epow, eexpo, rest, deg + 1, _ZERO, lower, out, -1)
        return
    fact = 1
    for i in range(deg + 1):
        # piece: (-1)^i * deg!/(deg-i)! * u^(deg-i) e^(rate*eps*u) / (rate*eps)^(i+1)
        if i > 0:
            fact *= deg - i + 1
        c = coef * ((-1) ** i) * fact / rate ** (i + 1)
        _real_eval_at_bound(c, epow - (i + 1), eexpo, rest, deg - i, rate, upper, out, +1)
        _real_eval_at_bound(c, epow - (i + 1), eexpo, rest, deg - i, rate, lower, out, -1)


def _bound_cases(lowers: list, uppers: list):
    """Yield (lower, upper, dominance atoms) triples covering the box
    [max lowers, min uppers] disjointly (ties broken by list position)."""
    lo_opts = lowers if lowers else ["-inf"]
    up_opts = uppers if uppers else ["+inf"]
    for li, lo in enumerate(lo_opts):
        for ui, up in enumerate(up_opts):
            atoms = []
            if lo != "-inf":
                for j, other in enumerate(lo_opts):
                    if j == li:
                        continue
                    # other <= lo (strict when other comes earlier)
                    diff = dict(other[0])
                    for v, c in lo[0].items():
                        diff[v] = diff.get(v, _ZERO) - c
                    atoms.append((diff, other[1] - lo[1], j < li))
            if up != "+inf":
                for j, other in enumerate(up_opts):
                    if j == ui:
                        continue
                    diff = dict(up[0])
                    for v, c in other[0].items():
                        diff[v] = diff.get(v, _ZERO) - c
                    atoms.append((diff, up[1] - other[1], j < ui))
            if lo != "-inf" and up != "+inf":
                diff = dict(lo[0])
                for v, c in up[0].items():
                    diff[v] = diff.get(v, _ZERO) - c
                atoms.append((diff, lo[1] - up[1], False))
            yield lo, up, atoms


def _split_const_atoms(atoms, live: set):
    """Separate atoms into (symbolic over live vars, boolean verdict)."""
    keep = []
    for coeffs, const, strict in atoms:
        sym = {v: c for v, c in coeffs.items() if c != 0}
        if any(v not in live for v in sym):
            raise AssertionError("atom references integrated variable")
        if sym:
            keep.append((sym, const, strict))
        else:
            verdict = _settle_const_atom(const, strict)
            if not verdict:
                return None
    return keep


def _prob_real_atoms(atoms: list, vars: list[NoiseVar]) -> dict[_RKey, Fraction]:
    order = sorted(vars, key=lambda v: v.id)
    live = {v.id for v in order}
    start = _split_const_atoms(atoms, live)
    total: dict[_RKey, Fraction] = {}
    if start is None:
        return total
    unit: dict[_RKey, Fraction] = {(0, _ZERO, ()): _ONE}
    cases = [(start, unit)]
    for nv in reversed(order):
        u = nv.id
        live.discard(u)
        a, mu = nv.scale_coef, nv.mean
        nxt = []
        for atoms_c, terms in cases:
            with_u = [(c, k, s) for c, k, s in atoms_c if u in c]
            without = [(c, k, s) for c, k, s in atoms_c if u not in c]
            lowers0: list = []
            uppers0: list = []
            for coeffs, const, _strict in with_u:
                cu = coeffs[u]
                rest = {v: -c / cu for v, c in coeffs.items() if v != u}
                bconst = -const / cu
                (uppers0 if cu > 0 else lowers0).append((rest, bconst))
            for side in (0, 1):  # 0: u <= mu, 1: u >= mu
                lowers = list(lowers0)
                uppers = list(uppers0)
                if side == 0:
                    uppers = uppers + [({}, mu)]
                    rate_add, expo_add = a, -a * mu
                else:
                    lowers = lowers + [({}, mu)]
                    rate_add, expo_add = -a, a * mu
                for lo, up, dom in _bound_cases(lowers, uppers):
                    dom_sym = _split_const_atoms(dom, live)
                    if dom_sym is None:
                        continue
                    out: dict[_RKey, Fraction] = {}
                    for (epow, eexpo, vpart), coef in terms.items():
                        deg, rate = _vpart_get(vpart, u)
                        key = (
                            epow + 1,
                            eexpo + expo_add,
                            _vpart_merge(
                                _vpart_without(vpart, u),
                                {u: (deg, rate + rate_add)},
                            ),
                        )
                        _integrate_term_real(key, coef * a / 2, u, lo, up, out)
                    out = {k: c for k, c in out.items() if c != 0}
                    if out:
                        nxt.append((without + dom_sym, out))
        cases = nxt
    for atoms_c, terms in cases:
        if atoms_c:
            raise AssertionError("unsettled constraints after integration")
        for (epow, eexpo, vpart), coef in terms.items():
            if vpart:
                raise AssertionError("free variable survived integration")
            k = (epow, eexpo, _ZERO)
            total[k] = total.get(k, _ZERO) + coef
    return total


def _laurent_from_rkeys(acc: dict[_RKey, Fraction]) -> PseudoRational:
    return laurent_sum_to_rational(
        {(epow, eexpo, ecoef): c for (epow, eexpo, ecoef), c in acc.items()}
    )


def is_difference_form(sys: ConstraintSystem) -> bool:
    for c in sys.constraints:
        vs = c.variables()
        if len(vs) > 2:
            return False
        if len(vs) == 2:
            (v1, c1), (v2, c2) = c.coeffs
            if c1 + c2 != 0:
                return False
    return True


def decompose_orders(sys: ConstraintSystem, max_vars: int = 7) -> list[OrderRegion]:
    """Disjoint chain regions covering the event of the system.

    Real sort: the linear extensions of the variables (strict chains; ties
    are measure zero).  Integer sort: all weak orderings (ordered set
    partitions), equalities explicit.  Regions incompatible with a pure
    two-variable, zero-offset constraint are pruned up front.
    """
    if not is_difference_form(sys):
        raise UnsupportedSystem("not a difference-form system")
    ids = sorted(v.id for v in sys.vars)
    if len(ids) > max_vars:
        raise UnsupportedSystem("too many variables for order decomposition")
    pure: list[tuple[str, str, bool]] = []  # a - b (<|<=) 0 with offset 0
    for c in sys.constraints:
        if len(c.coeffs) == 2 and c.const == 0 and c.rel in ("<", "<="):
            (v1, c1), (v2, c2) = c.coeffs
            if c1 > 0:
                pure.append((v1, v2, c.rel == "<"))
            else:
                pure.append((v2, v1, c.rel == "<"))

    def compatible(blocks: tuple[tuple[str, ...], ...]) -> bool:
        pos = {}
        for i, blk in enumerate(blocks):
            for v in blk:
                pos[v] = i
        for lo_v, hi_v, strict in pure:
            if pos[lo_v] > pos[hi_v]:
                return False
            if strict and pos[lo_v] == pos[hi_v]:
                return False
        return True

    regions: list[OrderRegion] = []
    if sys.sort == REAL or not ids:
        for perm in itertools.permutations(ids):
            blocks = tuple((v,) for v in perm)
            if not compatible(blocks):
                continue
            n = len(perm)
            regions.append(
                OrderRegion(blocks, (True,) * (n - 1), (_ZERO,) * (n - 1))
            )
        return regions

    def weak_orders(items: list[str]):
        if not items:
            yield ()
            return
        first, rest = items[0], items[1:]
        for sub in weak_orders(rest):
            for i, blk in enumerate(sub):
                yield sub[:i] + (tuple(sorted(blk + (first,))),) + sub[i + 1:]
            for i in range(len(sub) + 1):
                yield sub[:i] + ((first,),) + sub[i:]

    seen = set()
    for blocks in weak_orders(ids):
        if blocks in seen:
            continue
        seen.add(blocks)
        if not compatible(blocks):
            continue
        n = len(blocks)
        regions.append(OrderRegion(blocks, (True,) * (n - 1), (_ZERO,) * (n - 1)))
    regions.sort(key=lambda r: r.blocks)
    return regions


def prob_real_system(sys: ConstraintSystem, via_orders: Optional[bool] = None) -> PseudoRational:
    """Exact probability that all constraints hold, all variables real-sort.

    Difference-form systems are decomposed into total-order regions first
    (matching the way partial orders are eliminated); general rational
    coefficients integrate directly with bound case-splitting.
    """
    if any(v.sort != REAL for v in sys.vars):
        raise ValueError("prob_real_system requires real-sort variables")
    if via_orders is None:
        via_orders = is_difference_form(sys) and len(sys.vars) <= 5
    total: dict[_RKey, Fraction] = {}

    def accumulate(atoms):
        part = _prob_real_atoms(atoms, list(sys.vars))
        for k, c in part.items():
            total[k] = total.get(k, _ZERO) + c

    # '==' between distinct real forms is a null event
    reduced = []
    for c in sys.constraints:
        if c.rel == "==":
            if c.coeffs:
                return PseudoRational.zero()
            if c.const != 0:
                return PseudoRational.zero()
            continue
        reduced.append(c)
    alternatives = _expand_atoms(reduced)
    if via_orders:
        regions = decompose_orders(sys)
        for region in regions:
            rcons = region.constraints(REAL)
            for alt in alternatives:
                ratoms = alt + [
                    atom for rc in rcons for atom in _orientations(rc)[0]
                ]
                accumulate(ratoms)
    else:
        for alt in alternatives:
            accumulate(alt)
    return _laurent_from_rkeys(total)


# -- integer systems -------------------------------------------------------------------
#
# Terms carry PseudoRational coefficients (discrete antidifferences divide
# by rho - 1); keys are the vpart tuples alone.


def _kappa(a: Fraction) -> PseudoRational:
    one = PseudoPoly.one()
    em = PseudoPoly.exp_eps(-a)
    return PseudoRational(one - em, one + em)


_antidiff_cache: dict[tuple[int, Fraction], list[PseudoRational]] = {}


def _antidiff_coeffs(k: int, rate: Fraction) -> list[PseudoRational]:
    """Coefficients b_0..b_k of p with rho*p(u+1) - p(u) = u^k, rho=e^(rate*eps)."""
    key = (k, rate)
    hit = _antidiff_cache.get(key)
    if hit is not None:
        return hit
    rho = PseudoRational.exp_eps(rate)
    one = PseudoRational.one()
    denom = rho - one
    b: list[Optional[PseudoRational]] = [None] * (k + 1)
    b[k] = one / denom
    binom = [[1] * (i + 1) for i in range(k + 1)]
    for i in range(2, k + 1):
        for j in range(1, i):
            binom[i][j] = binom[i - 1][j - 1] + binom[i - 1][j]
    for i in range(k - 1, -1, -1):
        s = PseudoRational.zero()
        for j in range(i + 1, k + 1):
            s = s + b[j].scale(binom[j][i])
        b[i] = (rho.scale(-1) * s) / denom
    out = [x for x in b]
    _antidiff_cache[key] = out  # type: ignore[assignment]
    return out  # type: ignore[return-value]


_faulhaber_cache: dict[int, list[Fraction]] = {}


def _faulhaber(k: int) -> list[Fraction]:
    """Coefficients of T with T(x) - T(x-1) = x^k and T(0) = 0."""
    hit = _faulhaber_cache.get(k)
    if hit is not None:
        return hit
    # Solve for T(x) = sum_{j=1}^{k+1} t_j x^j by matching coefficients of
    # T(x) - T(x-1) = sum_j t_j (x^j - (x-1)^j) against x^k.
    n = k + 1
    rows = []
    rhs = []
    for deg in range(k, -1, -1):
        row = []
        for j in range(1, n + 1):
            # coefficient of x^deg in x^j - (x-1)^j
            if deg > j:
                row.append(_ZERO)
            elif deg == j:
                row.append(_ZERO)
            else:
                from math import comb

                row.append(Fraction(-comb(j, deg) * (-1) ** (j - deg)))
        rows.append(row)
        rhs.append(_ONE if deg == k else _ZERO)
    # triangular solve (rows ordered by decreasing degree; t_{k+1} first)
    t = [_ZERO] * (n + 1)
    for idx, deg in enumerate(range(k, -1, -1)):
        j = deg + 1
        acc = rhs[idx]
        for jj in range(j + 1, n + 1):
            acc -= rows[idx][jj - 1] * t[jj]
        acc /= rows[idx][j - 1]
        t[j] = acc
    out = t  # t[j] is the coefficient of x^j, t[0] unused (= 0)
    _faulhaber_cache[k] = out
    return out


_IKey = tuple  # vpart

# Integer-path coefficients are raw (num, den) PseudoPoly pairs; full
# PseudoRational normalization happens once per final case instead of per
# intermediate operation.
_Pair = tuple[PseudoPoly, PseudoPoly]


def _pair_add(a: _Pair, b: _Pair) -> _Pair:
    n1, d1 = a
    n2, d2 = b
    if d1 == d2:
        return (n1 + n2, d1)
    return (n1 * d2 + n2 * d1, d1 * d2)


def _pair_mul(a: _Pair, b: _Pair) -> _Pair:
    return (a[0] * b[0], a[1] * b[1])


def _pair_scale(a: _Pair, c: Fraction) -> _Pair:
    return (a[0].scale(c), a[1])


def _pair_shift_exp(a: _Pair, q: Fraction) -> _Pair:
    return (a[0].shift(0, q, 0), a[1])


def _pair_neg(a: _Pair) -> _Pair:
    return (-a[0], a[1])


_PAIR_ONE: _Pair = (PseudoPoly.one(), PseudoPoly.one())


def _int_eval_at_bound(
    coef: _Pair,
    vpart: tuple,
    deg: int,
    rate: Fraction,
    bound,
    out: dict[_IKey, _Pair],
    negate: bool,
) -> None:
    if bound == "+inf":
        if rate < 0:
            return
        raise IntegrationError("divergent upper sum (rate %s)" % rate)
    if bound == "-inf":
        if rate > 0:
            return
        raise IntegrationError("divergent lower sum (rate %s)" % rate)
    coeffs, const = bound
    add = _pair_shift_exp(coef, rate * const) if rate != 0 else coef
    if negate:
        add = _pair_neg(add)
    rate_adds = {v: rate * c for v, c in coeffs.items() if c != 0}
    for degs, pc in _form_pow(coeffs, const, deg).items():
        extra = {v: (d, _ZERO) for v, d in degs}
        for v, r in rate_adds.items():
            d0, r0 = extra.get(v, (0, _ZERO))
            extra[v] = (d0, r0 + r)
        key = _vpart_merge(vpart, extra)
        cur = out.get(key)
        inc = _pair_scale(add, pc)
        out[key] = inc if cur is None else _pair_add(cur, inc)


def _sum_term_int(
    vpart: tuple,
    coef: _Pair,
    var: str,
    lower,
    upper,
    out: dict[_IKey, _Pair],
) -> None:
    """sum of the term for var from lower to upper (integer endpoints)."""
    deg, rate = _vpart_get(vpart, var)
    rest = _vpart_without(vpart, var)
    if rate == 0:
        t = _faulhaber(deg)
        # sum_{u=L}^{U} u^deg = T(U) - T(L-1)
        for bound, flip, shift in ((upper, False, 0), (lower, True, -1)):
            if bound in ("+inf", "-inf"):
                raise IntegrationError("divergent polynomial sum")
            coeffs, const = bound
            for j in range(1, deg + 2):
                if t[j] == 0:
                    continue
                _int_eval_at_bound(
                    _pair_scale(coef, t[j]), rest, j, _ZERO, (coeffs, const + shift), out, flip
                )
        return
    b = _antidiff_coeffs(deg, rate)
    # sum_{u=L}^{U} u^deg rho^u = A(U+1) - A(L), A(u) = rho^u sum_j b_j u^j
    for bound, flip, shift in ((upper, False, 1), (lower, True, 0)):
        if bound == "+inf":
            if rate < 0:
                continue
            raise IntegrationError("divergent upper sum")
        if bound == "-inf":
            if rate > 0:
                continue
            raise IntegrationError("divergent lower sum")
        coeffs, const = bound
        shifted = (coeffs, const + shift)
        for j in range(deg + 1):
            if b[j].is_zero():
                continue
            _int_eval_at_bound(
                _pair_mul(coef, (b[j].num, b[j].den)), rest, j, rate, shifted, out, flip
            )


def _int_atoms_canonical(atoms) -> Optional[list[tuple[dict, Fraction, bool]]]:
    """Normalize integer atoms to non-strict form with integer constants."""
    out = []
    for coeffs, const, strict in atoms:
        for c in coeffs.values():
            if Fraction(c).denominator != 1:
                raise UnsupportedSystem("fractional coefficient on integer variable")
        const = Fraction(const)
        if not coeffs:
            if not _settle_const_atom(const, strict):
                return None
            continue
        if strict:
            # sum c v + const < 0  <=>  sum c v + floor(const) + 1 <= 0 for integers
            if const.denominator == 1:
                const = const + 1
            else:
                const = Fraction(const.numerator // const.denominator + 1)
            strict = False
        else:
            if const.denominator != 1:
                # sum c v <= -const  <=>  sum c v <= floor(-const)
                const = -Fraction((-const).numerator // (-const).denominator)
        out.append((dict(coeffs), const, False))
    return out


def _prob_int_atoms(atoms, vars: list[NoiseVar]) -> PseudoRational:
    order = sorted(vars, key=lambda v: v.id)
    canon = _int_atoms_canonical(atoms)
    if canon is None:
        return PseudoRational.zero()
    unit: dict[_IKey, _Pair] = {(): _PAIR_ONE}
    cases: list[tuple[list, dict[_IKey, _Pair]]] = [(canon, unit)]
    live = {v.id for v in order}
    for nv in reversed(order):
        u = nv.id
        live.discard(u)
        a, mu = nv.scale_coef, nv.mean
        nxt = []
        for atoms_c, terms in cases:
            with_u = [(c, k, s) for c, k, s in atoms_c if u in c]
            without = [(c, k, s) for c, k, s in atoms_c if u not in c]
            lowers0: list = []
            uppers0: list = []
            for coeffs, const, _ in with_u:
                cu = coeffs[u]
                if abs(cu) != 1:
                    if len(coeffs) == 1:
                        # single-variable: divide and floor exactly
                        b = -const / cu
                        if cu > 0:
                            fl = Fraction(b.numerator // b.denominator)
                            uppers0.append(({}, fl))
                        else:
                            cl = -Fraction((-b).numerator // (-b).denominator)
                            lowers0.append(({}, cl))
                        continue
                    raise UnsupportedSystem("non-unit coefficient in integer system")
                rest = {v: -c * cu for v, c in coeffs.items() if v != u}
                bconst = -const * cu
                (uppers0 if cu > 0 else lowers0).append((rest, bconst))
            for side in (0, 1):  # u <= mu / u >= mu + 1
                lowers = list(lowers0)
                uppers = list(uppers0)
                if side == 0:
                    uppers = uppers + [({}, mu)]
                    rate_add, expo_add = a, -a * mu
                else:
                    lowers = lowers + [({}, mu + 1)]
                    rate_add, expo_add = -a, a * mu
                for lo, up, dom in _bound_cases(lowers, uppers):
                    # integer dominance: strict tie means difference <= -1
                    dom_i = _int_atoms_canonical(dom)
                    if dom_i is None:
                        continue
                    dom_sym = _split_const_atoms(dom_i, live)
                    if dom_sym is None:
                        continue
                    out: dict[_IKey, _Pair] = {}
                    for vpart, coef in terms.items():
                        deg, rate = _vpart_get(vpart, u)
                        key = _vpart_merge(
                            _vpart_without(vpart, u), {u: (deg, rate + rate_add)}
                        )
                        _sum_term_int(
                            key, _pair_shift_exp(coef, expo_add), u, lo, up, out
                        )
                    out = {k: c for k, c in out.items() if not c[0].is_zero()}
                    if out:
                        nxt.append((without + dom_sym, out))
        cases = nxt
    total = PseudoRational.zero()
    for atoms_c, terms in cases:
        live_atoms = _split_const_atoms(atoms_c, set())
        if live_atoms is None:
            continue
        if live_atoms:
            raise AssertionError("unsettled constraints after summation")
        for vpart, coef in terms.items():
            if vpart:
                raise AssertionError("free variable survived summation")
            total = total + PseudoRational(coef[0], coef[1])
    return total


def prob_int_system(sys: ConstraintSystem) -> PseudoRational:
    """Exact probability for integer-sort (discrete Laplace) systems in
    difference form; raises UnsupportedSystem otherwise."""
    if any(v.sort != INT for v in sys.vars):
        raise ValueError("prob_int_system requires integer-sort variables")
    total = PseudoRational.zero()
    for alt in _expand_atoms(sys.constraints):
        total = total + _prob_int_atoms(alt, list(sys.vars))
    pref = PseudoRational.one()
    for v in sys.vars:
        pref = pref * _kappa(v.scale_coef)
    return pref * total


def prob_system(sys: ConstraintSystem) -> PseudoRational:
    if not sys.vars:
        atoms = _expand_atoms(sys.constraints)
        ok = PseudoRational.zero()
        for alt in atoms:
            settled = _split_const_atoms(
                [(dict(c), k, s) for c, k, s in alt], set()
            )
            if settled is not None and not settled:
                ok = PseudoRational.one()
        return ok
    if sys.sort == REAL:
        return prob_real_system(sys)
    return prob_int_system(sys)


def conditional_prob(sys: ConstraintSystem, extra: LinearConstraint) -> PseudoRational:
    """P(sys and extra) / P(sys); the constant 0 when P(sys) is identically
    zero (unreachable-state convention)."""
    base = prob_system(sys)
    if base.is_zero():
        return PseudoRational.zero()
    joint = prob_system(sys.with_extra(extra))
    return joint / base


def prob_int_truncated(
    sys: ConstraintSystem, eps: Fraction, tail_tol: Fraction, prec: int = 96
) -> Iv:
    """Certified enclosure of the probability at a fixed eps by truncating
    every variable's support with geometric tail bounds."""
    eps = Fraction(eps)
    tail_tol = Fraction(tail_tol)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if any(v.sort != INT for v in sys.vars):
        raise ValueError("truncated summation is for integer systems")
    if not sys.vars:
        settled_any = False
        for alt in _expand_atoms(sys.constraints):
            s = _split_const_atoms([(dict(c), k, s_) for c, k, s_ in alt], set())
            if s is not None and not s:
                settled_any = True
        return Iv.point(1) if settled_any else Iv.point(0)
    vars = sorted(sys.vars, key=lambda v: v.id)
    n = len(vars)
    # presolve: per-variable integer bounds from single-variable constraints
    lo_bound: dict[str, Optional[int]] = {v.id: None for v in vars}
    hi_bound: dict[str, Optional[int]] = {v.id: None for v in vars}
    for c in sys.constraints:
        if len(c.coeffs) != 1 or c.rel not in ("<", "<="):
            continue
        (vid, cv), = c.coeffs
        b = -c.const / cv
        if cv > 0:
            ub = b.numerator // b.denominator
            if c.rel == "<" and b.denominator == 1:
                ub -= 1
            hi_bound[vid] = ub if hi_bound[vid] is None else min(hi_bound[vid], ub)
        else:
            lb = -((-b).numerator // (-b).denominator)
            if c.rel == "<" and b.denominator == 1:
                lb += 1
            lo_bound[vid] = lb if lo_bound[vid] is None else max(lo_bound[vid], lb)
    for v in vars:
        lo, hi = lo_bound[v.id], hi_bound[v.id]
        if lo is not None and hi is not None and lo > hi:
            return Iv.point(0)
    per_tol = tail_tol / (2 * n)
    ranges = []
    tail_total = _ZERO
    for v in vars:
        q = exp_point(-v.scale_coef * eps, prec)
        k = 0
        power = q.hi
        # tail P(|Z - mu| > k) = 2 q^(k+1) / (1 + q)
        while 2 * power * q.hi / (1 + q.lo) > per_tol:
            k += 1
            power = power * q.hi
            if k > 500000:
                raise ArithmeticError("tail tolerance unreachable")
        mu = int(v.mean)
        lo = mu - (k + 1)
        hi = mu + (k + 1)
        if lo_bound[v.id] is not None:
            lo = max(lo, lo_bound[v.id])
        if hi_bound[v.id] is not None:
            hi = min(hi, hi_bound[v.id])
        tail_total += 2 * power * q.hi / (1 + q.lo)
        ranges.append((v, lo, hi, q))
    count = 1
    for _, lo, hi, _q in ranges:
        count *= max(hi - lo + 1, 0)
        if count > 4_000_000:
            raise ArithmeticError("truncated enumeration too large")
    masses = []
    for v, lo, hi, q in ranges:
        kappa = (Iv.point(1) - q) / (Iv.point(1) + q)
        tbl = {}
        for z in range(lo, hi + 1):
            tbl[z] = kappa * q.pow_int(abs(z - int(v.mean)))
        masses.append(tbl)
    atoms_alts = _expand_atoms(sys.constraints)
    acc = Iv.point(0)
    for point in itertools.product(*[range(lo, hi + 1) for _, lo, hi, _q in ranges]):
        env = {ranges[i][0].id: point[i] for i in range(n)}
        ok = False
        for alt in atoms_alts:
            good = True
            for coeffs, const, strict in alt:
                val = sum(Fraction(c) * env[v] for v, c in coeffs.items()) + const
                if strict and not val < 0:
                    good = False
                    break
                if not strict and not val <= 0:
                    good = False
                    break
            if good:
                ok = True
                break
        if ok:
            m = Iv.point(1)
            for i in range(n):
                m = m * masses[i][point[i]]
            acc = (acc + m).round_out(prec)
    hi_val = min(acc.hi + tail_total, _ONE)
    return Iv(acc.lo, hi_val)

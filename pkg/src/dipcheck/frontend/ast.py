"""Typed AST for .dip programs, plus the surrounding program metadata.

Sorts follow the language's four variable classes: bool, dom (the finite
integer range the inputs/outputs live in), int and real (noise-carrying,
assigned at most once per control path, never inside a while body).
Expressions are stratified accordingly: dom expressions evaluate to dom
values in a state, numeric expressions are linear in the sampled noise
variables, and comparisons between numeric expressions are the only
probabilistic boolean source.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union

from ..symalg.pseudo import PseudoRational

BOOL = "bool"
DOM = "dom"
INT = "int"
REAL = "real"


# -- dom expressions -------------------------------------------------------------


@dataclass(frozen=True)
class DomLit:
    value: int


@dataclass(frozen=True)
class DomVar:
    name: str


@dataclass(frozen=True)
class DomOp:
    """Built-in dom function: 'add' or 'sub', clamped into the dom range."""

    op: str
    lhs: "DomExpr"
    rhs: "DomExpr"


DomExpr = Union[DomLit, DomVar, DomOp]


# -- numeric (int/real) expressions ----------------------------------------------


@dataclass(frozen=True)
class NumVar:
    name: str
    sort: str  # INT or REAL


@dataclass(frozen=True)
class NumConst:
    value: Fraction


@dataclass(frozen=True)
class NumOfDom:
    expr: DomExpr


@dataclass(frozen=True)
class NumScale:
    coef: Fraction
    arg: "NumExpr"


@dataclass(frozen=True)
class NumScaleDom:
    coef: DomExpr
    arg: "NumExpr"


@dataclass(frozen=True)
class NumAdd:
    lhs: "NumExpr"
    rhs: "NumExpr"


NumExpr = Union[NumVar, NumConst, NumOfDom, NumScale, NumScaleDom, NumAdd]


def num_vars(e: NumExpr) -> set[str]:
    if isinstance(e, NumVar):
        return {e.name}
    if isinstance(e, (NumConst, NumOfDom)):
        return set()
    if isinstance(e, (NumScale, NumScaleDom)):
        return num_vars(e.arg)
    if isinstance(e, NumAdd):
        return num_vars(e.lhs) | num_vars(e.rhs)
    raise TypeError(e)


# -- boolean expressions ----------------------------------------------------------


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class BoolVar:
    name: str


@dataclass(frozen=True)
class BoolNot:
    arg: "BoolExpr"


@dataclass(frozen=True)
class BoolBin:
    op: str  # 'and' | 'or'
    lhs: "BoolExpr"
    rhs: "BoolExpr"


@dataclass(frozen=True)
class DomCmp:
    """Comparison of two dom expressions; deterministic in a state."""

    op: str  # '<' '<=' '>' '>=' '==' '!='
    lhs: DomExpr
    rhs: DomExpr


BoolExpr = Union[BoolLit, BoolVar, BoolNot, BoolBin, DomCmp]


@dataclass(frozen=True)
class NumCmp:
    """Comparison of two same-sort numeric expressions; the probabilistic
    transition source.  Only legal as the entire right side of a boolean
    assignment."""

    sort: str  # INT or REAL
    op: str
    lhs: NumExpr
    rhs: NumExpr


def bool_vars_used(e: BoolExpr) -> set[str]:
    if isinstance(e, BoolVar):
        return {e.name}
    if isinstance(e, BoolNot):
        return bool_vars_used(e.arg)
    if isinstance(e, BoolBin):
        return bool_vars_used(e.lhs) | bool_vars_used(e.rhs)
    return set()


def dom_vars_used(e) -> set[str]:
    if isinstance(e, DomVar):
        return {e.name}
    if isinstance(e, DomOp):
        return dom_vars_used(e.lhs) | dom_vars_used(e.rhs)
    if isinstance(e, DomCmp):
        return dom_vars_used(e.lhs) | dom_vars_used(e.rhs)
    if isinstance(e, (BoolNot,)):
        return dom_vars_used(e.arg)
    if isinstance(e, BoolBin):
        return dom_vars_used(e.lhs) | dom_vars_used(e.rhs)
    if isinstance(e, NumOfDom):
        return dom_vars_used(e.expr)
    if isinstance(e, (NumScale,)):
        return dom_vars_used(e.arg)
    if isinstance(e, NumScaleDom):
        return dom_vars_used(e.coef) | dom_vars_used(e.arg)
    if isinstance(e, NumAdd):
        return dom_vars_used(e.lhs) | dom_vars_used(e.rhs)
    if isinstance(e, NumCmp):
        return dom_vars_used(e.lhs) | dom_vars_used(e.rhs)
    return set()


# -- statements --------------------------------------------------------------------


@dataclass(frozen=True)
class AssignDom:
    label: str
    var: str
    expr: DomExpr


@dataclass(frozen=True)
class AssignDomSample:
    label: str
    var: str
    mech: str  # 'expmech' | 'choose'
    fn: str
    scale: Fraction
    args: tuple[DomExpr, ...]


@dataclass(frozen=True)
class AssignNum:
    label: str
    var: str
    sort: str
    expr: NumExpr


@dataclass(frozen=True)
class AssignLap:
    label: str
    var: str
    sort: str  # REAL for Lap, INT for DLap
    scale: Fraction
    mean: DomExpr


@dataclass(frozen=True)
class AssignBool:
    label: str
    var: str
    expr: BoolExpr


@dataclass(frozen=True)
class AssignCmp:
    label: str
    var: str
    cmp: NumCmp


@dataclass(frozen=True)
class If:
    label: str
    cond: BoolExpr
    then: tuple["Stmt", ...]
    els: tuple["Stmt", ...]


@dataclass(frozen=True)
class While:
    label: str
    cond: BoolExpr
    body: tuple["Stmt", ...]


@dataclass(frozen=True)
class Exit:
    label: str


Stmt = Union[AssignDom, AssignDomSample, AssignNum, AssignLap, AssignBool, AssignCmp, If, While, Exit]


# -- tables and program --------------------------------------------------------------


@dataclass(frozen=True)
class ScoreTable:
    name: str
    arity: int
    entries: dict  # (args tuple, value) -> Fraction

    def score(self, args: tuple[int, ...], value: int) -> Fraction:
        return self.entries[(args, value)]


@dataclass(frozen=True)
class ChooseDef:
    name: str
    arity: int
    pmf: dict  # (args tuple, value) -> PseudoRational

    def prob(self, args: tuple[int, ...], value: int) -> PseudoRational:
        return self.pmf[(args, value)]


@dataclass
class Program:
    statements: tuple[Stmt, ...]
    input_vars: tuple[str, ...]
    output_vars: tuple[str, ...]
    dom_lo: int
    dom_hi: int
    var_sorts: dict[str, str]
    score_tables: dict[str, ScoreTable] = field(default_factory=dict)
    choose_defs: dict[str, ChooseDef] = field(default_factory=dict)
    elab_diagnostics: list = field(default_factory=list)

    def dom_values(self) -> range:
        return range(self.dom_lo, self.dom_hi + 1)

    def clamp(self, v: int) -> int:
        return max(self.dom_lo, min(self.dom_hi, v))

    def walk(self) -> Iterator[Stmt]:
        def rec(stmts):
            for s in stmts:
                yield s
                if isinstance(s, If):
                    yield from rec(s.then)
                    yield from rec(s.els)
                elif isinstance(s, While):
                    yield from rec(s.body)

        return rec(self.statements)

    def statement_count(self) -> int:
        return sum(1 for _ in self.walk())

    def labels(self) -> list[str]:
        return [s.label for s in self.walk()]


@dataclass(frozen=True)
class Diagnostic:
    label: str
    code: str
    message: str

    def __str__(self) -> str:
        return "[%s] %s: %s" % (self.label, self.code, self.message)


# -- adjacency and valuation spaces ----------------------------------------------------


@dataclass(frozen=True)
class AdjacencySpec:
    kind: str  # 'linf1' | 'l1_1' | 'explicit'
    pairs: tuple = ()  # for 'explicit': unordered valuation pairs

    def __post_init__(self):
        if self.kind not in ("linf1", "l1_1", "explicit"):
            raise ValueError("unknown adjacency kind %r" % self.kind)


class SpaceTooLarge(Exception):
    pass


def enumerate_valuations(p: Program, which: str, cap: int = 200000) -> list[tuple[int, ...]]:
    """Lexicographically ordered dom^k tuples for the input or output list."""
    names = p.input_vars if which == "inputs" else p.output_vars
    size = (p.dom_hi - p.dom_lo + 1) ** len(names)
    if size > cap:
        raise SpaceTooLarge("valuation space has %d points (cap %d)" % (size, cap))
    return list(itertools.product(p.dom_values(), repeat=len(names)))


def adjacent_pairs(
    spec: AdjacencySpec, inputs: list[tuple[int, ...]]
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Unordered pairs (u, u'), u != u', satisfying the adjacency relation,
    in lexicographic order."""
    inset = set(inputs)
    if spec.kind == "explicit":
        seen = set()
        out = []
        for a, b in spec.pairs:
            a, b = tuple(a), tuple(b)
            if a not in inset or b not in inset:
                raise ValueError("explicit pair outside the input space: %s, %s" % (a, b))
            if a == b:
                continue
            key = (min(a, b), max(a, b))
            if key not in seen:
                seen.add(key)
                out.append(key)
        return sorted(out)
    out = []
    for i, a in enumerate(inputs):
        for b in inputs[i + 1:]:
            if spec.kind == "linf1":
                ok = all(abs(x - y) <= 1 for x, y in zip(a, b))
            else:
                ok = sum(abs(x - y) for x, y in zip(a, b)) <= 1
            if ok:
                out.append((a, b))
    return out

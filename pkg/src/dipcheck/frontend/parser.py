"""Parser and desugaring pipeline for .dip program text.

Pipeline: lex -> raw (sugared) AST -> unroll literal `for` loops ->
expand Disc(...) into chained threshold comparisons -> elaborate with
sort inference into the typed AST -> rename re-assigned real/int
variables to single-assignment form -> assign labels.

Concrete syntax sketch:

    # threshold sweep, two queries
    input q1, q2;
    output out1, out2;
    dom 0..1;
    T <- 0;  out1 <- 0;  out2 <- 0;
    rT <- Lap(1/2*eps, T);
    for i in 1..2 {
      r[i] <- Lap(1/4*eps, q[i]);
      b <- r[i] >= rT;
      if b { out[i] <- 1; exit; }
    }
    exit;

    choose flip/1 {
      (0) -> 0 : exp(eps)/(1+exp(eps));
      (0) -> 1 : 1/(1+exp(eps));
      (1) -> 1 : exp(eps)/(1+exp(eps));
      (1) -> 0 : 1/(1+exp(eps));
    }

Statements may carry explicit `name:` labels; everything else is labeled
L1, L2, ... in source order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from ..symalg.pseudo import PseudoRational, parse_pseudo, PseudoParseError
from . import ast as A

KEYWORDS = {
    "input", "output", "dom", "real", "int", "bool", "domvar",
    "if", "else", "while", "for", "in", "exit", "choose", "score",
    "true", "false", "and", "or", "not",
}

SPECIAL_CALLS = {"Lap", "DLap", "ExpMech", "Choose", "Disc"}


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__("%d:%d: %s" % (line, col, msg))
        self.line = line
        self.col = col
        self.msg = msg


# -- lexer --------------------------------------------------------------------------


@dataclass(frozen=True)
class Tok:
    kind: str  # 'name' | 'int' | punctuation string | 'eof'
    val: object
    line: int
    col: int
    start: int
    end: int


_PUNCT2 = ("<-", "..", "->", "<=", ">=", "==", "!=")
_PUNCT1 = "{}()[],;:+-*/<>="


def lex(text: str) -> list[Tok]:
    toks: list[Tok] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text[i:i + 2] in _PUNCT2:
            toks.append(Tok(text[i:i + 2], text[i:i + 2], line, col, i, i + 2))
            i += 2
            col += 2
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Tok("int", int(text[i:j]), line, col, i, j))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(Tok("name", text[i:j], line, col, i, j))
            col += j - i
            i = j
            continue
        if ch in _PUNCT1:
            toks.append(Tok(ch, ch, line, col, i, i + 1))
            i += 1
            col += 1
            continue
        raise ParseError("unexpected character %r" % ch, line, col)
    toks.append(Tok("eof", None, line, col, n, n))
    return toks


# -- raw (sugared) AST -----------------------------------------------------------------


@dataclass(frozen=True)
class RNum:
    value: Fraction


@dataclass(frozen=True)
class RName:
    name: str
    index: Optional["RawExpr"] = None


@dataclass(frozen=True)
class RBoolLit:
    value: bool


@dataclass(frozen=True)
class RUn:
    op: str  # '-' | 'not'
    arg: "RawExpr"


@dataclass(frozen=True)
class RBin:
    op: str
    lhs: "RawExpr"
    rhs: "RawExpr"


@dataclass(frozen=True)
class RCall:
    fn: str
    args: tuple["RawExpr", ...]


RawExpr = Union[RNum, RName, RBoolLit, RUn, RBin, RCall]


@dataclass
class RAssign:
    label: Optional[str]
    target: RName
    rhs: RawExpr


@dataclass
class RIf:
    label: Optional[str]
    cond: RawExpr
    then: list
    els: list


@dataclass
class RWhile:
    label: Optional[str]
    cond: RawExpr
    body: list


@dataclass
class RFor:
    label: Optional[str]
    var: str
    lo: int
    hi: int
    body: list


@dataclass
class RExit:
    label: Optional[str]


RawStmt = Union[RAssign, RIf, RWhile, RFor, RExit]


@dataclass
class RawProgram:
    statements: list
    input_vars: list[str]
    output_vars: list[str]
    dom_lo: int
    dom_hi: int
    declared_sorts: dict[str, str]
    score_tables: dict[str, A.ScoreTable]
    choose_defs: dict[str, A.ChooseDef]


# -- parser ------------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = lex(text)
        self.i = 0

    def peek(self, ahead: int = 0) -> Tok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def take(self, kind: Optional[str] = None) -> Tok:
        t = self.toks[self.i]
        if kind is not None and t.kind != kind:
            raise ParseError("expected %r, found %r" % (kind, t.val), t.line, t.col)
        self.i += 1
        return t

    def take_name(self, expected: Optional[str] = None) -> str:
        t = self.take("name")
        if expected is not None and t.val != expected:
            raise ParseError("expected %r, found %r" % (expected, t.val), t.line, t.col)
        return t.val  # type: ignore[return-value]

    def at_keyword(self, kw: str) -> bool:
        t = self.peek()
        return t.kind == "name" and t.val == kw

    # -- top level ---------------------------------------------------------------

    def parse(self) -> RawProgram:
        prog = RawProgram([], [], [], 0, 1, {}, {}, {})
        dom_seen = False
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind == "name" and t.val in ("input", "output"):
                self.take()
                names = self.namelist()
                self.take(";")
                (prog.input_vars if t.val == "input" else prog.output_vars).extend(names)
                for nm in names:
                    prog.declared_sorts[nm] = A.DOM
            elif self.at_keyword("dom"):
                self.take()
                lo = self.signed_int()
                self.take("..")
                hi = self.signed_int()
                self.take(";")
                if lo > hi:
                    raise ParseError("empty dom range", t.line, t.col)
                prog.dom_lo, prog.dom_hi = lo, hi
                dom_seen = True
            elif t.kind == "name" and t.val in ("real", "int", "bool", "domvar"):
                self.take()
                names = self.namelist()
                self.take(";")
                sort = {"real": A.REAL, "int": A.INT, "bool": A.BOOL, "domvar": A.DOM}[t.val]
                for nm in names:
                    prog.declared_sorts[nm] = sort
            elif self.at_keyword("choose"):
                self.parse_choose(prog)
            elif self.at_keyword("score"):
                self.parse_score(prog)
            else:
                prog.statements.append(self.statement())
        if not dom_seen:
            raise ParseError("missing `dom lo..hi;` declaration", 1, 1)
        if not prog.statements or not isinstance(prog.statements[-1], RExit):
            prog.statements.append(RExit(None))
        return prog

    def namelist(self) -> list[str]:
        names = []
        while True:
            nm = self.expand_name()
            names.extend(nm)
            if self.peek().kind == ",":
                self.take()
            else:
                return names

    def expand_name(self) -> list[str]:
        """A declared name, or `base[lo..hi]` shorthand for base<lo>..base<hi>."""
        t = self.take("name")
        base = t.val
        if base in KEYWORDS or base == "eps":
            raise ParseError("reserved word %r used as identifier" % base, t.line, t.col)
        if self.peek().kind == "[":
            self.take()
            lo = self.signed_int()
            self.take("..")
            hi = self.signed_int()
            self.take("]")
            return ["%s%d" % (base, k) for k in range(lo, hi + 1)]
        return [base]

    def signed_int(self) -> int:
        neg = False
        if self.peek().kind == "-":
            self.take()
            neg = True
        t = self.take("int")
        return -t.val if neg else t.val  # type: ignore[operator]

    def signed_rat(self) -> Fraction:
        v = Fraction(self.signed_int())
        if self.peek().kind == "/":
            self.take()
            d = self.take("int")
            v = v / d.val  # type: ignore[operator]
        return v

    def parse_choose(self, prog: RawProgram) -> None:
        self.take_name("choose")
        t = self.peek()
        name = self.take_name()
        self.take("/")
        arity = self.take("int").val
        entries: dict = {}
        self.take("{")
        while self.peek().kind != "}":
            args = self.entry_args(arity, t)
            self.take("->")
            value = self.signed_int()
            self.take(":")
            pmf = self.pseudo_until_semicolon()
            entries[(args, value)] = pmf
        self.take("}")
        if name in prog.choose_defs or name in prog.score_tables:
            raise ParseError("duplicate definition %r" % name, t.line, t.col)
        prog.choose_defs[name] = A.ChooseDef(name, arity, entries)  # type: ignore[arg-type]

    def parse_score(self, prog: RawProgram) -> None:
        self.take_name("score")
        t = self.peek()
        name = self.take_name()
        self.take("/")
        arity = self.take("int").val
        entries: dict = {}
        self.take("{")
        while self.peek().kind != "}":
            args = self.entry_args(arity, t)
            self.take("->")
            value = self.signed_int()
            self.take(":")
            entries[(args, value)] = self.signed_rat()
            self.take(";")
        self.take("}")
        if name in prog.choose_defs or name in prog.score_tables:
            raise ParseError("duplicate definition %r" % name, t.line, t.col)
        prog.score_tables[name] = A.ScoreTable(name, arity, entries)  # type: ignore[arg-type]

    def entry_args(self, arity: int, where: Tok) -> tuple[int, ...]:
        self.take("(")
        args = []
        while self.peek().kind != ")":
            args.append(self.signed_int())
            if self.peek().kind == ",":
                self.take()
        self.take(")")
        if len(args) != arity:
            raise ParseError(
                "entry arity %d does not match declared /%d" % (len(args), arity),
                where.line, where.col,
            )
        return tuple(args)

    def pseudo_until_semicolon(self) -> PseudoRational:
        start_tok = self.peek()
        depth = 0
        end = start_tok.start
        while True:
            t = self.peek()
            if t.kind == "eof":
                raise ParseError("unterminated pmf expression", t.line, t.col)
            if t.kind == ";" and depth == 0:
                break
            if t.kind == "(":
                depth += 1
            if t.kind == ")":
                depth -= 1
            end = t.end
            self.take()
        self.take(";")
        span = self.text[start_tok.start:end]
        try:
            return parse_pseudo(span)
        except PseudoParseError as e:
            raise ParseError("bad pmf expression: %s" % e, start_tok.line, start_tok.col)

    # -- statements --------------------------------------------------------------------

    def block(self) -> list:
        self.take("{")
        out = []
        while self.peek().kind != "}":
            out.append(self.statement())
        self.take("}")
        return out

    def statement(self) -> RawStmt:
        label = None
        if (
            self.peek().kind == "name"
            and self.peek().val not in KEYWORDS
            and self.peek(1).kind == ":"
        ):
            label = self.take("name").val
            self.take(":")
        t = self.peek()
        if self.at_keyword("if"):
            self.take()
            cond = self.expr()
            then = self.block()
            els = []
            if self.at_keyword("else"):
                self.take()
                els = self.block()
            return RIf(label, cond, then, els)
        if self.at_keyword("while"):
            self.take()
            cond = self.expr()
            return RWhile(label, cond, self.block())
        if self.at_keyword("for"):
            self.take()
            var = self.take_name()
            self.take_name("in")
            lo = self.signed_int()
            self.take("..")
            hi = self.signed_int()
            return RFor(label, var, lo, hi, self.block())
        if self.at_keyword("exit"):
            self.take()
            self.take(";")
            return RExit(label)
        if t.kind != "name" or t.val in KEYWORDS:
            raise ParseError("expected a statement, found %r" % t.val, t.line, t.col)
        target = self.name_ref()
        self.take("<-")
        rhs = self.expr()
        self.take(";")
        return RAssign(label, target, rhs)

    def name_ref(self) -> RName:
        t = self.take("name")
        if t.val in KEYWORDS:
            raise ParseError("reserved word %r" % t.val, t.line, t.col)
        idx = None
        if self.peek().kind == "[":
            self.take()
            idx = self.expr()
            self.take("]")
        return RName(t.val, idx)  # type: ignore[arg-type]

    # -- expressions ------------------------------------------------------------------

    def expr(self) -> RawExpr:
        return self.or_expr()

    def or_expr(self) -> RawExpr:
        e = self.and_expr()
        while self.at_keyword("or"):
            self.take()
            e = RBin("or", e, self.and_expr())
        return e

    def and_expr(self) -> RawExpr:
        e = self.cmp_expr()
        while self.at_keyword("and"):
            self.take()
            e = RBin("and", e, self.cmp_expr())
        return e

    def cmp_expr(self) -> RawExpr:
        e = self.add_expr()
        t = self.peek()
        if t.kind in ("<", "<=", ">", ">=", "==", "!=", "="):
            op = self.take().kind
            if op == "=":
                op = "=="
            return RBin(op, e, self.add_expr())
        return e

    def add_expr(self) -> RawExpr:
        e = self.mul_expr()
        while self.peek().kind in ("+", "-"):
            op = self.take().kind
            e = RBin(op, e, self.mul_expr())
        return e

    def mul_expr(self) -> RawExpr:
        e = self.unary_expr()
        while self.peek().kind in ("*", "/"):
            op = self.take().kind
            e = RBin(op, e, self.unary_expr())
        return e

    def unary_expr(self) -> RawExpr:
        t = self.peek()
        if t.kind == "-":
            self.take()
            arg = self.unary_expr()
            if isinstance(arg, RNum):
                return RNum(-arg.value)
            return RUn("-", arg)
        if self.at_keyword("not"):
            self.take()
            return RUn("not", self.unary_expr())
        return self.atom()

    def atom(self) -> RawExpr:
        t = self.peek()
        if t.kind == "int":
            self.take()
            return RNum(Fraction(t.val))  # type: ignore[arg-type]
        if t.kind == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if t.kind == "name":
            if t.val == "true":
                self.take()
                return RBoolLit(True)
            if t.val == "false":
                self.take()
                return RBoolLit(False)
            if t.val in KEYWORDS and t.val not in ("not",):
                raise ParseError("unexpected keyword %r in expression" % t.val, t.line, t.col)
            name = self.take("name").val
            if self.peek().kind == "(":
                self.take()
                args = []
                while self.peek().kind != ")":
                    args.append(self.expr())
                    if self.peek().kind == ",":
                        self.take()
                self.take(")")
                return RCall(name, tuple(args))  # type: ignore[arg-type]
            idx = None
            if self.peek().kind == "[":
                self.take()
                idx = self.expr()
                self.take("]")
            return RName(name, idx)  # type: ignore[arg-type]
        raise ParseError("unexpected token %r" % t.val, t.line, t.col)


# -- for-loop unrolling ------------------------------------------------------------------


def _subst_expr(e: RawExpr, env: dict[str, int]) -> RawExpr:
    if isinstance(e, RNum) or isinstance(e, RBoolLit):
        return e
    if isinstance(e, RName):
        if e.index is not None:
            k = _eval_index(e.index, env)
            return RName("%s%d" % (e.name, k), None)
        if e.name in env:
            return RNum(Fraction(env[e.name]))
        return e
    if isinstance(e, RUn):
        return RUn(e.op, _subst_expr(e.arg, env))
    if isinstance(e, RBin):
        return RBin(e.op, _subst_expr(e.lhs, env), _subst_expr(e.rhs, env))
    if isinstance(e, RCall):
        return RCall(e.fn, tuple(_subst_expr(a, env) for a in e.args))
    raise TypeError(e)


def _eval_index(e: RawExpr, env: dict[str, int]) -> int:
    if isinstance(e, RNum):
        if e.value.denominator != 1:
            raise ParseError("index must be an integer")
        return int(e.value)
    if isinstance(e, RName) and e.index is None and e.name in env:
        return env[e.name]
    if isinstance(e, RUn) and e.op == "-":
        return -_eval_index(e.arg, env)
    if isinstance(e, RBin) and e.op in ("+", "-", "*"):
        l, r = _eval_index(e.lhs, env), _eval_index(e.rhs, env)
        return l + r if e.op == "+" else l - r if e.op == "-" else l * r
    raise ParseError("index expressions may only use loop variables and integers")


def unroll(stmts: list, env: dict[str, int], suffix: str = "") -> list:
    out = []
    for s in stmts:
        label = s.label + suffix if s.label else None
        if isinstance(s, RAssign):
            tgt = _subst_expr(s.target, env)
            assert isinstance(tgt, RName)
            out.append(RAssign(label, tgt, _subst_expr(s.rhs, env)))
        elif isinstance(s, RIf):
            out.append(
                RIf(label, _subst_expr(s.cond, env), unroll(s.then, env, suffix), unroll(s.els, env, suffix))
            )
        elif isinstance(s, RWhile):
            out.append(RWhile(label, _subst_expr(s.cond, env), unroll(s.body, env, suffix)))
        elif isinstance(s, RExit):
            out.append(RExit(label))
        elif isinstance(s, RFor):
            for k in range(s.lo, s.hi + 1):
                env2 = dict(env)
                env2[s.var] = k
                sfx = "%s_it%d" % (suffix, k)
                out.extend(unroll(s.body, env2, sfx))
        else:
            raise TypeError(s)
    return out


# -- Disc expansion ----------------------------------------------------------------------


def expand_disc(stmts: list, counter: list[int]) -> list:
    out = []
    for s in stmts:
        if isinstance(s, RIf):
            out.append(RIf(s.label, s.cond, expand_disc(s.then, counter), expand_disc(s.els, counter)))
            continue
        if isinstance(s, RWhile):
            out.append(RWhile(s.label, s.cond, expand_disc(s.body, counter)))
            continue
        if not (isinstance(s, RAssign) and isinstance(s.rhs, RCall) and s.rhs.fn == "Disc"):
            out.append(s)
            continue
        args = s.rhs.args
        if len(args) < 3:
            raise ParseError("Disc needs a source variable and at least two cut points")
        src = args[0]
        cuts = []
        for a in args[1:]:
            if not isinstance(a, RNum) or a.value.denominator != 1:
                raise ParseError("Disc cut points must be integer literals")
            cuts.append(int(a.value))
        if cuts != sorted(set(cuts)):
            raise ParseError("Disc cut points must be strictly increasing")
        target = s.target

        def chain(i: int) -> list:
            counter[0] += 1
            bname = "_disc%d" % counter[0]
            if i == len(cuts) - 1:
                return [RAssign(None, target, RNum(Fraction(cuts[i])))]
            return [
                RAssign(None, RName(bname), RBin("<=", src, RNum(Fraction(cuts[i])))),
                RIf(
                    None,
                    RName(bname),
                    [RAssign(None, target, RNum(Fraction(cuts[i])))],
                    chain(i + 1),
                ),
            ]

        first = chain(0)
        if s.label and first:
            first[0].label = s.label
        out.extend(first)
    return out


# -- elaboration -------------------------------------------------------------------------


class _Elab:
    def __init__(self, raw: RawProgram):
        self.raw = raw
        self.sorts: dict[str, str] = dict(raw.declared_sorts)
        self.diags: list[A.Diagnostic] = []
        self.counter = 0

    def fresh_label(self) -> str:
        self.counter += 1
        return "L%d" % self.counter

    def diag(self, label: str, code: str, msg: str) -> None:
        self.diags.append(A.Diagnostic(label, code, msg))

    # expression classification: REAL / INT / DOM / BOOL
    def sort_of_expr(self, e: RawExpr) -> str:
        if isinstance(e, RBoolLit):
            return A.BOOL
        if isinstance(e, RNum):
            return A.DOM
        if isinstance(e, RName):
            return self.sorts.get(e.name, A.DOM)
        if isinstance(e, RUn):
            return A.BOOL if e.op == "not" else self.sort_of_expr(e.arg)
        if isinstance(e, RBin):
            if e.op in ("and", "or", "<", "<=", ">", ">=", "==", "!="):
                return A.BOOL
            ls, rs = self.sort_of_expr(e.lhs), self.sort_of_expr(e.rhs)
            for s in (A.REAL, A.INT, A.BOOL):
                if ls == s or rs == s:
                    return s
            return A.DOM
        if isinstance(e, RCall):
            return A.DOM
        raise TypeError(e)

    def fold_const(self, e: RawExpr) -> Optional[Fraction]:
        if isinstance(e, RNum):
            return e.value
        if isinstance(e, RUn) and e.op == "-":
            v = self.fold_const(e.arg)
            return None if v is None else -v
        if isinstance(e, RBin) and e.op in ("+", "-", "*", "/"):
            l = self.fold_const(e.lhs)
            r = self.fold_const(e.rhs)
            if l is None or r is None:
                return None
            if e.op == "+":
                return l + r
            if e.op == "-":
                return l - r
            if e.op == "*":
                return l * r
            if r == 0:
                raise ParseError("division by zero in constant")
            return l / r
        return None

    def scale_of(self, e: RawExpr, label: str) -> Fraction:
        """Extract a from an `a*eps`-shaped scale expression."""
        const, coef = self.linear_eps(e)
        if const != 0 or coef is None or coef <= 0:
            self.diag(label, "bad-scale", "scale must be a positive rational multiple of eps")
            return Fraction(1)
        return coef

    def linear_eps(self, e: RawExpr) -> tuple[Fraction, Optional[Fraction]]:
        if isinstance(e, RNum):
            return e.value, Fraction(0)
        if isinstance(e, RName) and e.name == "eps" and e.index is None:
            return Fraction(0), Fraction(1)
        if isinstance(e, RUn) and e.op == "-":
            c, k = self.linear_eps(e.arg)
            return -c, None if k is None else -k
        if isinstance(e, RBin):
            lc = self.linear_eps(e.lhs)
            rc = self.linear_eps(e.rhs)
            if lc[1] is None or rc[1] is None:
                return Fraction(0), None
            if e.op == "+":
                return lc[0] + rc[0], lc[1] + rc[1]
            if e.op == "-":
                return lc[0] - rc[0], lc[1] - rc[1]
            if e.op == "*":
                if lc[1] == 0:
                    return lc[0] * rc[0], lc[0] * rc[1]
                if rc[1] == 0:
                    return rc[0] * lc[0], rc[0] * lc[1]
                return Fraction(0), None
            if e.op == "/":
                if rc[1] == 0 and rc[0] != 0:
                    return lc[0] / rc[0], lc[1] / rc[0]
                return Fraction(0), None
        return Fraction(0), None

    def elab_dom(self, e: RawExpr, label: str) -> A.DomExpr:
        if isinstance(e, RNum):
            if e.value.denominator != 1:
                self.diag(label, "non-integer-dom", "dom literal must be an integer")
                return A.DomLit(0)
            return A.DomLit(int(e.value))
        if isinstance(e, RName):
            if self.sorts.get(e.name, A.DOM) != A.DOM:
                self.diag(label, "sort-mismatch", "%s is not a dom variable" % e.name)
            return A.DomVar(e.name)
        if isinstance(e, RUn) and e.op == "-":
            v = self.fold_const(e)
            if v is not None and v.denominator == 1:
                return A.DomLit(int(v))
            self.diag(label, "bad-dom-expr", "negation of a non-constant dom expression")
            return A.DomLit(0)
        if isinstance(e, RBin) and e.op in ("+", "-"):
            return A.DomOp(
                "add" if e.op == "+" else "sub",
                self.elab_dom(e.lhs, label),
                self.elab_dom(e.rhs, label),
            )
        self.diag(label, "bad-dom-expr", "unsupported dom expression")
        return A.DomLit(0)

    def elab_num(self, e: RawExpr, sort: str, label: str) -> A.NumExpr:
        c = self.fold_const(e)
        if c is not None:
            return A.NumConst(c)
        if isinstance(e, RName):
            s = self.sorts.get(e.name, A.DOM)
            if s == sort:
                return A.NumVar(e.name, sort)
            if s == A.DOM:
                return A.NumOfDom(A.DomVar(e.name))
            self.diag(label, "sort-mismatch", "%s used in a %s expression" % (e.name, sort))
            return A.NumConst(Fraction(0))
        if isinstance(e, RUn) and e.op == "-":
            return A.NumScale(Fraction(-1), self.elab_num(e.arg, sort, label))
        if isinstance(e, RBin):
            if e.op == "+":
                return A.NumAdd(self.elab_num(e.lhs, sort, label), self.elab_num(e.rhs, sort, label))
            if e.op == "-":
                return A.NumAdd(
                    self.elab_num(e.lhs, sort, label),
                    A.NumScale(Fraction(-1), self.elab_num(e.rhs, sort, label)),
                )
            if e.op in ("*", "/"):
                lc = self.fold_const(e.lhs)
                rc = self.fold_const(e.rhs)
                if e.op == "/":
                    if rc is None or rc == 0:
                        self.diag(label, "bad-num-expr", "division only by a nonzero rational")
                        return A.NumConst(Fraction(0))
                    return A.NumScale(1 / rc, self.elab_num(e.lhs, sort, label))
                if lc is not None:
                    if sort == A.INT and lc.denominator != 1:
                        self.diag(label, "bad-num-expr", "integer expression scaled by non-integer")
                    return A.NumScale(lc, self.elab_num(e.rhs, sort, label))
                if rc is not None:
                    if sort == A.INT and rc.denominator != 1:
                        self.diag(label, "bad-num-expr", "integer expression scaled by non-integer")
                    return A.NumScale(rc, self.elab_num(e.lhs, sort, label))
                # dom-expression coefficient
                ls, rs = self.sort_of_expr(e.lhs), self.sort_of_expr(e.rhs)
                if ls == A.DOM:
                    return A.NumScaleDom(self.elab_dom(e.lhs, label), self.elab_num(e.rhs, sort, label))
                if rs == A.DOM:
                    return A.NumScaleDom(self.elab_dom(e.rhs, label), self.elab_num(e.lhs, sort, label))
                self.diag(label, "bad-num-expr", "nonlinear %s expression" % sort)
                return A.NumConst(Fraction(0))
        if self.sort_of_expr(e) == A.DOM:
            return A.NumOfDom(self.elab_dom(e, label))
        self.diag(label, "bad-num-expr", "unsupported %s expression" % sort)
        return A.NumConst(Fraction(0))

    def elab_cmp(self, e: RBin, label: str):
        """Comparison: dom-vs-dom stays boolean, int/real become NumCmp."""
        ls, rs = self.sort_of_expr(e.lhs), self.sort_of_expr(e.rhs)
        sides = {ls, rs}
        if A.BOOL in sides:
            self.diag(label, "bad-comparison", "boolean operand in comparison")
            return A.BoolLit(False)
        if A.REAL in sides and A.INT in sides:
            self.diag(label, "mixed-sort-comparison", "cannot compare a real expression with an integer expression")
            return A.BoolLit(False)
        if A.REAL in sides:
            return A.NumCmp(A.REAL, e.op, self.elab_num(e.lhs, A.REAL, label), self.elab_num(e.rhs, A.REAL, label))
        if A.INT in sides:
            return A.NumCmp(A.INT, e.op, self.elab_num(e.lhs, A.INT, label), self.elab_num(e.rhs, A.INT, label))
        return A.DomCmp(e.op, self.elab_dom(e.lhs, label), self.elab_dom(e.rhs, label))

    def elab_bool(self, e: RawExpr, label: str) -> A.BoolExpr:
        if isinstance(e, RBoolLit):
            return A.BoolLit(e.value)
        if isinstance(e, RName):
            if self.sorts.get(e.name) != A.BOOL:
                self.diag(label, "sort-mismatch", "%s is not a boolean variable" % e.name)
            return A.BoolVar(e.name)
        if isinstance(e, RUn) and e.op == "not":
            return A.BoolNot(self.elab_bool(e.arg, label))
        if isinstance(e, RBin) and e.op in ("and", "or"):
            return A.BoolBin(e.op, self.elab_bool(e.lhs, label), self.elab_bool(e.rhs, label))
        if isinstance(e, RBin) and e.op in ("<", "<=", ">", ">=", "==", "!="):
            c = self.elab_cmp(e, label)
            if isinstance(c, A.NumCmp):
                self.diag(
                    label,
                    "embedded-numeric-comparison",
                    "real/integer comparisons are only allowed as the whole right side of a boolean assignment",
                )
                return A.BoolLit(False)
            return c
        self.diag(label, "bad-bool-expr", "unsupported boolean expression")
        return A.BoolLit(False)

    def set_sort(self, var: str, sort: str, label: str) -> None:
        prev = self.sorts.get(var)
        if prev is None:
            self.sorts[var] = sort
        elif prev != sort:
            self.diag(label, "sort-mismatch", "%s was %s, assigned as %s" % (var, prev, sort))

    def elab_stmts(self, stmts: list) -> tuple:
        out = []
        for s in stmts:
            if isinstance(s, RExit):
                out.append(A.Exit(s.label or self.fresh_label()))
                continue
            if isinstance(s, RIf):
                label = s.label or self.fresh_label()
                cond = self.elab_bool(s.cond, label)
                out.append(A.If(label, cond, self.elab_stmts(s.then), self.elab_stmts(s.els)))
                continue
            if isinstance(s, RWhile):
                label = s.label or self.fresh_label()
                cond = self.elab_bool(s.cond, label)
                out.append(A.While(label, cond, self.elab_stmts(s.body)))
                continue
            if isinstance(s, RFor):
                raise AssertionError("for loop survived unrolling")
            assert isinstance(s, RAssign)
            label = s.label or self.fresh_label()
            if s.target.index is not None:
                self.diag(label, "bad-target", "indexed assignment target outside a for loop")
            var = s.target.name
            rhs = s.rhs
            if isinstance(rhs, RCall):
                out.append(self.elab_call_assign(label, var, rhs))
                continue
            sort = self.sort_of_expr(rhs)
            declared = self.sorts.get(var)
            if isinstance(rhs, RBin) and rhs.op in ("<", "<=", ">", ">=", "==", "!="):
                c = self.elab_cmp(rhs, label)
                self.set_sort(var, A.BOOL, label)
                if isinstance(c, A.NumCmp):
                    out.append(A.AssignCmp(label, var, c))
                else:
                    out.append(A.AssignBool(label, var, c))
                continue
            if sort == A.BOOL:
                self.set_sort(var, A.BOOL, label)
                out.append(A.AssignBool(label, var, self.elab_bool(rhs, label)))
            elif sort in (A.REAL, A.INT):
                self.set_sort(var, sort, label)
                out.append(A.AssignNum(label, var, sort, self.elab_num(rhs, sort, label)))
            elif declared in (A.REAL, A.INT):
                out.append(A.AssignNum(label, var, declared, self.elab_num(rhs, declared, label)))
            else:
                self.set_sort(var, A.DOM, label)
                out.append(A.AssignDom(label, var, self.elab_dom(rhs, label)))
        return tuple(out)

    def elab_call_assign(self, label: str, var: str, call: RCall) -> A.Stmt:
        fn = call.fn
        if fn in ("Lap", "DLap"):
            if len(call.args) != 2:
                self.diag(label, "bad-call", "%s takes (scale, mean)" % fn)
                return A.Exit(label)
            scale = self.scale_of(call.args[0], label)
            mean = self.elab_dom(call.args[1], label)
            sort = A.REAL if fn == "Lap" else A.INT
            self.set_sort(var, sort, label)
            return A.AssignLap(label, var, sort, scale, mean)
        if fn in ("ExpMech", "Choose"):
            if len(call.args) < 2 or not isinstance(call.args[0], RName):
                self.diag(label, "bad-call", "%s takes (name, scale, args...)" % fn)
                return A.Exit(label)
            name = call.args[0].name
            scale = self.scale_of(call.args[1], label)
            args = tuple(self.elab_dom(a, label) for a in call.args[2:])
            table = self.raw.score_tables if fn == "ExpMech" else self.raw.choose_defs
            if name not in table:
                raise ParseError("unknown %s definition %r" % ("scoring" if fn == "ExpMech" else "choose", name))
            if table[name].arity != len(args):
                self.diag(label, "bad-call", "%s/%d applied to %d arguments" % (name, table[name].arity, len(args)))
            self.set_sort(var, A.DOM, label)
            return A.AssignDomSample(label, var, "expmech" if fn == "ExpMech" else "choose", name, scale, args)
        if fn == "Disc":
            raise AssertionError("Disc survived expansion")
        raise ParseError("unknown function %r" % fn)


# -- single-assignment renaming ----------------------------------------------------------

_CONFLICT = "<conflict>"


def _rename_dom(e: A.DomExpr) -> A.DomExpr:
    return e  # dom variables are never renamed


def _rename_num(e: A.NumExpr, env: dict[str, str], diags: list, label: str) -> A.NumExpr:
    if isinstance(e, A.NumVar):
        alias = env.get(e.name, e.name)
        if alias == _CONFLICT:
            diags.append(
                A.Diagnostic(
                    label,
                    "conflicting-aliases",
                    "%s has different values on merging paths; rewrite with distinct variables" % e.name,
                )
            )
            return e
        return A.NumVar(alias, e.sort)
    if isinstance(e, (A.NumConst, A.NumOfDom)):
        return e
    if isinstance(e, A.NumScale):
        return A.NumScale(e.coef, _rename_num(e.arg, env, diags, label))
    if isinstance(e, A.NumScaleDom):
        return A.NumScaleDom(e.coef, _rename_num(e.arg, env, diags, label))
    if isinstance(e, A.NumAdd):
        return A.NumAdd(_rename_num(e.lhs, env, diags, label), _rename_num(e.rhs, env, diags, label))
    raise TypeError(e)


class _Renamer:
    def __init__(self, sorts: dict[str, str]):
        self.sorts = sorts
        self.counts: dict[str, int] = {}
        self.diags: list[A.Diagnostic] = []

    def fresh(self, var: str) -> str:
        self.counts[var] = self.counts.get(var, 1) + 1
        return "%s__%d" % (var, self.counts[var])

    def assign(self, var: str, env: dict[str, str]) -> str:
        if var not in env:
            env[var] = var
            return var
        alias = self.fresh(var)
        self.sorts[alias] = self.sorts[var]
        env[var] = alias
        return alias

    def run(self, stmts: tuple, env: dict[str, str]) -> tuple[tuple, bool]:
        out = []
        terminated = False
        for s in stmts:
            if terminated:
                out.append(s)  # unreachable; kept verbatim
                continue
            if isinstance(s, A.Exit):
                out.append(s)
                terminated = True
            elif isinstance(s, (A.AssignLap,)):
                alias = self.assign(s.var, env)
                out.append(A.AssignLap(s.label, alias, s.sort, s.scale, s.mean))
            elif isinstance(s, A.AssignNum):
                expr = _rename_num(s.expr, env, self.diags, s.label)
                alias = self.assign(s.var, env)
                out.append(A.AssignNum(s.label, alias, s.sort, expr))
            elif isinstance(s, A.AssignCmp):
                c = s.cmp
                c2 = A.NumCmp(
                    c.sort,
                    c.op,
                    _rename_num(c.lhs, env, self.diags, s.label),
                    _rename_num(c.rhs, env, self.diags, s.label),
                )
                out.append(A.AssignCmp(s.label, s.var, c2))
            elif isinstance(s, A.If):
                env1 = dict(env)
                env2 = dict(env)
                then, t1 = self.run(s.then, env1)
                els, t2 = self.run(s.els, env2)
                out.append(A.If(s.label, s.cond, then, els))
                if t1 and t2:
                    terminated = True
                elif t1:
                    env.clear()
                    env.update(env2)
                elif t2:
                    env.clear()
                    env.update(env1)
                else:
                    merged = {}
                    for k in set(env1) | set(env2):
                        a, b = env1.get(k), env2.get(k)
                        merged[k] = a if a == b else _CONFLICT
                    env.clear()
                    env.update(merged)
            elif isinstance(s, A.While):
                body, _t = self.run(s.body, dict(env))
                out.append(A.While(s.label, s.cond, body))
            else:
                out.append(s)
        return tuple(out), terminated


# -- public entry points -------------------------------------------------------------------


def parse_raw(text: str) -> RawProgram:
    """Parse to the sugared form (for-loops and Disc still present)."""
    return _Parser(text).parse()


def desugar(raw: RawProgram) -> RawProgram:
    counter = [0]
    stmts = unroll(raw.statements, {})
    stmts = expand_disc(stmts, counter)
    return RawProgram(
        stmts,
        raw.input_vars,
        raw.output_vars,
        raw.dom_lo,
        raw.dom_hi,
        raw.declared_sorts,
        raw.score_tables,
        raw.choose_defs,
    )


def parse_program(text: str) -> A.Program:
    """Full pipeline: text to the typed, desugared, singly-assigned Program."""
    raw = desugar(parse_raw(text))
    elab = _Elab(raw)
    stmts = elab.elab_stmts(raw.statements)
    renamer = _Renamer(elab.sorts)
    stmts, _ = renamer.run(stmts, {})
    prog = A.Program(
        statements=stmts,
        input_vars=tuple(raw.input_vars),
        output_vars=tuple(raw.output_vars),
        dom_lo=raw.dom_lo,
        dom_hi=raw.dom_hi,
        var_sorts=dict(elab.sorts),
        score_tables=dict(raw.score_tables),
        choose_defs=dict(raw.choose_defs),
        elab_diagnostics=elab.diags + renamer.diags,
    )
    labels = prog.labels()
    dupes = {l for l in labels if labels.count(l) > 1}
    if dupes:
        raise ParseError("duplicate statement labels: %s" % ", ".join(sorted(dupes)))
    return prog

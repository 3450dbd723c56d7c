"""Unparser: desugared Program back to concrete .dip text.

Round-trip contract: parse_program(pretty(p)) is structurally identical
to p (labels are emitted explicitly so they survive the trip).
"""

from __future__ import annotations

from fractions import Fraction

from ..symalg.pseudo import format_pseudo
from . import ast as A


def _rat(x: Fraction) -> str:
    return str(x) if x.denominator == 1 else "%d/%d" % (x.numerator, x.denominator)


def _dom(e: A.DomExpr) -> str:
    if isinstance(e, A.DomLit):
        return str(e.value)
    if isinstance(e, A.DomVar):
        return e.name
    if isinstance(e, A.DomOp):
        op = "+" if e.op == "add" else "-"
        return "(%s %s %s)" % (_dom(e.lhs), op, _dom(e.rhs))
    raise TypeError(e)


def _num(e: A.NumExpr) -> str:
    if isinstance(e, A.NumVar):
        return e.name
    if isinstance(e, A.NumConst):
        return _rat(e.value) if e.value >= 0 else "(%s)" % _rat(e.value)
    if isinstance(e, A.NumOfDom):
        return _dom(e.expr)
    if isinstance(e, A.NumScale):
        return "(%s) * %s" % (_rat(e.coef), _num(e.arg))
    if isinstance(e, A.NumScaleDom):
        return "%s * %s" % (_dom(e.coef), _num(e.arg))
    if isinstance(e, A.NumAdd):
        return "(%s + %s)" % (_num(e.lhs), _num(e.rhs))
    raise TypeError(e)


def _bool(e: A.BoolExpr) -> str:
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.BoolVar):
        return e.name
    if isinstance(e, A.BoolNot):
        return "not (%s)" % _bool(e.arg)
    if isinstance(e, A.BoolBin):
        return "(%s %s %s)" % (_bool(e.lhs), e.op, _bool(e.rhs))
    if isinstance(e, A.DomCmp):
        return "%s %s %s" % (_dom(e.lhs), e.op, _dom(e.rhs))
    raise TypeError(e)


def _scale(a: Fraction) -> str:
    return "%s*eps" % _rat(a)


def _stmt_lines(s: A.Stmt, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(s, A.AssignDom):
        out.append("%s%s: %s <- %s;" % (pad, s.label, s.var, _dom(s.expr)))
    elif isinstance(s, A.AssignDomSample):
        fn = "ExpMech" if s.mech == "expmech" else "Choose"
        args = ", ".join(_dom(a) for a in s.args)
        tail = ", " + args if args else ""
        out.append("%s%s: %s <- %s(%s, %s%s);" % (pad, s.label, s.var, fn, s.fn, _scale(s.scale), tail))
    elif isinstance(s, A.AssignNum):
        out.append("%s%s: %s <- %s;" % (pad, s.label, s.var, _num(s.expr)))
    elif isinstance(s, A.AssignLap):
        fn = "Lap" if s.sort == A.REAL else "DLap"
        out.append("%s%s: %s <- %s(%s, %s);" % (pad, s.label, s.var, fn, _scale(s.scale), _dom(s.mean)))
    elif isinstance(s, A.AssignBool):
        out.append("%s%s: %s <- %s;" % (pad, s.label, s.var, _bool(s.expr)))
    elif isinstance(s, A.AssignCmp):
        c = s.cmp
        out.append("%s%s: %s <- %s %s %s;" % (pad, s.label, s.var, _num(c.lhs), c.op, _num(c.rhs)))
    elif isinstance(s, A.If):
        out.append("%s%s: if %s {" % (pad, s.label, _bool(s.cond)))
        for t in s.then:
            _stmt_lines(t, indent + 1, out)
        if s.els:
            out.append("%s} else {" % pad)
            for t in s.els:
                _stmt_lines(t, indent + 1, out)
        out.append("%s}" % pad)
    elif isinstance(s, A.While):
        out.append("%s%s: while %s {" % (pad, s.label, _bool(s.cond)))
        for t in s.body:
            _stmt_lines(t, indent + 1, out)
        out.append("%s}" % pad)
    elif isinstance(s, A.Exit):
        out.append("%s%s: exit;" % (pad, s.label))
    else:
        raise TypeError(s)


def pretty(p: A.Program) -> str:
    out: list[str] = []
    if p.input_vars:
        out.append("input %s;" % ", ".join(p.input_vars))
    if p.output_vars:
        out.append("output %s;" % ", ".join(p.output_vars))
    out.append("dom %d..%d;" % (p.dom_lo, p.dom_hi))
    io = set(p.input_vars) | set(p.output_vars)
    decls: dict[str, list[str]] = {"real": [], "int": [], "bool": [], "domvar": []}
    for v, sort in sorted(p.var_sorts.items()):
        if v in io:
            continue
        key = {"real": "real", "int": "int", "bool": "bool", "dom": "domvar"}[sort]
        decls[key].append(v)
    for kw in ("real", "int", "bool", "domvar"):
        if decls[kw]:
            out.append("%s %s;" % (kw, ", ".join(decls[kw])))
    for s in p.statements:
        _stmt_lines(s, 0, out)
    for cd in p.choose_defs.values():
        out.append("choose %s/%d {" % (cd.name, cd.arity))
        for (args, v), pmf in sorted(cd.pmf.items()):
            out.append("  (%s) -> %d : %s;" % (", ".join(map(str, args)), v, format_pseudo(pmf)))
        out.append("}")
    for st in p.score_tables.values():
        out.append("score %s/%d {" % (st.name, st.arity))
        for (args, v), sc in sorted(st.entries.items()):
            out.append("  (%s) -> %d : %s;" % (", ".join(map(str, args)), v, _rat(sc)))
        out.append("}")
    return "\n".join(out) + "\n"

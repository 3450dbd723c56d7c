"""Static restrictions on parsed programs.

An accepted program satisfies: unique labels; every variable is assigned
before use on every control path; no real/integer assignment inside a
while body; real/integer variables singly assigned per path; no
real-vs-integer comparisons (caught at elaboration); outputs initialized
before every exit; dom literals inside the declared range; user
distributions total with rows summing to one.
"""

from __future__ import annotations

from ..symalg.pseudo import PseudoRational
from . import ast as A


def _used_vars(s: A.Stmt) -> set[str]:
    if isinstance(s, A.AssignDom):
        return A.dom_vars_used(s.expr)
    if isinstance(s, A.AssignDomSample):
        out: set[str] = set()
        for a in s.args:
            out |= A.dom_vars_used(a)
        return out
    if isinstance(s, A.AssignNum):
        return A.num_vars(s.expr) | A.dom_vars_used(s.expr)
    if isinstance(s, A.AssignLap):
        return A.dom_vars_used(s.mean)
    if isinstance(s, A.AssignBool):
        return A.bool_vars_used(s.expr) | A.dom_vars_used(s.expr)
    if isinstance(s, A.AssignCmp):
        c = s.cmp
        return A.num_vars(c.lhs) | A.num_vars(c.rhs) | A.dom_vars_used(c)
    if isinstance(s, (A.If, A.While)):
        return A.bool_vars_used(s.cond) | A.dom_vars_used(s.cond)
    return set()


def _assigned_var(s: A.Stmt):
    if isinstance(s, (A.AssignDom, A.AssignDomSample, A.AssignNum, A.AssignLap, A.AssignBool, A.AssignCmp)):
        return s.var
    return None


def _dom_literals(s: A.Stmt) -> list[int]:
    out = []

    def dom(e):
        if isinstance(e, A.DomLit):
            out.append(e.value)
        elif isinstance(e, A.DomOp):
            dom(e.lhs)
            dom(e.rhs)
        elif isinstance(e, A.DomCmp):
            dom(e.lhs)
            dom(e.rhs)
        elif isinstance(e, (A.BoolNot,)):
            dom(e.arg)
        elif isinstance(e, A.BoolBin):
            dom(e.lhs)
            dom(e.rhs)

    if isinstance(s, A.AssignDom):
        dom(s.expr)
    elif isinstance(s, A.AssignDomSample):
        for a in s.args:
            dom(a)
    elif isinstance(s, A.AssignLap):
        dom(s.mean)
    elif isinstance(s, A.AssignBool):
        dom(s.expr)
    elif isinstance(s, (A.If, A.While)):
        dom(s.cond)
    return out


def static_check(p: A.Program) -> list[A.Diagnostic]:
    """Empty list iff the program is accepted; otherwise one diagnostic per
    violation, located by statement label."""
    diags: list[A.Diagnostic] = list(p.elab_diagnostics)

    labels = p.labels()
    seen = set()
    for l in labels:
        if l in seen:
            diags.append(A.Diagnostic(l, "duplicate-label", "label used twice"))
        seen.add(l)

    # while-scope restriction and single assignment of real/int variables
    num_assigned: dict[str, str] = {}

    def scan(stmts, in_while: bool):
        for s in stmts:
            if isinstance(s, (A.AssignLap, A.AssignNum)):
                if in_while:
                    kind = "sampling" if isinstance(s, A.AssignLap) else "assignment"
                    diags.append(
                        A.Diagnostic(
                            s.label,
                            "assignment-in-loop-scope",
                            "real/integer %s inside a while body" % kind,
                        )
                    )
            if isinstance(s, A.If):
                scan(s.then, in_while)
                scan(s.els, in_while)
            elif isinstance(s, A.While):
                scan(s.body, True)

    scan(p.statements, False)

    # per-path single assignment for real/int variables
    def paths(stmts, assigned: dict[str, str]):
        assigned = dict(assigned)
        for s in stmts:
            v = _assigned_var(s)
            if isinstance(s, (A.AssignLap, A.AssignNum)):
                if v in assigned:
                    diags.append(
                        A.Diagnostic(
                            s.label,
                            "multiple-assignment",
                            "%s already assigned at %s on this path" % (v, assigned[v]),
                        )
                    )
                assigned[v] = s.label
            if isinstance(s, A.If):
                paths(s.then, assigned)
                paths(s.els, assigned)
            elif isinstance(s, A.While):
                paths(s.body, assigned)
            if isinstance(s, A.Exit):
                return

    paths(p.statements, {})

    # definite assignment before use; outputs initialized at exit
    def flow(stmts, defined: set[str]) -> tuple[set[str], bool]:
        defined = set(defined)
        for s in stmts:
            for u in _used_vars(s):
                if u not in defined:
                    diags.append(
                        A.Diagnostic(s.label, "use-before-assignment", "%s may be unassigned here" % u)
                    )
                    defined.add(u)  # report once
            if isinstance(s, A.Exit):
                for o in p.output_vars:
                    if o not in defined:
                        diags.append(
                            A.Diagnostic(s.label, "uninitialized-output", "output %s unset at exit" % o)
                        )
                return defined, True
            if isinstance(s, A.If):
                d1, t1 = flow(s.then, defined)
                d2, t2 = flow(s.els, defined)
                if t1 and t2:
                    return defined, True
                if t1:
                    defined = d2
                elif t2:
                    defined = d1
                else:
                    defined = d1 & d2
            elif isinstance(s, A.While):
                flow(s.body, defined)
            else:
                v = _assigned_var(s)
                if v is not None:
                    defined.add(v)
        return defined, False

    flow(p.statements, set(p.input_vars))

    # dom literal range
    for s in p.walk():
        for lit in _dom_literals(s):
            if not (p.dom_lo <= lit <= p.dom_hi):
                diags.append(
                    A.Diagnostic(s.label, "dom-literal-out-of-range", "%d outside %d..%d" % (lit, p.dom_lo, p.dom_hi))
                )

    # scale positivity (constructed positive; defensive re-check)
    for s in p.walk():
        if isinstance(s, (A.AssignLap, A.AssignDomSample)) and s.scale <= 0:
            diags.append(A.Diagnostic(s.label, "bad-scale", "scale coefficient must be positive"))

    # user distribution tables: total and, for choose, rows summing to one
    dom = list(p.dom_values())
    import itertools as _it

    for cd in p.choose_defs.values():
        for args in _it.product(dom, repeat=cd.arity):
            row = PseudoRational.zero()
            complete = True
            for v in dom:
                entry = cd.pmf.get((args, v))
                if entry is None:
                    diags.append(
                        A.Diagnostic("-", "incomplete-choose", "%s%s has no entry for value %d" % (cd.name, args, v))
                    )
                    complete = False
                else:
                    row = row + entry
            if complete and not (row - PseudoRational.one()).is_zero():
                diags.append(
                    A.Diagnostic("-", "unnormalized-choose", "%s%s probabilities do not sum to 1" % (cd.name, args))
                )
    for st in p.score_tables.values():
        for args in _it.product(dom, repeat=st.arity):
            for v in dom:
                if (args, v) not in st.entries:
                    diags.append(
                        A.Diagnostic("-", "incomplete-score", "%s%s has no score for value %d" % (st.name, args, v))
                    )
    return diags

"""Canonical LangPFL text for a parsed script."""

from __future__ import annotations

from .syntax import (BareAssumption, BinaryOp, Comparison, DecoratorUse, Ident, IndepAtom,
                     MetricTerm, ProbTerm, Quantified, Script, SetBool, SetMetric, SetProb,
                     SetsAtom, UnaryOp)

INDENT = "  "
_TERM_NAMES = {"cost": "Cost", "partime": "ParTime", "seqtime": "SeqTime", "skill": "Skill",
               "prob": "Prob"}
_SET_METRIC = {"cost": "set_cost", "partime": "set_partime", "seqtime": "set_seqtime",
               "skill": "set_skill"}
# binding strength; higher binds tighter
_LEVEL = {"=>": 1, "or": 2, "and": 3}


def format_number(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def format_expr(expr) -> str:
    return _expr(expr, 0, tail=True)


def _expr(expr, context: int, tail: bool) -> str:
    """``context`` is the binding level the surrounding operator requires."""
    if isinstance(expr, Quantified):
        text = f"{expr.quantifier} {_expr(expr.arg, 0, True)}"
        return text if tail else f"({text})"
    if isinstance(expr, BinaryOp):
        level = _LEVEL[expr.op]
        bare = level >= context
        # a quantifier on the right may stay bare when nothing follows it
        right_tail = tail or not bare
        if expr.op == "=>":
            left = _expr(expr.left, level + 1, False)
            right = _expr(expr.right, level, right_tail)
        else:
            left = _expr(expr.left, level, False)
            right = _expr(expr.right, level + 1, right_tail)
        text = f"{left} {expr.op} {right}"
        return text if bare else f"({text})"
    if isinstance(expr, UnaryOp):
        return f"not {_expr(expr.arg, 4, tail)}"
    if isinstance(expr, DecoratorUse):
        return f"@{expr.name}({_expr(expr.arg, 0, True)})"
    if isinstance(expr, Comparison):
        return f"{_term(expr.term)} {expr.cmp} {format_number(expr.bound)}"
    if isinstance(expr, (ProbTerm, MetricTerm)):
        return _term(expr)
    if isinstance(expr, SetsAtom):
        return f"{expr.kind}[{expr.element}]"
    if isinstance(expr, IndepAtom):
        return f"indep({expr.first}, {expr.second})"
    if isinstance(expr, Ident):
        return expr.name
    raise TypeError(f"not a LangPFL expression: {type(expr).__name__}")


def _term(term) -> str:
    if isinstance(term, ProbTerm):
        given = f" | {term.given}" if term.given is not None else ""
        return f"P[{term.event}{given}]"
    return f"{_TERM_NAMES[term.domain]}[{term.element}]"


def format_statement(stmt) -> str:
    if isinstance(stmt, SetBool):
        return f"set {stmt.element} = {stmt.value}"
    if isinstance(stmt, SetProb):
        return f"set_prob {stmt.element} = {format_number(stmt.value)}"
    if isinstance(stmt, SetMetric):
        return f"{_SET_METRIC[stmt.domain]} {stmt.element} {stmt.op} {format_number(stmt.value)}"
    if isinstance(stmt, BareAssumption):
        return format_expr(stmt.expr)
    raise TypeError(f"not a LangPFL statement: {type(stmt).__name__}")


def pretty_print(script: Script) -> str:
    lines = []
    if script.statements or script.decorators:
        lines.append("assume:")
        lines += [INDENT + format_statement(s) for s in script.statements]
        for block in script.decorators:
            lines.append(f"{INDENT}@{block.name}:")
            lines += [INDENT * 2 + format_statement(s) for s in block.statements]
    lines.append(f"{script.kind}:")
    lines.append(INDENT + format_expr(script.payload))
    return "\n".join(lines) + "\n"

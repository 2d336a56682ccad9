"""Probabilistic fault-tree logic over the independent-leaf product measure."""

from __future__ import annotations

from collections.abc import Mapping
from typing import NamedTuple

from .bdd import BDD
from .bfl import TableEvaluator
from .errors import FormulaError, MissingAttributeError, NullConditioningError
from .logic import (And, AtLeast, AtMost, Atom, Compare, Evidence, Implies, Not, Or, Prob,
                    Remapped, compare, elements_of, format_formula)
from .model import Kind, Side, TreeModel

ENGINES = ("auto", "exhaustive")
EVENT_TYPES = (Atom, Not, And, Or, Implies, Evidence, AtLeast)


def check_event(model: TreeModel, gamma, side: Side = Side.FAULT) -> None:
    stack = [gamma]
    while stack:
        node = stack.pop()
        if not isinstance(node, EVENT_TYPES):
            raise FormulaError(f"{type(node).__name__} is not allowed inside an event: "
                               + format_formula(gamma))
        if isinstance(node, (Not, Evidence)):
            stack.append(node.arg)
        elif isinstance(node, (And, Or, Implies)):
            stack.extend((node.left, node.right))
    for element in sorted(elements_of(gamma)):
        if model[element].side is not side:
            raise FormulaError(f"{element} is not on the {side.value} of the model")


def check_remap(model: TreeModel, remap: Mapping[str, float], kind: Kind = Kind.BASIC_EVENT) -> None:
    for target, value in remap.items():
        node = model[target]
        if node.kind is not kind:
            raise FormulaError(f"probability remap target {target} must be a {kind.value}")
        if not 0.0 <= float(value) <= 1.0:
            raise FormulaError(f"probability for {target} outside [0,1]: {value}")


def event_support(model: TreeModel, gamma, evidence: Mapping[str, int] | None = None) -> tuple[str, ...]:
    """Leaves whose status can influence ``gamma`` once evidence is substituted."""
    out: set[str] = set()

    def nodes_from(element: str, ev: Mapping[str, int]) -> None:
        stack = [element]
        seen = set()
        while stack:
            cur = stack.pop()
            if cur in seen or cur in ev:
                continue
            seen.add(cur)
            node = model[cur]
            if node.is_leaf:
                out.add(cur)
            else:
                stack.extend(node.children)

    def visit(phi, ev) -> None:
        if isinstance(phi, Atom):
            nodes_from(phi.element, ev)
        elif isinstance(phi, AtLeast):
            for element in phi.elements:
                nodes_from(element, ev)
        elif isinstance(phi, Evidence):
            visit(phi.arg, {**ev, **dict(phi.evidence)})
        elif isinstance(phi, Not):
            visit(phi.arg, ev)
        elif isinstance(phi, (And, Or, Implies)):
            visit(phi.left, ev)
            visit(phi.right, ev)

    visit(gamma, dict(evidence or {}))
    return tuple(sorted(out))


def leaf_probabilities(model: TreeModel, leaves, remap: Mapping[str, float] | None = None) -> dict[str, float]:
    remap = remap or {}
    probs = {}
    for leaf in leaves:
        if leaf in remap:
            probs[leaf] = float(remap[leaf])
            continue
        attrs = model[leaf].attrs
        if attrs is None or attrs.prob is None:
            raise MissingAttributeError(leaf, "prob")
        probs[leaf] = float(attrs.prob)
    return probs


def event_bdd(bdd: BDD, model: TreeModel, gamma, evidence: Mapping[str, int] | None = None) -> int:
    memo: dict[tuple, int] = {}

    def node(nid: str, ev: dict, key) -> int:
        if nid in ev:
            return bdd.const(ev[nid])
        cached = memo.get((nid, key))
        if cached is not None:
            return cached
        n = model[nid]
        if n.is_leaf:
            result = bdd.var(nid)
        elif n.op == "and":
            result = bdd.TRUE
            for child in n.children:
                result = bdd.conj(result, node(child, ev, key))
        else:
            result = bdd.FALSE
            for child in n.children:
                result = bdd.disj(result, node(child, ev, key))
        memo[(nid, key)] = result
        return result

    def formula(phi, ev: dict) -> int:
        key = tuple(sorted(ev.items()))
        if isinstance(phi, Atom):
            return node(phi.element, ev, key)
        if isinstance(phi, Not):
            return bdd.neg(formula(phi.arg, ev))
        if isinstance(phi, And):
            return bdd.conj(formula(phi.left, ev), formula(phi.right, ev))
        if isinstance(phi, Or):
            return bdd.disj(formula(phi.left, ev), formula(phi.right, ev))
        if isinstance(phi, Implies):
            return bdd.implies(formula(phi.left, ev), formula(phi.right, ev))
        if isinstance(phi, Evidence):
            return formula(phi.arg, {**ev, **dict(phi.evidence)})
        if isinstance(phi, AtLeast):
            parts = [node(e, ev, key) for e in phi.elements]
            # at_least[j]: at least j of the parts hold
            at_least = [bdd.TRUE] + [bdd.FALSE] * len(parts)
            for part in parts:
                for j in range(len(parts), 0, -1):
                    at_least[j] = bdd.disj(at_least[j], bdd.conj(at_least[j - 1], part))
            if isinstance(phi, AtMost):
                return bdd.neg(at_least[phi.k + 1]) if phi.k + 1 <= len(parts) else bdd.TRUE
            return at_least[phi.k]
        raise FormulaError(f"{type(phi).__name__} is not allowed inside an event")

    return formula(gamma, dict(evidence or {}))


def event_probability(model: TreeModel, gamma, remap: Mapping[str, float] | None = None, *,
                      engine: str = "auto", max_leaves: int | None = None,
                      side: Side = Side.FAULT) -> float:
    """Probability that ``gamma`` holds under independent leaf failures.

    ``engine="exhaustive"`` sums the product measure over every vector of the
    event's support; ``"auto"`` expands a decision diagram instead.
    """
    remap = dict(remap or {})
    check_event(model, gamma, side)
    check_remap(model, remap, Kind.BASIC_EVENT if side is Side.FAULT else Kind.ATTACK_STEP)
    support = event_support(model, gamma)
    probs = leaf_probabilities(model, support, remap)
    if engine == "exhaustive":
        evaluator = TableEvaluator(model, max_leaves=max_leaves, leaves=support)
        bits = evaluator.space.to_bool_array(evaluator.table(gamma))
        weights = evaluator.space.product_weights(probs)
        return float(weights[bits].sum())
    if engine != "auto":
        raise ValueError(f"unknown engine {engine!r}")
    bdd = BDD(support)
    return bdd.probability(event_bdd(bdd, model, gamma), probs)


def conditional_probability(model: TreeModel, gamma, delta, remap=None, **kwargs) -> float:
    denominator = event_probability(model, delta, remap, **kwargs)
    if denominator <= 0.0:
        raise NullConditioningError(format_formula(delta))
    return event_probability(model, And(gamma, delta), remap, **kwargs) / denominator


def prob_value(model: TreeModel, term: Prob, remap=None, **kwargs) -> float:
    if term.given is None:
        return event_probability(model, term.event, remap, **kwargs)
    return conditional_probability(model, term.event, term.given, remap, **kwargs)


class PflResult(NamedTuple):
    holds: bool
    trace: list[dict]


def eval_pfl(model: TreeModel, psi, *, remap: Mapping[str, float] | None = None,
             engine: str = "auto", max_leaves: int | None = None, tol: float = 1e-9) -> PflResult:
    """Truth of a probabilistic formula plus each comparison's computed value."""
    trace: list[dict] = []

    def visit(phi, rm: dict) -> bool:
        if isinstance(phi, Compare):
            term = phi.term
            if not isinstance(term, Prob):
                raise FormulaError("only Pr(...) comparisons belong to the probabilistic logic")
            if term.attach:
                raise FormulaError("attachment resolution requires a joint query")
            value = prob_value(model, term, rm, engine=engine, max_leaves=max_leaves)
            holds = compare(value, phi.cmp, phi.bound, tol)
            trace.append({"formula": format_formula(phi), "value": value, "holds": holds})
            return holds
        if isinstance(phi, Not):
            return not visit(phi.arg, rm)
        if isinstance(phi, And):
            return visit(phi.left, rm) & visit(phi.right, rm)
        if isinstance(phi, Or):
            return visit(phi.left, rm) | visit(phi.right, rm)
        if isinstance(phi, Implies):
            return (not visit(phi.left, rm)) | visit(phi.right, rm)
        if isinstance(phi, Remapped):
            return visit(phi.arg, {**rm, **dict(phi.remap)})
        raise FormulaError(f"unsupported in probabilistic logic: {type(phi).__name__}")

    holds = visit(psi, dict(remap or {}))
    return PflResult(holds, trace)


class Independence(NamedTuple):
    independent: bool
    joint: float
    first: float
    second: float


def stochastic_independence(model: TreeModel, first, second, tol: float = 1e-9,
                            **kwargs) -> Independence:
    p1 = event_probability(model, first, **kwargs)
    p2 = event_probability(model, second, **kwargs)
    p12 = event_probability(model, And(first, second), **kwargs)
    return Independence(abs(p12 - p1 * p2) <= tol, p12, p1, p2)

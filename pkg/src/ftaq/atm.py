"""Attack-tree metrics: minimal attacks, semiring values, success probability."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bfl import TableEvaluator, Verdict, _require_side, closed_verdict, set_order
from .errors import FormulaError, MissingAttributeError
from .logic import (And, AttackProb, Atom, Compare, Evidence, Exists, Forall, Implies, Metric,
                    Not, Or, Prob, compare, format_formula, walk)
from .model import LeafAttrs, Side, StatusVector, TreeModel, collapse_node, structure_eval
from .pfl import event_probability

INF = math.inf


@dataclass(frozen=True)
class AttributeDomain:
    name: str
    combine: str  # within one attack: "sum" or "max"; among attacks always min
    attr: str

    def fold(self, values: Iterable[float]) -> float:
        values = list(values)
        if not values:
            return 0.0
        return float(sum(values)) if self.combine == "sum" else float(max(values))


DOMAINS = {
    "cost": AttributeDomain("cost", "sum", "cost"),
    "partime": AttributeDomain("partime", "max", "time"),
    "seqtime": AttributeDomain("seqtime", "sum", "time"),
    "skill": AttributeDomain("skill", "max", "skill"),
}


def get_domain(name: str) -> AttributeDomain:
    try:
        return DOMAINS[name]
    except KeyError:
        raise FormulaError(f"unknown metric domain {name!r}; expected one of {', '.join(DOMAINS)}") from None


def apply_remap(model: TreeModel, attr: str, remap: Mapping[str, float] | None):
    """Overwrite leaf attributes and collapse remapped gates into priced leaves.

    Returns the new model and the ids of collapsed gates.
    """
    remap = dict(remap or {})
    for target, value in remap.items():
        if model[target].side is not Side.ATTACK:
            raise FormulaError(f"attribute remap target {target} is not on the attack side")
        value = float(value)
        if not (math.isfinite(value) and value >= 0.0) or (attr == "prob" and value > 1.0):
            raise FormulaError(f"invalid {attr} value for {target}: {value}")
    collapsed = []
    leaves_first = sorted(remap, key=lambda t: (not model[t].is_leaf, t))
    for target in leaves_first:
        if target not in model.nodes:
            continue  # dropped by an earlier gate collapse
        value = float(remap[target])
        node = model[target]
        if node.is_leaf:
            attrs = (node.attrs or LeafAttrs()).replace(**{attr: value})
        else:
            attrs = LeafAttrs(**{attr: value})
            collapsed.append(target)
        model = collapse_node(model, target, attrs)
    return model, tuple(collapsed)


def project_steps(original: TreeModel, remapped: TreeModel, collapsed, steps) -> frozenset[str]:
    """Map a set of original attack steps onto the leaves of a remapped model.

    A collapsed gate counts as attempted when the steps achieve it in the
    original model (or when it is named directly).
    """
    steps = set(steps)
    out = {s for s in steps if s in remapped.nodes and remapped[s].is_leaf}
    for g in collapsed:
        if g in steps:
            out.add(g)
            continue
        status = {leaf: int(leaf in steps) for leaf in original.cone(g)}
        if structure_eval(original, g, status):
            out.add(g)
    return frozenset(out)


def _attr_of(model: TreeModel, leaf: str, attr: str) -> float:
    attrs = model[leaf].attrs
    value = None if attrs is None else attrs.get(attr)
    if value is None:
        raise MissingAttributeError(leaf, attr)
    return float(value)


def _require_attack(model: TreeModel, element: str) -> None:
    if model[element].side is not Side.ATTACK:
        raise FormulaError(f"{element} is not on the attack side of the model")


def minimal_attacks(model: TreeModel, element: str, evidence: Mapping[str, int] | None = None, *,
                    max_leaves: int | None = None) -> list[frozenset[str]]:
    """Inclusion-minimal step sets that achieve ``element``."""
    _require_attack(model, element)
    for target in evidence or {}:
        model[target]
    evaluator = TableEvaluator(model, max_leaves=max_leaves, leaves=model.cone(element))
    table = evaluator.nodes.table(element, evidence)
    return set_order(evaluator.space.failed_sets(evaluator.minimal_table(table)))


def metric_value(model: TreeModel, domain: str, element: str,
                 remap: Mapping[str, float] | None = None,
                 evidence: Mapping[str, int] | None = None, *,
                 max_leaves: int | None = None) -> float:
    """Best (minimal) metric over all minimal attacks; ``inf`` if none exists."""
    dom = get_domain(domain)
    _require_attack(model, element)
    remapped, _ = apply_remap(model, dom.attr, remap)
    values = {leaf: _attr_of(remapped, leaf, dom.attr) for leaf in remapped.cone(element)}
    attacks = minimal_attacks(remapped, element, evidence, max_leaves=max_leaves)
    if not attacks:
        return INF
    return min(dom.fold(values[s] for s in attack) for attack in attacks)


def metric_of_attack(model: TreeModel, domain: str, steps, remap: Mapping[str, float] | None = None) -> float:
    dom = get_domain(domain)
    remapped, collapsed = apply_remap(model, dom.attr, remap)
    members = project_steps(model, remapped, collapsed, steps)
    for member in members:
        if not remapped[member].is_leaf or remapped[member].side is not Side.ATTACK:
            raise FormulaError(f"{member} is not an attack step")
    return dom.fold(_attr_of(remapped, m, dom.attr) for m in sorted(members))


def attack_success_probability(model: TreeModel, element: str,
                               prob_remap: Mapping[str, float] | None = None,
                               strategy=None, evidence: Mapping[str, int] | None = None, *,
                               engine: str = "auto", max_leaves: int | None = None) -> float:
    """Probability that ``element`` is achieved when every step is tried once.

    With a ``strategy``, steps outside it are not attempted (probability 0).
    """
    _require_attack(model, element)
    remapped, collapsed = apply_remap(model, "prob", prob_remap)
    zeroed = {}
    if strategy is not None:
        attempted = project_steps(model, remapped, collapsed, strategy)
        zeroed = {leaf: 0.0 for leaf in remapped.cone(element) if leaf not in attempted}
    gamma = Atom(element) if not evidence else Evidence(Atom(element), evidence)
    return event_probability(remapped, gamma, zeroed, engine=engine, max_leaves=max_leaves,
                             side=Side.ATTACK)


def term_value(model: TreeModel, term, evidence=None, **kwargs) -> float:
    if isinstance(term, Metric):
        return metric_value(model, term.domain, term.element, dict(term.remap), evidence,
                            max_leaves=kwargs.get("max_leaves"))
    if isinstance(term, AttackProb):
        return attack_success_probability(model, term.element, dict(term.remap), None, evidence,
                                          **kwargs)
    raise FormulaError(f"not an attack metric term: {type(term).__name__}")


# ---------------------------------------------------------------------------
# Formulas


class AttackTables(TableEvaluator):
    side = Side.ATTACK

    def __init__(self, model, *, engine: str = "auto", tol: float = 1e-9, **kwargs):
        super().__init__(model, **kwargs)
        self.engine = engine
        self.tol = tol

    def extra_table(self, phi, ev: dict) -> int:
        if not isinstance(phi, Compare):
            raise FormulaError(f"unsupported in attack logic: {type(phi).__name__}")
        term = phi.term
        if isinstance(term, AttackProb):
            value = attack_success_probability(self.model, term.element, dict(term.remap), None, ev,
                                               engine=self.engine)
            return self.space.const(compare(value, phi.cmp, phi.bound, self.tol))
        if isinstance(term, Metric):
            return self.nodes.table(term.element, ev) & self._metric_mask(term, phi.cmp, phi.bound)
        raise FormulaError("Pr(...) belongs to fault-side queries, not attack formulas")

    def _metric_mask(self, term: Metric, cmp: str, bound: float) -> int:
        """Vectors whose attempted steps inside the element's cone satisfy the bound."""
        model, space = self.model, self.space
        dom = get_domain(term.domain)
        remap = dict(term.remap)
        cone = model.cone(term.element)
        if any(not model[t].is_leaf for t in remap):
            holds = np.zeros(space.size, dtype=bool)
            cols = space.bit_columns()
            cone_rows = [space.position[leaf] for leaf in cone]
            for i in range(space.size):
                steps = [space.leaves[j] for j in cone_rows if cols[j, i]]
                holds[i] = compare(metric_of_attack(model, term.domain, steps, remap),
                                   cmp, bound, self.tol)
            return space.from_bool_array(holds)
        values = np.array([float(remap[leaf]) if leaf in remap else _attr_of(model, leaf, dom.attr)
                           for leaf in cone])
        bits = space.bit_columns()[[space.position[leaf] for leaf in cone]]
        if dom.combine == "sum":
            per_vector = values @ bits.astype(float) if len(cone) else np.zeros(space.size)
        else:
            per_vector = (bits * values[:, None]).max(axis=0) if len(cone) else np.zeros(space.size)
        return space.from_bool_array(compare(per_vector, cmp, bound, self.tol))


class AtmResult(NamedTuple):
    holds: bool
    witness: StatusVector | None
    trace: list[dict]


def eval_atm(model: TreeModel, phi, *, engine: str = "auto", max_leaves: int | None = None,
             tol: float = 1e-9) -> AtmResult:
    """Closed (quantified) or quantifier-free attack formula."""
    _require_side(model, phi, Side.ATTACK)
    if isinstance(phi, (Exists, Forall)):
        evaluator = AttackTables(model, engine=engine, tol=tol, max_leaves=max_leaves)
        verdict: Verdict = closed_verdict(evaluator, phi)
        return AtmResult(verdict.holds, verdict.witness, [])

    trace: list[dict] = []

    def visit(psi, ev: dict) -> bool:
        if isinstance(psi, Compare):
            if isinstance(psi.term, Prob):
                raise FormulaError("Pr(...) belongs to fault-side queries, not attack formulas")
            value = term_value(model, psi.term, ev, engine=engine, max_leaves=max_leaves)
            holds = compare(value, psi.cmp, psi.bound, tol)
            entry = {"formula": format_formula(psi), "value": value, "holds": holds}
            if value == INF:
                entry["unattackable"] = True
            trace.append(entry)
            return holds
        if isinstance(psi, Not):
            return not visit(psi.arg, ev)
        if isinstance(psi, And):
            return visit(psi.left, ev) & visit(psi.right, ev)
        if isinstance(psi, Or):
            return visit(psi.left, ev) | visit(psi.right, ev)
        if isinstance(psi, Implies):
            return (not visit(psi.left, ev)) | visit(psi.right, ev)
        if isinstance(psi, Evidence):
            return visit(psi.arg, {**ev, **dict(psi.evidence)})
        if isinstance(psi, Atom):
            raise FormulaError(f"bare attack atom {psi.element} needs an exists/forall quantifier")
        raise FormulaError(f"unsupported in attack logic: {type(psi).__name__}")

    return AtmResult(visit(phi, {}), None, trace)


def attack_all_sat(model: TreeModel, phi, *, max_leaves: int | None = None,
                   tol: float = 1e-9) -> list[frozenset[str]]:
    """Attempted-step sets of every attack vector satisfying a quantifier-free ``phi``."""
    _require_side(model, phi, Side.ATTACK)
    if any(isinstance(node, (Exists, Forall)) for node in walk(phi)):
        raise FormulaError("formula must be quantifier-free: " + format_formula(phi))
    evaluator = AttackTables(model, tol=tol, max_leaves=max_leaves)
    return set_order(evaluator.space.failed_sets(evaluator.table(phi)))

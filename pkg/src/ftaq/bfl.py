"""Boolean fault-tree logic: evaluation, closed checks, satisfying sets."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

from .errors import FormulaError
from .logic import (And, AtLeast, AtMost, Atom, Evidence, Exists, Forall, Implies, Indep,
                    Mcs, Mps, Not, Or, elements_of, format_formula, walk)
from .model import (Side, StatusVector, TreeModel, enumerate_leaf_vectors, structure_eval,
                    structurally_independent)
from .tables import BoolSpace, NodeTables


@dataclass(frozen=True)
class Verdict:
    holds: bool
    witness: StatusVector | None = None


def set_order(sets) -> list[frozenset[str]]:
    """Deduplicate and sort by size, then lexicographically."""
    unique = {frozenset(s) for s in sets}
    return sorted(unique, key=lambda s: (len(s), sorted(s)))


def _require_side(model: TreeModel, phi, side: Side) -> None:
    for element in sorted(elements_of(phi)):
        if model[element].side is not side:
            raise FormulaError(f"{element} is not on the {side.value} of the model")


# ---------------------------------------------------------------------------
# Pointwise semantics


def eval_bfl(model: TreeModel, phi, status: Mapping[str, int],
             evidence: Mapping[str, int] | None = None, *, max_leaves: int | None = None) -> bool:
    """Truth of ``phi`` at one status vector over the fault-side leaves."""
    _require_side(model, phi, Side.FAULT)
    return _eval_point(model, phi, status, dict(evidence or {}), max_leaves)


def _eval_point(model, phi, f, ev, max_leaves) -> bool:
    rec = lambda psi, e=ev: _eval_point(model, psi, f, e, max_leaves)  # noqa: E731
    if isinstance(phi, Atom):
        return structure_eval(model, phi.element, f, ev)
    if isinstance(phi, Not):
        return not rec(phi.arg)
    if isinstance(phi, And):
        return rec(phi.left) and rec(phi.right)
    if isinstance(phi, Or):
        return rec(phi.left) or rec(phi.right)
    if isinstance(phi, Implies):
        return (not rec(phi.left)) or rec(phi.right)
    if isinstance(phi, Evidence):
        return rec(phi.arg, {**ev, **dict(phi.evidence)})
    if isinstance(phi, Mcs):
        if not structure_eval(model, phi.element, f, ev):
            return False
        for leaf in f:
            if f[leaf] and structure_eval(model, phi.element, {**f, leaf: 0}, ev):
                return False
        return True
    if isinstance(phi, Mps):
        marked = [leaf for leaf in f if f[leaf]]
        g = {leaf: 1 - f[leaf] for leaf in f}
        if structure_eval(model, phi.element, g, ev):
            return False
        return all(structure_eval(model, phi.element, {**g, leaf: 1}, ev) for leaf in marked)
    if isinstance(phi, Indep):
        return structurally_independent(model, phi.first, phi.second)
    if isinstance(phi, AtMost):
        count = sum(structure_eval(model, e, f, ev) for e in phi.elements)
        return count <= phi.k
    if isinstance(phi, AtLeast):
        count = sum(structure_eval(model, e, f, ev) for e in phi.elements)
        return count >= phi.k
    if isinstance(phi, (Exists, Forall)):
        side = Side.FAULT if not f else model[next(iter(f))].side
        vectors = enumerate_leaf_vectors(model, model.leaves(side), max_leaves=max_leaves)
        results = (_eval_point(model, phi.arg, g, ev, max_leaves) for g in vectors)
        return any(results) if isinstance(phi, Exists) else all(results)
    raise FormulaError(f"unsupported in boolean logic: {type(phi).__name__}")


# ---------------------------------------------------------------------------
# Exhaustive table semantics


class TableEvaluator:
    """Evaluates formulas to tables over every leaf vector of one side."""

    side = Side.FAULT

    def __init__(self, model: TreeModel, *, max_leaves: int | None = None, leaves=None):
        self.model = model
        leaves = model.leaves(self.side) if leaves is None else tuple(leaves)
        self.space = BoolSpace(leaves, max_leaves=max_leaves)
        self.nodes = NodeTables(model, self.space)

    def table(self, phi, evidence: Mapping[str, int] | None = None) -> int:
        return self._table(phi, dict(evidence or {}))

    def _table(self, phi, ev: dict) -> int:
        space = self.space
        if isinstance(phi, Atom):
            return self.nodes.table(phi.element, ev)
        if isinstance(phi, Not):
            return space.neg(self._table(phi.arg, ev))
        if isinstance(phi, And):
            return self._table(phi.left, ev) & self._table(phi.right, ev)
        if isinstance(phi, Or):
            return self._table(phi.left, ev) | self._table(phi.right, ev)
        if isinstance(phi, Implies):
            return space.neg(self._table(phi.left, ev)) | self._table(phi.right, ev)
        if isinstance(phi, Evidence):
            return self._table(phi.arg, {**ev, **dict(phi.evidence)})
        if isinstance(phi, Exists):
            return space.const(self._table(phi.arg, ev) != 0)
        if isinstance(phi, Forall):
            return space.const(self._table(phi.arg, ev) == space.full)
        if isinstance(phi, Mcs):
            return self.minimal_table(self.nodes.table(phi.element, ev))
        if isinstance(phi, Mps):
            dual = self.nodes.table(phi.element, ev, dual=True)
            result = space.neg(dual)
            for leaf in space.leaves:
                result &= space.neg(space.leaf_mask(leaf)) | space.set_to_zero(dual, leaf)
            return result
        if isinstance(phi, Indep):
            return space.const(structurally_independent(self.model, phi.first, phi.second))
        if isinstance(phi, AtLeast):
            tables = [self.nodes.table(e, ev) for e in phi.elements]
            at_least = self._count_tables(tables)
            if isinstance(phi, AtMost):
                return space.neg(at_least[phi.k + 1]) if phi.k + 1 < len(at_least) else space.full
            return at_least[phi.k]
        return self.extra_table(phi, ev)

    def extra_table(self, phi, ev: dict) -> int:
        raise FormulaError(f"unsupported in boolean logic: {type(phi).__name__}")

    def minimal_table(self, table: int) -> int:
        """Vectors satisfying ``table`` from which no single failed leaf can be dropped."""
        space = self.space
        result = table
        for leaf in space.leaves:
            result &= space.neg(space.leaf_mask(leaf)) | space.neg(space.set_to_zero(table, leaf))
        return result

    def _count_tables(self, tables: list[int]) -> list[int]:
        # at_least[j]: vectors where at least j of the tables hold
        at_least = [self.space.full] + [0] * len(tables)
        for t in tables:
            for j in range(len(tables), 0, -1):
                at_least[j] |= at_least[j - 1] & t
        return at_least


def _require_closed(phi) -> None:
    if not isinstance(phi, (Exists, Forall)):
        raise FormulaError("closed query must start with exists/forall: " + format_formula(phi))


def _require_quantifier_free(phi) -> None:
    if any(isinstance(node, (Exists, Forall)) for node in walk(phi)):
        raise FormulaError("formula must be quantifier-free: " + format_formula(phi))


def check_closed(model: TreeModel, phi, *, max_leaves: int | None = None) -> Verdict:
    """Exhaustive check of an ``Exists``/``Forall`` formula.

    The witness (a satisfying vector for ``Exists``, a counterexample for a
    failing ``Forall``) is the first in canonical set order: fewest failed
    leaves, then lexicographically smallest ids.
    """
    _require_closed(phi)
    _require_side(model, phi, Side.FAULT)
    return closed_verdict(TableEvaluator(model, max_leaves=max_leaves), phi)


def closed_verdict(evaluator: TableEvaluator, phi) -> Verdict:
    space = evaluator.space
    body = evaluator.table(phi.arg)
    if isinstance(phi, Exists):
        index = space.first(body)
        return Verdict(index is not None, None if index is None else space.vector(index))
    index = space.first(space.neg(body))
    return Verdict(index is None, None if index is None else space.vector(index))


def all_sat(model: TreeModel, phi, *, max_leaves: int | None = None) -> list[frozenset[str]]:
    """Failed-leaf sets of every vector satisfying a quantifier-free ``phi``."""
    _require_quantifier_free(phi)
    _require_side(model, phi, Side.FAULT)
    evaluator = TableEvaluator(model, max_leaves=max_leaves)
    return set_order(evaluator.space.failed_sets(evaluator.table(phi)))


def minimal_cut_sets(model: TreeModel, element: str, *,
                     max_leaves: int | None = None) -> list[frozenset[str]]:
    return all_sat(model, Mcs(element), max_leaves=max_leaves)


def minimal_path_sets(model: TreeModel, element: str, *,
                      max_leaves: int | None = None) -> list[frozenset[str]]:
    return all_sat(model, Mps(element), max_leaves=max_leaves)

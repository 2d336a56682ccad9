"""Evaluate desugared queries into JSON-ready records."""

from __future__ import annotations

import math
from collections.abc import Mapping

import numpy as np

from .atm import attack_all_sat, eval_atm, term_value
from .bfl import TableEvaluator, all_sat, check_closed
from .joint import JointQuery, eval_joint
from .langpfl.desugar import Query
from .logic import Evidence, Forall, Implies, Remapped
from .model import StatusVector, TreeModel
from .pfl import eval_pfl, prob_value


def plain(value):
    """Recursively convert engine output into JSON-compatible values."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, StatusVector):
        return {"ones": sorted(value.failed)}
    if isinstance(value, Mapping):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (frozenset, set)):
        return sorted(plain(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    return value


def _sets(sets) -> list[list[str]]:
    return [sorted(s) for s in sets]


def _vacuous(model: TreeModel, formula, max_leaves) -> bool:
    """A ``forall`` over an implication whose antecedent never holds."""
    if not isinstance(formula, Forall):
        return False
    body, evidence = formula.arg, {}
    while isinstance(body, Evidence):
        evidence.update(dict(body.evidence))
        body = body.arg
    if not isinstance(body, Implies):
        return False
    return TableEvaluator(model, max_leaves=max_leaves).table(body.left, evidence) == 0


def run_query(model: TreeModel, query: Query, *, engine: str = "auto",
              max_leaves: int | None = None, tol: float = 1e-9) -> dict:
    """Evaluate ``query`` and return ``{result, trace, witness, flags, warnings}``."""
    formula = query.formula
    out = {"result": None, "trace": [], "witness": None, "flags": [], "warnings": []}
    if query.engine == "bfl":
        if query.kind == "sets":
            out["result"] = _sets(all_sat(model, formula, max_leaves=max_leaves))
        else:
            verdict = check_closed(model, formula, max_leaves=max_leaves)
            out["result"] = verdict.holds
            out["witness"] = verdict.witness
            if _vacuous(model, formula, max_leaves):
                out["flags"].append("vacuous")
    elif query.engine == "pfl":
        if query.kind == "value":
            remap = {}
            if isinstance(formula, Remapped):
                remap, formula = dict(formula.remap), formula.arg
            out["result"] = prob_value(model, formula, remap, engine=engine, max_leaves=max_leaves)
        else:
            result = eval_pfl(model, formula, engine=engine, max_leaves=max_leaves, tol=tol)
            out["result"], out["trace"] = result.holds, result.trace
    elif query.engine == "atm":
        if query.kind == "sets":
            out["result"] = _sets(attack_all_sat(model, formula, max_leaves=max_leaves, tol=tol))
        elif query.kind == "value":
            evidence = None
            if isinstance(formula, Evidence):
                evidence, formula = dict(formula.evidence), formula.arg
            value = term_value(model, formula, evidence, engine=engine, max_leaves=max_leaves)
            out["result"] = value
            if value == math.inf:
                out["flags"].append("unattackable")
        else:
            result = eval_atm(model, formula, engine=engine, max_leaves=max_leaves, tol=tol)
            out["result"], out["witness"], out["trace"] = result.holds, result.witness, result.trace
            if any(entry.get("unattackable") for entry in result.trace):
                out["flags"].append("unattackable")
    elif query.engine == "joint":
        assert isinstance(formula, JointQuery)
        result = eval_joint(model, formula, engine=engine, max_leaves=max_leaves, tol=tol)
        out["result"] = result.value if formula.mode == "compute" else result.verdict
        if formula.existential:
            out["trace"] = result.sweep
            out["witness"] = None if result.witness is None else {"strategy": list(result.witness)}
            out["flags"].append("strategy-sweep")
        else:
            out["trace"] = result.trace
        out["warnings"] = list(result.warnings)
    else:
        raise ValueError(f"unknown engine {query.engine!r}")
    return plain(out)


"""Joint safety-security queries.

Fault-side probability queries in which attached basic events take the
success probability of their attack tree, evaluated under named assumption
environments and, in existential mode, over attacker strategies (sets of
attempted attack steps) constrained by metric budgets.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Mapping
from dataclasses import dataclass, field

from .atm import (attack_success_probability, get_domain, metric_of_attack, metric_value)
from .errors import FormulaError, FtaqError, GuardExceededError
from .logic import (And, AttackProb, Atom, Compare, Decorated, Evidence, Implies, Metric, Not, Or,
                    Prob, Remapped, compare, format_formula)
from .model import DEFAULT_MAX_LEAVES, Side, StatusVector, TreeModel, structure_eval
from .pfl import event_support, prob_value


@dataclass(frozen=True)
class Budget:
    domain: str
    element: str
    cmp: str
    bound: float

    def __str__(self) -> str:
        bound = int(self.bound) if float(self.bound).is_integer() else self.bound
        return f"{self.domain}({self.element}) {self.cmp} {bound}"


@dataclass(frozen=True)
class AssumptionEnv:
    boolean_evidence: Mapping[str, int] = field(default_factory=dict)
    prob_remap: Mapping[str, float] = field(default_factory=dict)
    attack_prob_remap: Mapping[str, float] = field(default_factory=dict)
    # leaf attribute ("cost", "time", "skill") -> element -> value
    attr_remaps: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    budgets: tuple[Budget, ...] = ()

    def is_empty(self) -> bool:
        return not (self.boolean_evidence or self.prob_remap or self.attack_prob_remap
                    or any(self.attr_remaps.values()) or self.budgets)


def merge_envs(outer: AssumptionEnv, inner: AssumptionEnv) -> AssumptionEnv:
    """Per-key override with ``inner`` winning; budgets are concatenated."""
    attrs = {k: dict(v) for k, v in outer.attr_remaps.items()}
    for attr, remap in inner.attr_remaps.items():
        attrs.setdefault(attr, {}).update(remap)
    return AssumptionEnv(
        boolean_evidence={**outer.boolean_evidence, **inner.boolean_evidence},
        prob_remap={**outer.prob_remap, **inner.prob_remap},
        attack_prob_remap={**outer.attack_prob_remap, **inner.attack_prob_remap},
        attr_remaps=attrs,
        budgets=tuple(outer.budgets) + tuple(inner.budgets),
    )


@dataclass(frozen=True)
class JointQuery:
    body: object
    env_global: AssumptionEnv = AssumptionEnv()
    env_named: Mapping[str, AssumptionEnv] = field(default_factory=dict)
    mode: str = "check"  # or "compute"
    existential: bool = False


@dataclass
class JointResult:
    verdict: bool | None = None
    value: float | None = None
    trace: list[dict] = field(default_factory=list)
    witness: tuple[str, ...] | None = None
    sweep: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def resolve_attachment(model: TreeModel, be: str, env: AssumptionEnv = AssumptionEnv(),
                       strategy=None, extra_remap: Mapping[str, float] | None = None, *,
                       engine: str = "auto", max_leaves: int | None = None) -> float:
    """Success probability of the attack tree refining basic event ``be``."""
    model[be]
    target = model.attachments.get(be)
    if target is None:
        raise FormulaError(f"{be} is not attached to an attack tree")
    remap = {**env.attack_prob_remap, **dict(extra_remap or {})}
    return attack_success_probability(model, target, remap, strategy,
                                      engine=engine, max_leaves=max_leaves)


class _Evaluator:
    def __init__(self, model: TreeModel, query: JointQuery, engine: str, max_leaves, tol: float):
        self.model = model
        self.query = query
        self.engine = engine
        self.max_leaves = max_leaves
        self.tol = tol
        self.trace: list[dict] = []
        self.warnings: set[str] = set()

    def named(self, name: str) -> AssumptionEnv:
        try:
            return self.query.env_named[name]
        except KeyError:
            raise FtaqError(f"unresolved decorator @{name}") from None

    # -- terms --------------------------------------------------------------

    def prob(self, term: Prob, env: AssumptionEnv, strategy) -> tuple[float, dict]:
        remap = dict(env.prob_remap)
        resolved = {}
        for att in term.attach:
            if att.be in env.prob_remap:
                continue  # an explicit set_prob on the BE wins over resolution
            p = resolve_attachment(self.model, att.be, env, strategy, dict(att.remap),
                                   engine=self.engine, max_leaves=self.max_leaves)
            remap[att.be] = p
            resolved[att.be] = p
        event, given = term.event, term.given
        ev = dict(env.boolean_evidence)
        if ev:
            event = Evidence(event, ev)
            given = None if given is None else Evidence(given, ev)
        attached = {be for be in self.model.attachments
                    if be in event_support(self.model, event) and be not in remap}
        for be in sorted(attached):
            self.warnings.add(f"attachment of {be} not resolved; using its declared prob")
        value = prob_value(self.model, Prob(event, given), remap,
                           engine=self.engine, max_leaves=self.max_leaves)
        return value, resolved

    def metric(self, term: Metric, env: AssumptionEnv, strategy) -> tuple[float, bool]:
        dom = get_domain(term.domain)
        remap = {**env.attr_remaps.get(dom.attr, {}), **dict(term.remap)}
        if strategy is None:
            return metric_value(self.model, term.domain, term.element, remap,
                                max_leaves=self.max_leaves), True
        cone = self.model.cone(term.element)
        steps = [s for s in cone if s in strategy]
        achieved = structure_eval(self.model, term.element, {s: int(s in strategy) for s in cone})
        return metric_of_attack(self.model, term.domain, steps, remap), achieved

    def attack_prob(self, term: AttackProb, env: AssumptionEnv, strategy) -> float:
        remap = {**env.attack_prob_remap, **dict(term.remap)}
        return attack_success_probability(self.model, term.element, remap, strategy,
                                          engine=self.engine, max_leaves=self.max_leaves)

    def value(self, term, env: AssumptionEnv, strategy=None) -> float:
        if isinstance(term, Prob):
            value, resolved = self.prob(term, env, strategy)
            self.trace.append({"formula": format_formula(term), "value": value,
                               "attachments": resolved})
            return value
        if isinstance(term, Metric):
            value, _ = self.metric(term, env, strategy)
            self.trace.append({"formula": format_formula(term), "value": value})
            return value
        if isinstance(term, AttackProb):
            value = self.attack_prob(term, env, strategy)
            self.trace.append({"formula": format_formula(term), "value": value})
            return value
        raise FormulaError(f"not a term: {type(term).__name__}")

    # -- formulas -----------------------------------------------------------

    def budgets(self, budgets, env: AssumptionEnv, strategy, scope) -> bool:
        ok = True
        for budget in budgets:
            if strategy is None:
                raise FormulaError(f"budget {budget} needs an existential query")
            value, achieved = self.metric(Metric(budget.domain, budget.element), env, strategy)
            holds = achieved and compare(value, budget.cmp, budget.bound, self.tol)
            self.trace.append({"budget": str(budget), "scope": scope, "value": value,
                               "achieved": achieved, "holds": holds})
            ok &= holds
        return ok

    def check(self, phi, env: AssumptionEnv, strategy, scope=None) -> bool:
        if isinstance(phi, Compare):
            term = phi.term
            entry = {"formula": format_formula(phi), "scope": scope}
            if isinstance(term, Prob):
                value, resolved = self.prob(term, env, strategy)
                holds = compare(value, phi.cmp, phi.bound, self.tol)
                entry["attachments"] = resolved
            elif isinstance(term, Metric):
                value, achieved = self.metric(term, env, strategy)
                holds = achieved and compare(value, phi.cmp, phi.bound, self.tol)
                if strategy is not None:
                    entry["achieved"] = achieved
            elif isinstance(term, AttackProb):
                value = self.attack_prob(term, env, strategy)
                holds = compare(value, phi.cmp, phi.bound, self.tol)
            else:
                raise FormulaError(f"not a term: {type(term).__name__}")
            entry.update(value=value, holds=holds)
            self.trace.append(entry)
            return holds
        if isinstance(phi, Atom):
            if self.model[phi.element].side is not Side.ATTACK or strategy is None:
                raise FormulaError(f"atom {phi.element} is only meaningful for attack steps "
                                   "under an existential strategy")
            cone = self.model.cone(phi.element)
            return structure_eval(self.model, phi.element, {s: int(s in strategy) for s in cone})
        if isinstance(phi, Not):
            return not self.check(phi.arg, env, strategy, scope)
        if isinstance(phi, And):
            return self.check(phi.left, env, strategy, scope) & self.check(phi.right, env, strategy, scope)
        if isinstance(phi, Or):
            return self.check(phi.left, env, strategy, scope) | self.check(phi.right, env, strategy, scope)
        if isinstance(phi, Implies):
            return (not self.check(phi.left, env, strategy, scope)) | self.check(phi.right, env, strategy, scope)
        if isinstance(phi, Evidence):
            inner = AssumptionEnv(boolean_evidence=dict(phi.evidence))
            return self.check(phi.arg, merge_envs(env, inner), strategy, scope)
        if isinstance(phi, Remapped):
            inner = AssumptionEnv(prob_remap=dict(phi.remap))
            return self.check(phi.arg, merge_envs(env, inner), strategy, scope)
        if isinstance(phi, Decorated):
            named = self.named(phi.name)
            ok = self.budgets(named.budgets, env, strategy, phi.name)
            inner = dataclasses.replace(named, budgets=())
            return ok & self.check(phi.arg, merge_envs(env, inner), strategy, phi.name)
        raise FormulaError(f"unsupported in joint queries: {type(phi).__name__}")


def strategies(model: TreeModel, *, max_leaves: int | None = None):
    """Every subset of attack steps, in lexicographic vector order."""
    steps = model.leaves(Side.ATTACK)
    limit = DEFAULT_MAX_LEAVES if max_leaves is None else max_leaves
    if len(steps) > limit:
        raise GuardExceededError(len(steps), limit)
    for index in range(1 << len(steps)):
        yield StatusVector.from_index(steps, index).failed


def eval_joint(model: TreeModel, query: JointQuery, *, engine: str = "auto",
               max_leaves: int | None = None, tol: float = 1e-9) -> JointResult:
    ev = _Evaluator(model, query, engine, max_leaves, tol)
    env = query.env_global
    if query.mode == "compute":
        if query.existential or env.budgets:
            raise FormulaError("compute queries cannot quantify over strategies")
        value = ev.value(query.body, env)
        return JointResult(value=value, trace=ev.trace, warnings=sorted(ev.warnings))

    if not query.existential:
        if env.budgets:
            raise FormulaError("budgets require an existential query")
        holds = ev.check(query.body, env, None)
        return JointResult(verdict=holds, trace=ev.trace, warnings=sorted(ev.warnings))

    sweep = []
    witness = None
    witness_trace: list[dict] = []
    for strategy in strategies(model, max_leaves=max_leaves):
        ev.trace = []
        holds = ev.budgets(env.budgets, env, strategy, None)
        holds &= ev.check(query.body, env, strategy)
        sweep.append({"strategy": sorted(strategy), "holds": holds, "trace": ev.trace})
        if holds:
            candidate = tuple(sorted(strategy))
            if witness is None or (len(candidate), candidate) < (len(witness), witness):
                witness, witness_trace = candidate, ev.trace
    return JointResult(verdict=witness is not None, trace=witness_trace, witness=witness,
                       sweep=sweep, warnings=sorted(ev.warnings))

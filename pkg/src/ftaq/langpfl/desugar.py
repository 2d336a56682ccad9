"""Translate a parsed script into an engine query for a given model.

The payload decides the engine:

* ``MCS``/``MPS``/``indep`` and bare fault-side elements go to the Boolean
  engine (``bfl``);
* ``P[...]`` comparisons go to the probabilistic engine (``pfl``), or to the
  joint engine when an event reaches an attached basic event, when decorators
  or budgets are used, or when attack-side assumptions must feed the result;
* metric comparisons and bare attack steps go to the attack engine (``atm``).

Assumptions become evidence, probability remaps, attribute remaps or budgets
depending on the kind of element they target.  Anything that would have no
effect on the chosen engine is rejected rather than dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import DesugarError
from ..joint import AssumptionEnv, Budget, JointQuery
from ..logic import (And, Atom, AttackProb, Attachment, Compare, Decorated, Evidence, Exists,
                     Forall, Implies, Indep, Mcs, Metric, Mps, Not, Or, Prob, Remapped, conj,
                     format_formula)
from ..model import Side, TreeModel
from ..pfl import event_support
from .printer import format_expr, format_statement
from .syntax import (BareAssumption, BinaryOp, Comparison, DecoratorUse, Ident, IndepAtom,
                     MetricTerm, Pos, ProbTerm, Quantified, Script, SetBool, SetMetric, SetProb,
                     SetsAtom, UnaryOp)

ENGINES = ("bfl", "pfl", "atm", "joint")
# attribute carried by each metric domain
DOMAIN_ATTR = {"cost": "cost", "partime": "time", "seqtime": "time", "skill": "skill"}


@dataclass(frozen=True)
class Query:
    """An engine-ready query.

    ``kind`` is ``verdict`` (check), ``value`` (compute) or ``sets``
    (computeall).  ``formula`` is a logic AST, or a :class:`JointQuery` when
    ``engine == "joint"``.
    """

    engine: str
    kind: str
    formula: object
    side: Side = Side.FAULT
    source: str = ""
    span: Pos = field(default=Pos(0, 0), compare=False)

    def describe(self) -> str:
        if isinstance(self.formula, JointQuery):
            body = format_formula(self.formula.body)
            return f"exists strategy: {body}" if self.formula.existential else body
        return format_formula(self.formula)


def _walk(expr):
    yield expr
    if isinstance(expr, (UnaryOp, Quantified, DecoratorUse)):
        yield from _walk(expr.arg)
    elif isinstance(expr, BinaryOp):
        yield from _walk(expr.left)
        yield from _walk(expr.right)
    elif isinstance(expr, Comparison):
        yield from _walk(expr.term)


class _Desugarer:
    def __init__(self, script: Script, model: TreeModel):
        self.script = script
        self.model = model
        self.origin = script.origin
        self.settings = [s for s in script.statements if not isinstance(s, BareAssumption)]

    def error(self, message: str, pos: Pos) -> DesugarError:
        if pos.line == 0:
            return DesugarError(message, origin=self.origin)
        return DesugarError(message, pos.line, pos.col, self.origin)

    # -- identifier and side checks ---------------------------------------------

    def node(self, element: str, pos: Pos):
        if element not in self.model.nodes:
            raise self.error(f"unknown identifier {element!r}", pos)
        return self.model.nodes[element]

    def side(self, element: str, pos: Pos) -> Side:
        return self.node(element, pos).side

    def require_side(self, element: str, side: Side, pos: Pos, what: str) -> None:
        if self.side(element, pos) is not side:
            raise self.error(f"{what} needs a {side.value} element; {element} is on the "
                             f"{self.model[element].side.value}", pos)

    def check_expr(self, expr) -> dict:
        """Resolve every identifier and report which kinds of atoms occur."""
        info = {"prob": [], "metric": [], "sets": [], "fault": [], "attack": [],
                "decorators": [], "quantifiers": []}
        for e in _walk(expr):
            if isinstance(e, Ident):
                info[self.side(e.name, e.pos).name.lower()].append(e)
            elif isinstance(e, ProbTerm):
                self.require_side(e.event, Side.FAULT, e.pos, "P[...]")
                if e.given is not None:
                    self.require_side(e.given, Side.FAULT, e.pos, "P[...|...]")
                info["prob"].append(e)
            elif isinstance(e, MetricTerm):
                self.require_side(e.element, Side.ATTACK, e.pos, "an attack metric")
                info["metric"].append(e)
            elif isinstance(e, SetsAtom):
                self.require_side(e.element, Side.FAULT, e.pos, e.kind)
                info["sets"].append(e)
            elif isinstance(e, IndepAtom):
                self.require_side(e.first, Side.FAULT, e.pos, "indep")
                self.require_side(e.second, Side.FAULT, e.pos, "indep")
                info["sets"].append(e)
            elif isinstance(e, DecoratorUse):
                info["decorators"].append(e)
            elif isinstance(e, Quantified):
                info["quantifiers"].append(e)
        return info

    def check_statement(self, stmt) -> None:
        if isinstance(stmt, BareAssumption):
            return
        self.node(stmt.element, stmt.pos)
        if isinstance(stmt, SetMetric) and self.model[stmt.element].side is not Side.ATTACK:
            raise self.error(f"metric statement targets fault-side element {stmt.element}", stmt.pos)
        if isinstance(stmt, SetProb):
            node = self.model[stmt.element]
            if node.side is Side.FAULT and not node.is_leaf and stmt.value not in (0.0, 1.0):
                raise self.error(f"set_prob on gate {stmt.element} must be 0 or 1; a gate's "
                                 "probability is derived from its children", stmt.pos)

    # -- translation ------------------------------------------------------------

    def translate(self, expr, attach: bool = False):
        if isinstance(expr, Ident):
            return Atom(expr.name)
        if isinstance(expr, Comparison):
            return Compare(self.term(expr.term, attach), expr.cmp, expr.bound)
        if isinstance(expr, (ProbTerm, MetricTerm)):
            raise self.error(f"{format_expr(expr)} is a value; compare it with a bound "
                             "(or use compute:)", expr.pos)
        if isinstance(expr, SetsAtom):
            return (Mcs if expr.kind == "MCS" else Mps)(expr.element)
        if isinstance(expr, IndepAtom):
            return Indep(expr.first, expr.second)
        if isinstance(expr, UnaryOp):
            return Not(self.translate(expr.arg, attach))
        if isinstance(expr, BinaryOp):
            cls = {"and": And, "or": Or, "=>": Implies}[expr.op]
            return cls(self.translate(expr.left, attach), self.translate(expr.right, attach))
        if isinstance(expr, Quantified):
            cls = Exists if expr.quantifier == "exists" else Forall
            return cls(self.translate(expr.arg, attach))
        if isinstance(expr, DecoratorUse):
            return Decorated(expr.name, self.translate(expr.arg, attach))
        raise self.error(f"unsupported expression {type(expr).__name__}", getattr(expr, "pos", Pos(0, 0)))

    def term(self, term, attach: bool):
        if isinstance(term, ProbTerm):
            event = Atom(term.event)
            given = None if term.given is None else Atom(term.given)
            attached = ()
            if attach:
                attached = tuple(Attachment(be) for be in self.attachments(term))
            return Prob(event, given, attached)
        if term.domain == "prob":
            return AttackProb(term.element, self.attack_prob_remap)
        return Metric(term.domain, term.element, self.attr_remaps.get(DOMAIN_ATTR[term.domain], {}))

    def attachments(self, term: ProbTerm) -> list[str]:
        support = set(event_support(self.model, Atom(term.event)))
        if term.given is not None:
            support |= set(event_support(self.model, Atom(term.given)))
        return sorted(be for be in self.model.attachments if be in support)

    # -- assumptions ------------------------------------------------------------

    def env_from(self, statements, engine: str, scope: str) -> AssumptionEnv:
        evidence, prob, attack_prob = {}, {}, {}
        attrs: dict[str, dict[str, float]] = {}
        budgets = []
        for stmt in statements:
            if isinstance(stmt, BareAssumption):
                raise self.error(f"only set statements are allowed in {scope}", stmt.pos)
            node = self.model[stmt.element]
            fault = node.side is Side.FAULT
            if isinstance(stmt, SetBool):
                if fault:
                    self.allow(engine, ("bfl", "pfl", "joint"), stmt)
                    evidence[stmt.element] = stmt.value
                elif engine == "atm":
                    evidence[stmt.element] = stmt.value
                else:
                    self.allow(engine, ("joint",), stmt)
                    attack_prob[stmt.element] = float(stmt.value)
            elif isinstance(stmt, SetProb):
                if fault and not node.is_leaf:
                    self.allow(engine, ("bfl", "pfl", "joint"), stmt)
                    evidence[stmt.element] = int(stmt.value)
                elif fault:
                    self.allow(engine, ("pfl", "joint"), stmt)
                    prob[stmt.element] = stmt.value
                else:
                    self.allow(engine, ("atm", "joint"), stmt)
                    attack_prob[stmt.element] = stmt.value
            elif stmt.op == "=":
                self.allow(engine, ("atm", "joint"), stmt)
                attrs.setdefault(DOMAIN_ATTR[stmt.domain], {})[stmt.element] = stmt.value
            else:
                self.allow(engine, ("atm", "joint"), stmt)
                budgets.append(Budget(stmt.domain, stmt.element, stmt.op, stmt.value))
        return AssumptionEnv(evidence, prob, attack_prob, attrs, tuple(budgets))

    def require_effect(self, info, env: AssumptionEnv) -> None:
        """Attack remaps must feed some term or budget of the query."""
        domains = {t.domain for t in info["metric"]}
        attrs = {DOMAIN_ATTR[d] for d in domains if d in DOMAIN_ATTR}
        attrs |= {DOMAIN_ATTR[b.domain] for b in env.budgets}
        for stmt in self.settings:
            if isinstance(stmt, SetProb) and "prob" not in domains:
                if self.model[stmt.element].side is Side.ATTACK:
                    raise self.error(f"statement '{_stmt_text(stmt)}' has no effect: the query "
                                     "uses no Prob[...] term", stmt.pos)
            if isinstance(stmt, SetMetric) and stmt.op == "=" and DOMAIN_ATTR[stmt.domain] not in attrs:
                raise self.error(f"statement '{_stmt_text(stmt)}' has no effect: the query uses "
                                 f"no metric over {DOMAIN_ATTR[stmt.domain]}", stmt.pos)

    def allow(self, engine: str, engines, stmt) -> None:
        if engine not in engines:
            label = {"bfl": "Boolean", "pfl": "probabilistic", "atm": "attack-metric"}[engine]
            raise self.error(f"statement '{_stmt_text(stmt)}' has no effect on a {label} query", stmt.pos)

    # -- driver -------------------------------------------------------------------

    def run(self) -> Query:
        script = self.script
        for stmt in script.statements:
            self.check_statement(stmt)
            if isinstance(stmt, BareAssumption):
                self.check_expr(stmt.expr)
        for block in script.decorators:
            for stmt in block.statements:
                self.check_statement(stmt)
        bare = [s for s in script.statements if isinstance(s, BareAssumption)]
        full = script.payload
        for stmt in reversed(bare):
            full = BinaryOp("=>", stmt.expr, full, stmt.pos)
        info = self.check_expr(full)
        declared = {b.name: b for b in script.decorators}
        used = set()
        for use in info["decorators"]:
            if use.name not in declared:
                raise self.error(f"decorator @{use.name} is not declared under assume:", use.pos)
            used.add(use.name)
        for name, block in declared.items():
            if name not in used:
                raise self.error(f"decorator @{name} is declared but never used", block.pos)

        engine = self.choose_engine(info)
        source = format_expr(script.payload)
        if engine == "joint":
            formula = self.joint(info, bare)
            kind = {"check": "verdict", "compute": "value"}.get(script.kind)
            if kind is None:
                raise self.error("computeall: cannot be combined with probabilities", script.pos)
            return Query("joint", kind, formula, Side.FAULT, source, script.pos)

        env = self.env_from(self.settings, engine, "assume:")
        self.attack_prob_remap = env.attack_prob_remap
        self.attr_remaps = env.attr_remaps
        if engine == "atm":
            self.require_effect(info, env)
        side = Side.ATTACK if engine == "atm" else Side.FAULT
        if script.kind == "compute":
            formula = self.compute(engine, env, bare)
            return Query(engine, "value", formula, side, source, script.pos)
        if script.kind == "computeall":
            formula = self.compute_all(engine, env, bare, info)
            return Query(engine, "sets", formula, side, source, script.pos)
        if engine == "pfl":
            formula = self.pfl_check(env, full)
        else:
            formula = self.closed_check(engine, env, full, info)
        return Query(engine, "verdict", formula, side, source, script.pos)

    def choose_engine(self, info) -> str:
        first = lambda key: info[key][0].pos  # noqa: E731
        statements = list(self.script.statements)
        for block in self.script.decorators:
            statements += block.statements
        attack_statements = [s for s in statements if not isinstance(s, BareAssumption)
                             and self.model[s.element].side is Side.ATTACK]
        if info["sets"]:
            for key, what in (("prob", "P[...]"), ("metric", "attack metrics"),
                              ("attack", "attack steps"), ("decorators", "decorators")):
                if info[key]:
                    raise self.error(f"mixed engines: MCS/MPS/indep cannot be combined with {what}",
                                     first(key))
            return "bfl"
        if info["prob"]:
            if info["fault"]:
                raise self.error(f"bare fault element {info['fault'][0].name} inside a probabilistic "
                                 "query; use P[...] with a bound", first("fault"))
            attached = any(self.attachments(t) for t in info["prob"])
            if (attached or info["decorators"] or info["metric"] or info["attack"]
                    or attack_statements):
                return "joint"
            return "pfl"
        if info["metric"] or info["attack"]:
            if info["fault"]:
                raise self.error("mixed engines: fault-side and attack-side elements in one "
                                 "Boolean formula", first("fault"))
            return "joint" if info["decorators"] else "atm"
        if info["decorators"]:
            raise self.error("decorators apply to probability or metric comparisons", first("decorators"))
        return "bfl"

    def compute(self, engine: str, env: AssumptionEnv, bare):
        payload = self.script.payload
        if bare:
            raise self.error("compute: takes no bare assumptions", bare[0].pos)
        if isinstance(payload, ProbTerm) and engine == "pfl":
            term = self.term(payload, attach=False)
            if env.boolean_evidence:
                term = _evidence_term(term, env.boolean_evidence)
            return Remapped(term, env.prob_remap) if env.prob_remap else term
        if isinstance(payload, MetricTerm) and engine == "atm":
            if env.budgets:
                raise self.error("compute: cannot use a metric budget", self.script.pos)
            term = self.term(payload, attach=False)
            return Evidence(term, env.boolean_evidence) if env.boolean_evidence else term
        raise self.error("compute: needs a single term such as P[X] or Cost[X]",
                         getattr(payload, "pos", self.script.pos))

    def compute_all(self, engine: str, env: AssumptionEnv, bare, info):
        if info["quantifiers"]:
            raise self.error("computeall: expression must be quantifier-free", info["quantifiers"][0].pos)
        if engine == "pfl":
            raise self.error("computeall: lists failed sets; probabilities belong in check: or compute:",
                             info["prob"][0].pos)
        if env.budgets:
            raise self.error("computeall: cannot use a metric budget", self.script.pos)
        body = self.translate(self.script.payload)
        # bare assumptions filter the listed vectors
        if bare:
            body = conj(*[self.translate(s.expr) for s in bare], body)
        evidence = env.boolean_evidence
        if not evidence:
            return body
        # pin evidenced leaves so the listed sets show their assumed status
        pins = [Atom(e) if v else Not(Atom(e)) for e, v in sorted(evidence.items())
                if self.model[e].is_leaf]
        return conj(Evidence(body, evidence), *pins)

    def pfl_check(self, env: AssumptionEnv, full):
        formula = self.translate(full)
        if env.boolean_evidence:
            formula = _evidence_probs(formula, env.boolean_evidence)
        return Remapped(formula, env.prob_remap) if env.prob_remap else formula

    def closed_check(self, engine: str, env: AssumptionEnv, full, info):
        payload = self.script.payload
        budgets = [Compare(Metric(b.domain, b.element, self.attr_remaps.get(DOMAIN_ATTR[b.domain], {})),
                           b.cmp, b.bound) for b in env.budgets]
        if isinstance(payload, Quantified):
            quantifier = Exists if payload.quantifier == "exists" else Forall
            inner = payload.arg
            for stmt in reversed([s for s in self.script.statements if isinstance(s, BareAssumption)]):
                inner = BinaryOp("=>", stmt.expr, inner, stmt.pos)
            body = self.translate(inner)
        else:
            has_atoms = info["fault"] or info["attack"] or info["sets"] or budgets
            quantifier = Forall if has_atoms else None
            body = self.translate(full)
        if budgets:
            if quantifier is Forall and isinstance(payload, Quantified):
                raise self.error("metric budgets need an existential check", payload.pos)
            quantifier = Exists
            body = conj(*budgets, body)
        if env.boolean_evidence:
            body = Evidence(body, env.boolean_evidence)
        return body if quantifier is None else quantifier(body)

    def joint(self, info, bare) -> JointQuery:
        script = self.script
        # the joint evaluator applies environment remaps itself
        self.attack_prob_remap = {}
        self.attr_remaps = {}
        env = self.env_from(self.settings, "joint", "assume:")
        named = {b.name: self.env_from(b.statements, "joint", f"decorator @{b.name}")
                 for b in script.decorators}
        budgets = bool(env.budgets) or any(e.budgets for e in named.values())
        payload = script.payload
        if script.kind == "compute":
            if not isinstance(payload, ProbTerm):
                raise self.error("compute: needs a single term such as P[X]",
                                 getattr(payload, "pos", script.pos))
            if bare:
                raise self.error("compute: takes no bare assumptions", bare[0].pos)
            if budgets:
                raise self.error("compute: cannot use a metric budget", script.pos)
            return JointQuery(self.term(payload, attach=True), env, named, "compute", False)
        existential = budgets
        if isinstance(payload, Quantified):
            if payload.quantifier == "forall":
                raise self.error("forall is not supported in joint queries; strategies are "
                                 "quantified existentially", payload.pos)
            existential = True
            payload = payload.arg
        for q in info["quantifiers"]:
            if q is not script.payload:
                raise self.error("a joint query allows a single leading exists", q.pos)
        if info["attack"] and not existential:
            raise self.error(f"attack step {info['attack'][0].name} needs an exists over strategies",
                             info["attack"][0].pos)
        for stmt in reversed(bare):
            payload = BinaryOp("=>", stmt.expr, payload, stmt.pos)
        body = self.translate(payload, attach=True)
        return JointQuery(body, env, named, "check", existential)


def _stmt_text(stmt) -> str:
    return format_statement(stmt)


def _evidence_term(term: Prob, evidence) -> Prob:
    given = None if term.given is None else Evidence(term.given, evidence)
    return Prob(Evidence(term.event, evidence), given, term.attach)


def _evidence_probs(phi, evidence):
    if isinstance(phi, Compare):
        return Compare(_evidence_term(phi.term, evidence), phi.cmp, phi.bound)
    if isinstance(phi, Not):
        return Not(_evidence_probs(phi.arg, evidence))
    if isinstance(phi, (And, Or, Implies)):
        return type(phi)(_evidence_probs(phi.left, evidence), _evidence_probs(phi.right, evidence))
    return phi


def desugar(script: Script, model: TreeModel) -> Query:
    """Engine query for ``script`` on ``model``; raises :class:`DesugarError`."""
    return _Desugarer(script, model).run()

"""Hand-built counterparts of the bundled water-network scripts.

Each pair couples a script from the bundled corpus with the formula it is
meant to express, written directly as an engine AST, plus an oracle that
computes the expected verdict or value by plain enumeration.  The models are
small random variants of the water network that keep every element name the
scripts mention.
"""

from __future__ import annotations

import dataclasses
import itertools
import random

from ftaq.bfl import all_sat, check_closed
from ftaq.joint import JointQuery, eval_joint
from ftaq.langpfl import desugar, parse_script
from ftaq.logic import (And, Atom, Attachment, Compare, Evidence, Exists, Forall, Implies, Mcs,
                        Metric, Mps, Prob, Remapped)
from ftaq.model import Side, TreeModel, attack_step, basic_event, gate
from ftaq.pfl import eval_pfl, prob_value
from ftaq.runner import run_query

from conftest import SCRIPTS
from randmodels import evaluate, truth, vectors

FAULT_GATES = {
    "IoC": ("Threat", "Pat"),
    "Pat": ("BPG", "LP"),
    "MD": ("MS", "CMS"),
    "UC": ("Threat", "CCo"),
    "Dr": ("DL", "DBR"),
    "DBR": ("DBP", "CRD", "OM"),
    "Pe": ("PPI", "CMS"),
    "BiG": ("OM", "MS"),
}
ATTACK_GATES = {
    "CAT": ("IGP", "EE"),
    "IGP": ("CIn", "SUC"),
    "EE": ("GA", "CCh"),
    "GA": ("UCL", "BUA"),
    "BUA": ("UPL", "PUU"),
}
FAULT_LEAVES = ("BPG", "CCo", "CMS", "CRD", "DBP", "DL", "LP", "MS", "OM", "PPI", "Threat")
ATTACK_LEAVES = ("CCh", "CIn", "PUU", "SUC", "UCL", "UPL")


def water_like(rng: random.Random, attached: bool = True) -> TreeModel:
    """Random water-shaped model: fixed names, random gate types and values."""
    top_op = "and" if rng.random() < 0.2 else "or"
    nodes = {"WQF": gate("WQF", top_op, ["IoC", "MD", "UC", "Dr", "Pe", "BiG"])}
    for name, children in FAULT_GATES.items():
        nodes[name] = gate(name, rng.choice(("and", "or")), children)
    for leaf in FAULT_LEAVES:
        nodes[leaf] = basic_event(leaf, round(10 ** rng.uniform(-4.5, -1.3), 5))
    if not attached:
        return TreeModel("WATER_LIKE", nodes, "WQF")
    for name, children in ATTACK_GATES.items():
        nodes[name] = gate(name, rng.choice(("and", "or")), children, Side.ATTACK)
    for leaf in ATTACK_LEAVES:
        nodes[leaf] = attack_step(leaf, prob=round(rng.random(), 3), cost=float(rng.randint(0, 15)),
                                  time=float(rng.randint(0, 10)), skill=float(rng.randint(1, 4)))
    return TreeModel("WATER_LIKE", nodes, "WQF", attachments={"Threat": "CAT"})


def fault_only(model: TreeModel) -> TreeModel:
    nodes = {n: node for n, node in model.nodes.items() if node.side is Side.FAULT}
    return dataclasses.replace(model, nodes=nodes, attachments={})


def load_script(name: str):
    path = SCRIPTS / f"{name}.lpfl"
    return parse_script(path.read_text(encoding="utf-8"), str(path))


# -- oracles -------------------------------------------------------------------


def _value(model, nid, v, cut):
    """Structure function where nodes in ``cut`` read their value from ``v``."""
    if nid in cut:
        return bool(v[nid])
    node = model.nodes[nid]
    if not node.children:
        return bool(v[nid])
    values = [_value(model, c, v, cut) for c in node.children]
    return all(values) if node.op == "and" else any(values)


def attack_probability(model, root, override=None, strategy=None) -> float:
    """Success probability of ``root``; ``override`` may price gates as single steps."""
    override = dict(override or {})
    variables, stack, seen = [], [root], set()
    while stack:
        nid = stack.pop()
        if nid in seen:
            continue
        seen.add(nid)
        if nid in override or not model.nodes[nid].children:
            variables.append(nid)
        else:
            stack.extend(model.nodes[nid].children)
    variables.sort()
    probs = {}
    for x in variables:
        p = override[x] if x in override else model.nodes[x].attrs.prob
        if strategy is not None and x not in strategy:
            p = 0.0
        probs[x] = p
    total = 0.0
    for v in vectors(variables):
        if _value(model, root, v, set(override)):
            w = 1.0
            for x in variables:
                w *= probs[x] if v[x] else 1.0 - probs[x]
            total += w
    return total


def fault_probability(model, predicate, remap=None, threat=None) -> float:
    """Probability of ``predicate(v)`` with ``Threat`` optionally given probability ``threat``."""
    leaves = sorted(model.leaves(Side.FAULT))
    probs = {b: model.nodes[b].attrs.prob for b in leaves}
    probs.update(remap or {})
    if threat is not None:
        probs["Threat"] = threat
    total = 0.0
    for v in vectors(leaves):
        if predicate(v):
            w = 1.0
            for b in leaves:
                w *= probs[b] if v[b] else 1.0 - probs[b]
            total += w
    return total


def linear_in_threat(model, predicate):
    """``t -> Pr`` as an affine function of the Threat probability."""
    p0 = fault_probability(model, predicate, threat=0.0)
    p1 = fault_probability(model, predicate, threat=1.0)
    return lambda t: t * p1 + (1.0 - t) * p0


def _achieves(model, root, strategy) -> bool:
    return evaluate(model, root, {s: int(s in strategy) for s in model.leaves(Side.ATTACK)})


def _cost(model, element, strategy) -> float:
    steps = {s for s in model.cone(element)} & set(strategy)
    return sum(model.nodes[s].attrs.cost for s in steps)


def _strategies(model):
    steps = model.leaves(Side.ATTACK)
    for r in range(len(steps) + 1):
        for combo in itertools.combinations(steps, r):
            yield frozenset(combo)


# -- pairs ---------------------------------------------------------------------

TOL = 1e-9
THREAT = Attachment("Threat")


@dataclasses.dataclass
class Outcome:
    script: object
    formula: object
    oracle: object

    def agree(self) -> bool:
        if isinstance(self.script, float) or isinstance(self.formula, float):
            return abs(self.script - self.formula) <= TOL and abs(self.formula - self.oracle) <= TOL
        return self.script == self.formula == self.oracle


def _script_result(model, name):
    return run_query(model, desugar(load_script(name), model))


def pair_mcs_filter(model) -> Outcome:
    phi = And(And(Mcs("WQF"), Atom("OM")), Atom("MS"))
    leaves = model.leaves(Side.FAULT)
    expected = sorted((sorted(b for b in v if v[b]) for v in vectors(leaves) if truth(model, phi, v)),
                      key=lambda s: (len(s), s))
    return Outcome(_script_result(model, "mcs_filter")["result"],
                   [sorted(s) for s in all_sat(model, phi)], expected)


def pair_path_set_evidence(model) -> Outcome:
    body = Evidence(Mps("Dr"), {"DBP": 1, "CRD": 1})
    expected = any(truth(model, body, v) for v in vectors(model.leaves(Side.FAULT)))
    return Outcome(_script_result(model, "path_set_evidence")["result"],
                   check_closed(model, Exists(body)).holds, expected)


def pair_forall_evidence(model) -> Outcome:
    body = Implies(And(Atom("BPG"), Atom("LP")), Atom("WQF"))
    expected = all(truth(model, body, v) for v in vectors(model.leaves(Side.FAULT)))
    return Outcome(_script_result(model, "forall_evidence")["result"],
                   check_closed(model, Forall(body)).holds, expected)


def _with_threat(model, psi_fn):
    """Evaluate a hand-built probability formula, resolving Threat when attached."""
    if model.attachments:
        return eval_joint(model, JointQuery(psi_fn((THREAT,)))).verdict
    return eval_pfl(model, psi_fn(())).holds


def _threat_prob(model, override=None):
    return attack_probability(model, "CAT", override) if model.attachments else None


def pair_threshold_evidence(model) -> Outcome:
    formula = _with_threat(model, lambda att: Compare(Prob(Evidence(Atom("WQF"), {"Pat": 1}), attach=att), "<", 0.01))
    value = fault_probability(model, lambda v: evaluate(model, "WQF", v, {"Pat": 1}),
                              threat=_threat_prob(model))
    return Outcome(_script_result(model, "threshold_evidence")["result"], formula, value < 0.01 - TOL)


def pair_whatif_compute(model) -> Outcome:
    formula = prob_value(model, Prob(Atom("Dr")), {"OM": 0.15})
    value = fault_probability(model, lambda v: evaluate(model, "Dr", v), {"OM": 0.15})
    return Outcome(_script_result(model, "whatif_compute")["result"], formula, value)


def pair_certain_failure(model) -> Outcome:
    # Pe is a gate in the network, so its certain failure becomes evidence
    formula = _with_threat(model, lambda att: Remapped(
        Compare(Prob(Evidence(Atom("WQF"), {"Pe": 1}), attach=att), ">", 0.015), {"DL": 1.0}))
    value = fault_probability(model, lambda v: evaluate(model, "WQF", v, {"Pe": 1}), {"DL": 1.0},
                              threat=_threat_prob(model))
    return Outcome(_script_result(model, "certain_failure")["result"], formula, value > 0.015 + TOL)


def _scenario(bua, ucl):
    return (Attachment("Threat", {"BUA": bua, "UCL": ucl}),)


def pair_attack_scenario(model) -> Outcome:
    att = _scenario(0.12, 0.04)
    psi = And(Compare(Prob(Atom("WQF"), attach=att), "<", 0.010),
              Compare(Prob(Atom("UC"), attach=att), "<", 0.005))
    formula = eval_joint(model, JointQuery(psi)).verdict
    t = attack_probability(model, "CAT", {"BUA": 0.12, "UCL": 0.04})
    wqf = linear_in_threat(model, lambda v: evaluate(model, "WQF", v))(t)
    uc = linear_in_threat(model, lambda v: evaluate(model, "UC", v))(t)
    return Outcome(_script_result(model, "attack_scenario")["result"], formula,
                   wqf < 0.010 - TOL and uc < 0.005 - TOL)


def pair_decorated_scenarios(model) -> Outcome:
    psi = And(Compare(Prob(Atom("WQF"), attach=_scenario(0.12, 0.04)), "<", 0.08),
              Compare(Prob(Atom("WQF"), attach=_scenario(0.34, 0.10)), "<", 0.08))
    formula = eval_joint(model, JointQuery(psi)).verdict
    wqf = linear_in_threat(model, lambda v: evaluate(model, "WQF", v))
    expected = all(wqf(attack_probability(model, "CAT", {"BUA": b, "UCL": u})) < 0.08 - TOL
                   for b, u in ((0.12, 0.04), (0.34, 0.10)))
    return Outcome(_script_result(model, "decorated_scenarios")["result"], formula, expected)


def _sweep(model, condition):
    holding = [tuple(sorted(s)) for s in _strategies(model) if condition(s)]
    return min(holding, key=lambda t: (len(t), t)) if holding else None


def _witness(result):
    witness = result["witness"]
    return None if witness is None else tuple(witness["strategy"])


def pair_budgeted_exists(model) -> Outcome:
    psi = And(Compare(Metric("cost", "CAT"), "<=", 30),
              Compare(Prob(Atom("WQF"), attach=(THREAT,)), ">=", 0.12))
    result = eval_joint(model, JointQuery(psi, existential=True))
    wqf = linear_in_threat(model, lambda v: evaluate(model, "WQF", v))

    def condition(s):
        return (_achieves(model, "CAT", s) and _cost(model, "CAT", s) <= 30
                and wqf(attack_probability(model, "CAT", strategy=s)) >= 0.12 - TOL)

    script = _script_result(model, "budgeted_exists")
    return Outcome((script["result"], _witness(script)), (result.verdict, result.witness),
                   (_sweep(model, condition) is not None, _sweep(model, condition)))


def pair_decorated_budgets(model) -> Outcome:
    psi = And(And(Compare(Metric("cost", "IGP"), "<=", 12),
                  Compare(Prob(Atom("WQF"), attach=(THREAT,)), ">=", 0.12)),
              And(Compare(Metric("cost", "EE"), "<=", 5),
                  Compare(Prob(Atom("UC"), attach=(THREAT,)), ">=", 0.08)))
    result = eval_joint(model, JointQuery(psi, existential=True))
    wqf = linear_in_threat(model, lambda v: evaluate(model, "WQF", v))
    uc = linear_in_threat(model, lambda v: evaluate(model, "UC", v))

    def condition(s):
        t = attack_probability(model, "CAT", strategy=s)
        return (_achieves(model, "IGP", s) and _cost(model, "IGP", s) <= 12
                and _achieves(model, "EE", s) and _cost(model, "EE", s) <= 5
                and wqf(t) >= 0.12 - TOL and uc(t) >= 0.08 - TOL)

    script = _script_result(model, "decorated_budgets")
    best = _sweep(model, condition)
    return Outcome((script["result"], _witness(script)), (result.verdict, result.witness),
                   (best is not None, best))


FAULT_PAIRS = {name: globals()[f"pair_{name}"] for name in (
    "mcs_filter", "path_set_evidence", "forall_evidence", "threshold_evidence", "whatif_compute",
    "certain_failure")}
JOINT_PAIRS = {name: globals()[f"pair_{name}"] for name in (
    "attack_scenario", "decorated_scenarios", "budgeted_exists", "decorated_budgets")}

import dataclasses
import itertools

import pytest

from ftaq.atm import attack_success_probability, metric_of_attack
from ftaq.errors import FormulaError, FtaqError, GuardExceededError
from ftaq.joint import (AssumptionEnv, Budget, JointQuery, eval_joint, merge_envs,
                        resolve_attachment, strategies)
from ftaq.logic import And, Atom, Attachment, Compare, Decorated, Metric, Prob
from ftaq.model import Side, basic_event
from ftaq.pfl import eval_pfl

from randmodels import brute_probability, evaluate

K = (Attachment("K"),)


def top_prob(cmp, bound):
    return Compare(Prob(Atom("TOP"), attach=K), cmp, bound)


def test_resolve_attachment_examples(jm):
    assert resolve_attachment(jm, "K", AssumptionEnv(attack_prob_remap={"b": 0.0, "c": 0.0})) == 0.0
    assert resolve_attachment(jm, "K") == pytest.approx(0.375)
    assert resolve_attachment(jm, "K", strategy={"a", "c"}) == pytest.approx(0.25)
    with pytest.raises(FormulaError):
        resolve_attachment(jm, "D")


def test_attachment_resolution(jm):
    result = eval_joint(jm, JointQuery(top_prob("<", 0.5)))
    assert result.verdict
    entry = result.trace[0]
    assert entry["attachments"]["K"] == pytest.approx(0.375)
    assert entry["value"] == pytest.approx(1 - 0.625 * 0.9)
    assert entry["value"] == pytest.approx(0.4375)


def test_attachment_matches_manual_substitution(jm):
    manual_nodes = dict(jm.nodes)
    manual_nodes["K"] = basic_event("K", attack_success_probability(jm, "R"))
    manual = dataclasses.replace(jm, nodes=manual_nodes)
    for bound in (0.3, 0.4375, 0.44, 0.5):
        for cmp in ("<", "<=", ">", ">=", "="):
            joint = eval_joint(jm, JointQuery(top_prob(cmp, bound))).verdict
            plain = eval_pfl(manual, Compare(Prob(Atom("TOP")), cmp, bound)).holds
            assert joint == plain


def test_decorators(jm):
    env_named = {"A1": AssumptionEnv(attack_prob_remap={"b": 0.0, "c": 0.0}), "A2": AssumptionEnv()}
    left = Decorated("A1", top_prob("<", 0.2))
    right = Decorated("A2", top_prob("<", 0.2))
    assert eval_joint(jm, JointQuery(left, env_named=env_named)).verdict
    assert not eval_joint(jm, JointQuery(right, env_named=env_named)).verdict
    result = eval_joint(jm, JointQuery(And(left, right), env_named=env_named))
    assert not result.verdict
    assert [e["value"] for e in result.trace] == pytest.approx([0.1, 0.4375])
    assert [e["scope"] for e in result.trace] == ["A1", "A2"]


def test_unresolved_decorator(jm):
    with pytest.raises(FtaqError):
        eval_joint(jm, JointQuery(Decorated("A9", top_prob("<", 0.2))))


def test_decorator_locality(jm):
    plain = top_prob("<", 0.5)
    scoped = Decorated("A1", top_prob("<", 0.2))
    env_named = {"A1": AssumptionEnv(attack_prob_remap={"a": 0.0})}
    alone = eval_joint(jm, JointQuery(plain)).trace
    together = eval_joint(jm, JointQuery(And(plain, scoped), env_named=env_named)).trace
    assert together[0] == alone[0]


def test_budget_example(jm):
    query = JointQuery(Compare(Prob(Atom("TOP"), attach=K), ">=", 0.4),
                       AssumptionEnv(budgets=(Budget("cost", "R", "<=", 13),)), existential=True)
    result = eval_joint(jm, query)
    assert result.verdict is False and result.witness is None
    assert len(result.sweep) == 8
    passing_budget = [e["strategy"] for e in result.sweep
                      if all(t["holds"] for t in e["trace"] if "budget" in t)]
    assert passing_budget == [["a", "c"]]
    (entry,) = [e for e in result.sweep if e["strategy"] == ["a", "c"]]
    assert entry["trace"][1]["value"] == pytest.approx(1 - 0.75 * 0.9)


def test_budget_witness(jm):
    query = JointQuery(Compare(Prob(Atom("TOP"), attach=K), ">=", 0.3),
                       AssumptionEnv(budgets=(Budget("cost", "R", "<=", 13),)), existential=True)
    result = eval_joint(jm, query)
    assert result.verdict and result.witness == ("a", "c")


def test_existential_matches_brute_force_sweep(jm):
    steps = jm.leaves(Side.ATTACK)
    for bound, limit in itertools.product((0.2, 0.3, 0.33, 0.4), (10, 13, 15, 18)):
        query = JointQuery(Compare(Prob(Atom("TOP"), attach=K), ">=", bound),
                           AssumptionEnv(budgets=(Budget("cost", "R", "<=", limit),)),
                           existential=True)
        expected = []
        for r in range(len(steps) + 1):
            for combo in itertools.combinations(steps, r):
                s = set(combo)
                status = {x: int(x in s) for x in steps}
                if not evaluate(jm, "R", status):
                    continue
                if metric_of_attack(jm, "cost", s) > limit:
                    continue
                probs = {x: (jm[x].attrs.prob if x in s else 0.0) for x in steps}
                k = brute_probability(jm, lambda v: evaluate(jm, "R", v), list(steps), probs)
                if 1 - (1 - k) * 0.9 >= bound - 1e-9:
                    expected.append(tuple(sorted(s)))
        result = eval_joint(jm, query)
        assert result.verdict == bool(expected)
        if expected:
            assert result.witness == min(expected, key=lambda t: (len(t), t))


def test_strategy_monotonicity(jm):
    steps = jm.leaves(Side.ATTACK)
    subsets = [frozenset(c) for r in range(4) for c in itertools.combinations(steps, r)]
    for small in subsets:
        for big in subsets:
            if small <= big:
                assert resolve_attachment(jm, "K", strategy=small) <= resolve_attachment(jm, "K", strategy=big) + 1e-12


def test_extra_budget_never_helps(jm):
    body = Compare(Prob(Atom("TOP"), attach=K), ">=", 0.3)
    one = (Budget("cost", "R", "<=", 15),)
    two = one + (Budget("partime", "R", "<=", 4),)
    loose = eval_joint(jm, JointQuery(body, AssumptionEnv(budgets=one), existential=True))
    tight = eval_joint(jm, JointQuery(body, AssumptionEnv(budgets=two), existential=True))
    assert loose.verdict or not tight.verdict


def test_budgets_need_existential(jm):
    with pytest.raises(FormulaError):
        eval_joint(jm, JointQuery(top_prob("<", 0.5), AssumptionEnv(budgets=(Budget("cost", "R", "<=", 13),))))


def test_explicit_prob_wins_over_resolution(jm):
    result = eval_joint(jm, JointQuery(top_prob("<", 0.5), AssumptionEnv(prob_remap={"K": 1.0})))
    assert not result.verdict
    assert result.trace[0]["attachments"] == {}
    assert result.trace[0]["value"] == pytest.approx(1.0)


def test_unresolved_attachment_warns(jm):
    manual_nodes = dict(jm.nodes)
    manual_nodes["K"] = basic_event("K", 0.2)
    model = dataclasses.replace(jm, nodes=manual_nodes)
    result = eval_joint(model, JointQuery(Compare(Prob(Atom("TOP")), "<", 0.5)))
    assert result.verdict
    assert result.warnings == ["attachment of K not resolved; using its declared prob"]


def test_compute_mode(jm):
    result = eval_joint(jm, JointQuery(Prob(Atom("TOP"), attach=K), mode="compute"))
    assert result.value == pytest.approx(0.4375)
    result = eval_joint(jm, JointQuery(Metric("cost", "R"), mode="compute"))
    assert result.value == 13.0


def test_metric_in_joint_body(jm):
    body = And(Compare(Metric("cost", "R"), "<=", 13), top_prob(">=", 0.3))
    result = eval_joint(jm, JointQuery(body, existential=True))
    assert result.verdict and result.witness == ("a", "c")
    result = eval_joint(jm, JointQuery(And(Atom("R"), top_prob(">=", 0.3)), existential=True))
    assert result.witness == ("a", "b")


def test_strategy_guard(jm):
    with pytest.raises(GuardExceededError):
        list(strategies(jm, max_leaves=2))
    assert len(list(strategies(jm))) == 8


def test_merge_envs():
    outer = AssumptionEnv(prob_remap={"OM": 0.15})
    assert merge_envs(outer, AssumptionEnv(prob_remap={"OM": 0.3})).prob_remap == {"OM": 0.3}
    both = merge_envs(outer, AssumptionEnv(prob_remap={"MS": 0.2}))
    assert both.prob_remap == {"OM": 0.15, "MS": 0.2}
    assert merge_envs(AssumptionEnv(), AssumptionEnv()).is_empty()
    b1, b2 = Budget("cost", "R", "<=", 1), Budget("skill", "R", "<", 2)
    merged = merge_envs(AssumptionEnv(budgets=(b1,)), AssumptionEnv(budgets=(b2,), attr_remaps={"cost": {"a": 1}}))
    assert merged.budgets == (b1, b2) and merged.attr_remaps == {"cost": {"a": 1}}
    assert str(b1) == "cost(R) <= 1"

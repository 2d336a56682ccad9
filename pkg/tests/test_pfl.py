import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftaq.bdd import BDD
from ftaq.errors import (FormulaError, GuardExceededError, MissingAttributeError,
                         NullConditioningError)
from ftaq.logic import And, Atom, Compare, Evidence, Implies, Mcs, Not, Or, Prob, Remapped
from ftaq.model import Side
from ftaq.pfl import (conditional_probability, eval_pfl, event_probability,
                      stochastic_independence)

from randmodels import brute_probability, random_fault_model, random_formula, truth


def probs_of(model):
    return {b: model[b].attrs.prob for b in model.leaves(Side.FAULT)}


@pytest.mark.parametrize("engine", ["auto", "exhaustive"])
def test_event_probability_examples(m1, m2, engine):
    assert event_probability(m1, Atom("TOP"), engine=engine) == pytest.approx(0.28, abs=1e-12)
    assert event_probability(m2, Atom("TOP"), engine=engine) == pytest.approx(0.109, abs=1e-12)
    assert event_probability(m1, Atom("TOP"), {"A": 0.0}, engine=engine) == pytest.approx(0.2)


def test_shared_leaf_is_not_treated_as_independent(m2):
    naive = 0.19 * 0.19
    assert abs(event_probability(m2, Atom("TOP")) - naive) > 0.05


def test_conditional_examples(m1, m2):
    assert conditional_probability(m1, Atom("TOP"), Atom("A")) == pytest.approx(1.0)
    assert conditional_probability(m2, Atom("TOP"), Atom("B")) == pytest.approx(1.0)
    assert conditional_probability(m1, Atom("A"), Atom("TOP")) == pytest.approx(0.1 / 0.28, abs=1e-9)
    assert conditional_probability(m1, Atom("A"), Atom("TOP")) == pytest.approx(0.357142857, abs=1e-9)


def test_null_conditioning(m1):
    with pytest.raises(NullConditioningError):
        conditional_probability(m1, Atom("TOP"), Atom("A"), {"A": 0.0})


def test_eval_pfl_examples(m1):
    result = eval_pfl(m1, Compare(Prob(Atom("TOP")), "<", 0.5))
    assert result.holds and result.trace[0]["value"] == pytest.approx(0.28)
    result = eval_pfl(m1, Compare(Prob(Evidence(Atom("TOP"), {"A": 1})), "<", 0.01))
    assert not result.holds and result.trace[0]["value"] == pytest.approx(1.0)
    premise = Compare(Prob(Atom("A")), "=", 1.0)
    psi = Remapped(Implies(premise, Compare(Prob(Atom("TOP")), ">", 0.15)), {"A": 1.0})
    result = eval_pfl(m1, psi)
    assert result.holds and [e["value"] for e in result.trace] == pytest.approx([1.0, 1.0])


def test_inner_remap_wins(m1):
    psi = Remapped(Remapped(Compare(Prob(Atom("A")), "=", 0.3), {"A": 0.3}), {"A": 0.9})
    assert eval_pfl(m1, psi).holds


def test_equality_tolerance(m1):
    assert eval_pfl(m1, Compare(Prob(Atom("TOP")), "=", 0.28)).holds
    assert not eval_pfl(m1, Compare(Prob(Atom("TOP")), "=", 0.2800001)).holds


def test_independence_examples(m1, m2):
    assert not stochastic_independence(m2, Atom("G1"), Atom("G2")).independent
    check = stochastic_independence(m2, Atom("G1"), Atom("G2"))
    assert check.joint == pytest.approx(0.109) and check.first == pytest.approx(0.19)
    assert stochastic_independence(m1, Atom("A"), Atom("B")).independent
    assert stochastic_independence(m2, Atom("A"), Atom("C")).independent


def test_errors(m1, m2, jm, water):
    with pytest.raises(FormulaError):
        event_probability(m1, Mcs("TOP"))
    with pytest.raises(FormulaError):
        event_probability(m2, Atom("TOP"), {"G1": 0.5})
    with pytest.raises(FormulaError):
        event_probability(jm, Atom("a"))
    with pytest.raises(MissingAttributeError):
        event_probability(jm, Atom("TOP"))
    with pytest.raises(MissingAttributeError):
        event_probability(water, Atom("WQF"))
    wide = random_fault_model(random.Random(5), 8)
    with pytest.raises(GuardExceededError):
        event_probability(wide, Atom(wide.ft_top), engine="exhaustive", max_leaves=3)


def test_bdd_basics():
    bdd = BDD(["x", "y"])
    x, y = bdd.var("x"), bdd.var("y")
    f = bdd.disj(x, y)
    assert bdd.probability(f, {"x": 0.1, "y": 0.2}) == pytest.approx(0.28)
    assert bdd.conj(x, bdd.neg(x)) == bdd.const(0)
    assert bdd.implies(x, f) == bdd.const(1)
    assert bdd.support(bdd.conj(x, y)) == {"x", "y"}
    assert bdd.disj(x, y) == bdd.disj(y, x)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_engines_match_enumeration(seed):
    rng = random.Random(seed)
    model = random_fault_model(rng, rng.randint(1, 10))
    gamma = random_formula(rng, list(model.nodes), atoms="event")
    leaves = model.leaves(Side.FAULT)
    expected = brute_probability(model, lambda v: truth(model, gamma, v), leaves, probs_of(model))
    assert event_probability(model, gamma) == pytest.approx(expected, abs=1e-9)
    assert event_probability(model, gamma, engine="exhaustive") == pytest.approx(expected, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_normalization_and_remap(seed):
    rng = random.Random(seed)
    model = random_fault_model(rng, rng.randint(1, 8))
    gamma = random_formula(rng, list(model.nodes), atoms="event")
    assert event_probability(model, gamma) + event_probability(model, Not(gamma)) == pytest.approx(1.0, abs=1e-9)
    leaf = rng.choice(model.leaves(Side.FAULT))
    remap = {leaf: rng.choice((0.0, 0.5, 1.0))}
    probs = {**probs_of(model), **remap}
    expected = brute_probability(model, lambda v: truth(model, gamma, v), model.leaves(Side.FAULT), probs)
    assert event_probability(model, gamma, remap) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_monotone_in_leaf_probability(seed):
    rng = random.Random(seed)
    model = random_fault_model(rng, rng.randint(1, 8))
    leaf = rng.choice(model.leaves(Side.FAULT))
    low = rng.random()
    high = low + (1.0 - low) * rng.random()
    top = Atom(model.ft_top)
    assert event_probability(model, top, {leaf: low}) <= event_probability(model, top, {leaf: high}) + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_conditional_matches_enumeration(seed):
    rng = random.Random(seed)
    model = random_fault_model(rng, rng.randint(1, 8))
    gamma = random_formula(rng, list(model.nodes), depth=2, atoms="plain")
    delta = random_formula(rng, list(model.nodes), depth=2, atoms="plain")
    leaves, probs = model.leaves(Side.FAULT), probs_of(model)
    joint = brute_probability(model, lambda v: truth(model, And(gamma, delta), v), leaves, probs)
    denom = brute_probability(model, lambda v: truth(model, delta, v), leaves, probs)
    if denom <= 0.0:
        with pytest.raises(NullConditioningError):
            conditional_probability(model, gamma, delta)
    else:
        assert conditional_probability(model, gamma, delta) == pytest.approx(joint / denom, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_structural_implies_stochastic_independence(seed):
    rng = random.Random(seed)
    model = random_fault_model(rng, rng.randint(2, 8))
    first, second = rng.sample(sorted(model.nodes), 2)
    if not set(model.cone(first)) & set(model.cone(second)):
        assert stochastic_independence(model, Atom(first), Atom(second)).independent


def test_connectives_in_pfl(m2):
    low = Compare(Prob(Atom("TOP")), "<", 0.2)
    high = Compare(Prob(Atom("TOP")), ">", 0.2)
    assert eval_pfl(m2, Or(low, high)).holds
    assert not eval_pfl(m2, And(low, high)).holds
    assert eval_pfl(m2, Not(high)).holds
    assert len(eval_pfl(m2, And(low, high)).trace) == 2

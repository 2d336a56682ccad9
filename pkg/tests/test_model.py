import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftaq.errors import FtaqError, GuardExceededError, UnknownElementError
from ftaq.model import (Kind, LeafAttrs, Node, Side, StatusVector, TreeModel, attack_step,
                        basic_event, collapse_node, enumerate_leaf_vectors, gate, structure_eval,
                        structurally_independent, validate_model)

from randmodels import evaluate, random_fault_model, vectors


def rules(model):
    return [(v.node, v.rule) for v in validate_model(model)]


def test_fixtures_are_valid(m1, m2, m3, jm, water, water_demo):
    for model in (m1, m2, m3, jm, water, water_demo):
        assert validate_model(model) == []


def test_sides_follow_leaf_kinds(jm):
    assert jm["R"].side is Side.ATTACK
    assert jm["TOP"].side is Side.FAULT
    assert jm.leaves(Side.ATTACK) == ("a", "b", "c")
    assert jm.leaves(Side.FAULT) == ("D", "K")


def test_unknown_element(m1):
    with pytest.raises(UnknownElementError):
        m1["Z"]


def test_cycle_reported_once():
    nodes = {"T": gate("T", "or", ["A", "G"]), "G": gate("G", "and", ["B", "H"]),
             "H": gate("H", "or", ["G"]), "A": basic_event("A", 0.1), "B": basic_event("B", 0.1)}
    report = validate_model(TreeModel("C", nodes, "T"))
    assert [(v.node, v.rule) for v in report] == [("G", "cycle")]


def test_validation_rules():
    nodes = {
        "T": gate("T", "or", ["A", "s", "Missing"]),
        "A": basic_event("A", 1.5),
        "s": attack_step("s", cost=-1.0),
        "E": gate("E", "xor", ["A"]),
        "F": Node("F", Kind.GATE, Side.FAULT, op="and", children=()),
    }
    found = rules(TreeModel("BAD", nodes, "T", attachments={"T": "A"}))
    for expected in [("T", "mixed-side"), ("T", "unknown-child"), ("A", "prob-range"),
                     ("s", "negative-attr"), ("E", "bad-gate-op"), ("F", "gate-no-children"),
                     ("E", "unreachable"), ("T", "attach-source"), ("T", "attach-target")]:
        assert expected in found


def test_top_rules():
    nodes = {"s": attack_step("s"), "A": basic_event("A", 0.1)}
    assert ("s", "top-not-fault") in rules(TreeModel("X", nodes, "s"))
    assert ("Q", "top-missing") in rules(TreeModel("X", nodes, "Q"))
    assert ("", "top-missing") in rules(TreeModel("X", nodes))


def test_attack_only_model_needs_no_top(m3):
    assert m3.ft_top is None
    assert validate_model(m3) == []


def test_structure_eval_examples(m1, m2):
    assert structure_eval(m1, "TOP", {"A": 1, "B": 0})
    assert not structure_eval(m1, "TOP", {"A": 0, "B": 0})
    assert structure_eval(m2, "TOP", {"A": 0, "B": 1, "C": 0})
    assert not structure_eval(m2, "TOP", {"A": 1, "B": 0, "C": 0})


def test_evidence_overrides_status_and_queried_element(m2):
    status = {"A": 0, "B": 0, "C": 0}
    assert structure_eval(m2, "TOP", status, {"G1": 1, "C": 1})
    assert not structure_eval(m2, "TOP", {"A": 1, "B": 1, "C": 1}, {"TOP": 0})


def test_incomplete_status_vector(m2):
    with pytest.raises(FtaqError):
        structure_eval(m2, "TOP", {"A": 1})


def test_status_vector_order():
    vs = list(enumerate_leaf_vectors(random_fault_model(random.Random(0), 3), ["b0", "b1", "b2"]))
    assert [v.index() for v in vs] == list(range(8))
    assert dict(vs[1]) == {"b0": 0, "b1": 0, "b2": 1}
    assert StatusVector.from_failed(["b0", "b1"], ["b0"]).index() == 2


def test_enumeration_guard():
    model = random_fault_model(random.Random(1), 5)
    with pytest.raises(GuardExceededError):
        list(enumerate_leaf_vectors(model, model.leaves(Side.FAULT), max_leaves=4))
    assert len(list(enumerate_leaf_vectors(model, model.leaves(Side.FAULT), max_leaves=4, force=True))) == 32


def test_structural_independence(m2):
    assert not structurally_independent(m2, "G1", "G2")
    assert structurally_independent(m2, "A", "C")


def test_structural_independence_rejects_mixed_sides(jm):
    with pytest.raises(FtaqError):
        structurally_independent(jm, "D", "a")


def test_collapse_gate_drops_private_descendants(m3):
    collapsed = collapse_node(m3, "G", LeafAttrs(cost=40.0))
    assert collapsed["G"].kind is Kind.ATTACK_STEP
    assert "b" not in collapsed.nodes and "c" not in collapsed.nodes
    assert collapsed.cone("R") == ("G", "a")


def test_collapse_keeps_shared_descendants(m2):
    collapsed = collapse_node(m2, "G1", LeafAttrs(prob=0.5))
    assert "B" in collapsed.nodes and "A" not in collapsed.nodes


def test_collapse_rejects_top(m1):
    with pytest.raises(FtaqError):
        collapse_node(m1, "TOP", LeafAttrs(prob=0.5))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_structure_eval_matches_oracle(seed):
    rng = random.Random(seed)
    model = random_fault_model(rng, rng.randint(1, 6))
    leaves = model.leaves(Side.FAULT)
    for v in vectors(leaves):
        for element in model.nodes:
            assert structure_eval(model, element, v) == evaluate(model, element, v)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_cone_is_leaf_reachability(seed):
    model = random_fault_model(random.Random(seed))
    for element in model.nodes:
        expected = sorted(n for n in model.reachable([element]) if model.nodes[n].is_leaf)
        assert list(model.cone(element)) == expected

"""Fault-tree/attack-tree DAG and its structure function."""

from __future__ import annotations

import dataclasses
import enum
import itertools
import re
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

from .errors import FtaqError, GuardExceededError, UnknownElementError

ID_PATTERN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
DEFAULT_MAX_LEAVES = 24


class Kind(str, enum.Enum):
    BASIC_EVENT = "BasicEvent"
    ATTACK_STEP = "AttackStep"
    GATE = "Gate"


class Side(str, enum.Enum):
    FAULT = "FaultSide"
    ATTACK = "AttackSide"


@dataclass(frozen=True)
class LeafAttrs:
    prob: float | None = None
    cost: float | None = None
    time: float | None = None
    skill: float | None = None

    def get(self, attr: str) -> float | None:
        return getattr(self, attr)

    def replace(self, **changes) -> LeafAttrs:
        return dataclasses.replace(self, **changes)


ATTR_NAMES = ("prob", "cost", "time", "skill")


@dataclass(frozen=True)
class Node:
    id: str
    kind: Kind
    side: Side
    op: str | None = None
    children: tuple[str, ...] = ()
    attrs: LeafAttrs | None = None

    @property
    def is_leaf(self) -> bool:
        return self.kind is not Kind.GATE


def basic_event(name: str, prob: float | None = None) -> Node:
    return Node(name, Kind.BASIC_EVENT, Side.FAULT, attrs=LeafAttrs(prob=prob))


def attack_step(name: str, prob=None, cost=None, time=None, skill=None) -> Node:
    return Node(name, Kind.ATTACK_STEP, Side.ATTACK,
                attrs=LeafAttrs(prob=prob, cost=cost, time=time, skill=skill))


def gate(name: str, op: str, children, side: Side = Side.FAULT) -> Node:
    return Node(name, Kind.GATE, side, op=op, children=tuple(children))


@dataclass(frozen=True)
class TreeModel:
    """Immutable FT/AT model.

    ``ft_top`` may be ``None`` for attack-only models.  ``attachments`` maps a
    fault-side basic event to the attack-side node that refines it.
    ``tags`` carries free-form markers such as ``"reconstruction"``.
    """

    name: str
    nodes: Mapping[str, Node]
    ft_top: str | None = None
    attachments: Mapping[str, str] = field(default_factory=dict)
    tags: frozenset[str] = frozenset()

    def __getitem__(self, element: str) -> Node:
        try:
            return self.nodes[element]
        except KeyError:
            raise UnknownElementError(element) from None

    def __contains__(self, element: str) -> bool:
        return element in self.nodes

    @cached_property
    def parents(self) -> dict[str, tuple[str, ...]]:
        acc: dict[str, list[str]] = {nid: [] for nid in self.nodes}
        for nid in sorted(self.nodes):
            for child in self.nodes[nid].children:
                acc.setdefault(child, []).append(nid)
        return {k: tuple(v) for k, v in acc.items()}

    def leaves(self, side: Side) -> tuple[str, ...]:
        return self._leaves_by_side[side]

    @cached_property
    def _leaves_by_side(self) -> dict[Side, tuple[str, ...]]:
        out = {Side.FAULT: [], Side.ATTACK: []}
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            if node.is_leaf:
                out[node.side].append(nid)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def _cones(self) -> dict[str, tuple[str, ...]]:
        return {}

    def cone(self, element: str) -> tuple[str, ...]:
        """Sorted leaf descendants of ``element`` (the element itself for a leaf)."""
        cached = self._cones.get(element)
        if cached is not None:
            return cached
        node = self[element]
        if node.is_leaf:
            result = (element,)
        else:
            acc: set[str] = set()
            stack = [element]
            seen = set()
            while stack:
                cur = stack.pop()
                if cur in seen:
                    continue
                seen.add(cur)
                cur_node = self[cur]
                if cur_node.is_leaf:
                    acc.add(cur)
                else:
                    stack.extend(cur_node.children)
            result = tuple(sorted(acc))
        self._cones[element] = result
        return result

    def reachable(self, roots) -> set[str]:
        seen: set[str] = set()
        stack = list(roots)
        while stack:
            cur = stack.pop()
            if cur in seen or cur not in self.nodes:
                continue
            seen.add(cur)
            stack.extend(self.nodes[cur].children)
        return seen

    def attack_roots(self) -> tuple[str, ...]:
        return tuple(nid for nid in sorted(self.nodes)
                     if self.nodes[nid].side is Side.ATTACK
                     and not any(self.nodes[p].side is Side.ATTACK for p in self.parents[nid]))

    def structurally_equal(self, other: TreeModel) -> bool:
        return (self.name == other.name and dict(self.nodes) == dict(other.nodes)
                and self.ft_top == other.ft_top
                and dict(self.attachments) == dict(other.attachments)
                and self.tags == other.tags)


class StatusVector(Mapping[str, int]):
    """Total 0/1 assignment over an ordered leaf domain."""

    __slots__ = ("domain", "_bits")

    def __init__(self, domain, bits: Mapping[str, int] | None = None):
        self.domain = tuple(domain)
        bits = {} if bits is None else bits
        missing = [leaf for leaf in self.domain if leaf not in bits]
        if missing:
            raise FtaqError(f"incomplete status vector: missing {', '.join(missing)}")
        extra = set(bits) - set(self.domain)
        if extra:
            raise FtaqError(f"status vector has ids outside its domain: {', '.join(sorted(extra))}")
        self._bits = {leaf: int(bool(bits[leaf])) for leaf in self.domain}

    @classmethod
    def from_index(cls, domain, index: int) -> StatusVector:
        n = len(domain)
        return cls(domain, {leaf: (index >> (n - 1 - j)) & 1 for j, leaf in enumerate(domain)})

    @classmethod
    def from_failed(cls, domain, failed) -> StatusVector:
        failed = set(failed)
        return cls(domain, {leaf: int(leaf in failed) for leaf in domain})

    def __getitem__(self, leaf: str) -> int:
        return self._bits[leaf]

    def __iter__(self):
        return iter(self.domain)

    def __len__(self) -> int:
        return len(self.domain)

    @property
    def failed(self) -> frozenset[str]:
        return frozenset(leaf for leaf, bit in self._bits.items() if bit)

    def index(self) -> int:
        n = len(self.domain)
        return sum(bit << (n - 1 - j) for j, bit in enumerate(self._bits[d] for d in self.domain))

    def with_bits(self, **changes: int) -> StatusVector:
        bits = dict(self._bits)
        bits.update(changes)
        return StatusVector(self.domain, bits)

    def __eq__(self, other):
        if isinstance(other, StatusVector):
            return self.domain == other.domain and self._bits == other._bits
        return NotImplemented

    def __hash__(self):
        return hash((self.domain, tuple(self._bits[d] for d in self.domain)))

    def __repr__(self) -> str:
        inner = ",".join(f"{d}={self._bits[d]}" for d in self.domain)
        return f"StatusVector({inner})"


# ---------------------------------------------------------------------------
# Validation


class Violation(NamedTuple):
    node: str
    rule: str
    detail: str = ""


def _find_cycles(nodes: Mapping[str, Node]) -> list[list[str]]:
    """Strongly connected components that contain a cycle (Tarjan)."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    cycles: list[list[str]] = []
    counter = itertools.count()

    def visit(v: str) -> None:
        index[v] = low[v] = next(counter)
        stack.append(v)
        on_stack.add(v)
        for w in nodes[v].children:
            if w not in nodes:
                continue
            if w not in index:
                visit(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.append(w)
                if w == v:
                    break
            if len(comp) > 1 or v in nodes[v].children:
                cycles.append(sorted(comp))

    for v in sorted(nodes):
        if v not in index:
            visit(v)
    return cycles


def validate_model(model: TreeModel) -> list[Violation]:
    """Every invariant violation in ``model``, sorted by node id then rule."""
    nodes = model.nodes
    out: list[Violation] = []

    for nid, node in nodes.items():
        if not ID_PATTERN.match(nid) or node.id != nid:
            out.append(Violation(nid, "bad-id", node.id))
        if node.kind is Kind.GATE:
            if node.attrs is not None:
                out.append(Violation(nid, "gate-has-attrs"))
            if node.op not in ("and", "or"):
                out.append(Violation(nid, "bad-gate-op", str(node.op)))
            if not node.children:
                out.append(Violation(nid, "gate-no-children"))
            for child in node.children:
                if child not in nodes:
                    out.append(Violation(nid, "unknown-child", child))
                elif nodes[child].side is not node.side:
                    out.append(Violation(nid, "mixed-side", child))
        else:
            if node.children:
                out.append(Violation(nid, "leaf-has-children"))
            expected = Side.FAULT if node.kind is Kind.BASIC_EVENT else Side.ATTACK
            if node.side is not expected:
                out.append(Violation(nid, "side-mismatch", node.side.value))
            attrs = node.attrs or LeafAttrs()
            if attrs.prob is not None and not 0.0 <= attrs.prob <= 1.0:
                out.append(Violation(nid, "prob-range", repr(attrs.prob)))
            for name in ("cost", "time", "skill"):
                value = attrs.get(name)
                if value is not None and not value >= 0.0:
                    out.append(Violation(nid, "negative-attr", name))

    for cycle in _find_cycles(nodes):
        out.append(Violation(cycle[0], "cycle", "->".join(cycle)))

    if model.ft_top is not None:
        top = nodes.get(model.ft_top)
        if top is None:
            out.append(Violation(model.ft_top, "top-missing"))
        elif top.side is not Side.FAULT:
            out.append(Violation(model.ft_top, "top-not-fault"))
        else:
            reach = model.reachable([model.ft_top])
            for nid, node in nodes.items():
                if node.side is Side.FAULT and nid not in reach:
                    out.append(Violation(nid, "unreachable"))
    elif any(node.side is Side.FAULT for node in nodes.values()):
        out.append(Violation("", "top-missing", "fault-side nodes without toplevel"))

    for source, target in model.attachments.items():
        src = nodes.get(source)
        if src is None or src.kind is not Kind.BASIC_EVENT:
            out.append(Violation(source, "attach-source", "must be a fault-side basic event"))
        tgt = nodes.get(target)
        if tgt is None or tgt.side is not Side.ATTACK:
            out.append(Violation(source, "attach-target", f"{target} is not an attack-side node"))
        elif any(nodes[p].side is Side.ATTACK for p in model.parents.get(target, ())):
            out.append(Violation(source, "attach-target", f"{target} has an attack-side parent"))

    out.sort(key=lambda v: (v.node, v.rule, v.detail))
    return out


# ---------------------------------------------------------------------------
# Structure function


def _check_status(model: TreeModel, element: str, status: Mapping[str, int]) -> None:
    side = model[element].side
    missing = [leaf for leaf in model.cone(element) if leaf not in status]
    if missing:
        raise FtaqError(f"incomplete status vector for {side.value}: missing {', '.join(missing)}")


def structure_eval(model: TreeModel, element: str, status: Mapping[str, int],
                   evidence: Mapping[str, int] | None = None) -> bool:
    """Propagate ``status`` through the DAG and read off ``element``.

    Nodes named in ``evidence`` are replaced by their constant before
    propagation, including ``element`` itself.
    """
    model[element]
    evidence = evidence or {}
    for target in evidence:
        model[target]
    _check_status(model, element, status)
    memo: dict[str, bool] = {}

    def value(nid: str) -> bool:
        if nid in evidence:
            return bool(evidence[nid])
        if nid in memo:
            return memo[nid]
        node = model.nodes[nid]
        if node.is_leaf:
            result = bool(status[nid])
        elif node.op == "and":
            result = all(value(c) for c in node.children)
        else:
            result = any(value(c) for c in node.children)
        memo[nid] = result
        return result

    return value(element)


def leaf_descendants(model: TreeModel, element: str) -> tuple[str, ...]:
    return model.cone(element)


def structurally_independent(model: TreeModel, first: str, second: str) -> bool:
    if model[first].side is not model[second].side:
        raise FtaqError(f"{first} and {second} lie on different sides of the model")
    return not set(model.cone(first)) & set(model.cone(second))


def enumerate_leaf_vectors(model: TreeModel, leaves, *, max_leaves: int | None = None,
                           force: bool = False) -> Iterator[StatusVector]:
    """All ``2**len(leaves)`` vectors; first id is the most significant bit."""
    leaves = tuple(leaves)
    if not leaves:
        raise FtaqError("leaf list must be non-empty")
    for leaf in leaves:
        model[leaf]
    limit = DEFAULT_MAX_LEAVES if max_leaves is None else max_leaves
    if len(leaves) > limit and not force:
        raise GuardExceededError(len(leaves), limit)
    for bits in itertools.product((0, 1), repeat=len(leaves)):
        yield StatusVector(leaves, dict(zip(leaves, bits)))


def collapse_node(model: TreeModel, element: str, attrs: LeafAttrs) -> TreeModel:
    """Copy of ``model`` with ``element`` turned into a leaf carrying ``attrs``.

    Descendants that become unreachable from the remaining roots are dropped.
    """
    node = model[element]
    if element == model.ft_top:
        raise FtaqError(f"cannot collapse the toplevel event {element}")
    if node.is_leaf:
        new_node = dataclasses.replace(node, attrs=attrs)
        nodes = dict(model.nodes)
        nodes[element] = new_node
        return dataclasses.replace(model, nodes=nodes)

    kind = Kind.BASIC_EVENT if node.side is Side.FAULT else Kind.ATTACK_STEP
    nodes = dict(model.nodes)
    nodes[element] = Node(element, kind, node.side, attrs=attrs)
    trimmed = dataclasses.replace(model, nodes=nodes)
    roots = [nid for nid in nodes if not model.parents.get(nid)]
    roots += list(model.attachments.values())
    keep = trimmed.reachable(roots)
    former = model.reachable([element]) - {element}
    nodes = {nid: n for nid, n in nodes.items() if nid not in former or nid in keep}
    return dataclasses.replace(model, nodes=nodes)

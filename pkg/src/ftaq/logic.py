"""Formula ASTs shared by the BFL, PFL, ATM and joint engines.

Connectives (``Atom``, ``Not``, ``And``, ``Or``, ``Implies``, ``Evidence``,
``Exists``, ``Forall``) are common; each engine accepts the subset it gives
meaning to.  Mapping-valued fields are normalised to sorted tuples of pairs
so every node is hashable and compares structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

CMPS = ("<", "<=", ">", ">=", "=")


def frozen_map(mapping) -> tuple[tuple[str, object], ...]:
    if mapping is None:
        return ()
    if isinstance(mapping, dict):
        items = mapping.items()
    else:
        items = mapping
    return tuple(sorted((str(k), v) for k, v in items))


class _MapField:
    """Mixin normalising the named mapping fields in ``__post_init__``."""

    _map_fields: tuple[str, ...] = ()

    def __post_init__(self):
        for name in self._map_fields:
            object.__setattr__(self, name, frozen_map(getattr(self, name)))


@dataclass(frozen=True)
class Atom:
    element: str


@dataclass(frozen=True)
class Not:
    arg: Formula


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Evidence(_MapField):
    arg: Formula
    evidence: tuple = ()
    _map_fields = ("evidence",)

    def __post_init__(self):
        super().__post_init__()
        for target, value in self.evidence:
            if value not in (0, 1):
                raise ValueError(f"evidence value for {target} must be 0 or 1, got {value!r}")


@dataclass(frozen=True)
class Exists:
    arg: Formula


@dataclass(frozen=True)
class Forall:
    arg: Formula


@dataclass(frozen=True)
class Mcs:
    element: str


@dataclass(frozen=True)
class Mps:
    element: str


@dataclass(frozen=True)
class Indep:
    first: str
    second: str


@dataclass(frozen=True)
class AtLeast:
    k: int
    elements: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not 0 <= self.k <= len(self.elements):
            raise ValueError(f"bound {self.k} outside 0..{len(self.elements)}")


@dataclass(frozen=True)
class AtMost(AtLeast):
    pass


# -- terms ------------------------------------------------------------------


@dataclass(frozen=True)
class Attachment(_MapField):
    """Resolve basic event ``be`` to the success probability of its attack tree.

    ``remap`` overrides attack-step (or attack-gate) probabilities for this
    resolution only.
    """

    be: str
    remap: tuple = ()
    _map_fields = ("remap",)


@dataclass(frozen=True)
class Prob:
    """Failure probability of a fault-side event, optionally conditioned."""

    event: Formula
    given: Formula | None = None
    attach: tuple[Attachment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "attach", tuple(self.attach))


@dataclass(frozen=True)
class Metric(_MapField):
    domain: str
    element: str
    remap: tuple = ()
    _map_fields = ("remap",)


@dataclass(frozen=True)
class AttackProb(_MapField):
    element: str
    remap: tuple = ()
    _map_fields = ("remap",)


Term = Union[Prob, Metric, AttackProb]


@dataclass(frozen=True)
class Compare:
    term: Term
    cmp: str
    bound: float

    def __post_init__(self):
        if self.cmp not in CMPS:
            raise ValueError(f"unknown comparison {self.cmp!r}")
        object.__setattr__(self, "bound", float(self.bound))


@dataclass(frozen=True)
class Remapped(_MapField):
    """Evaluate ``arg`` with fault-side leaf probabilities overridden."""

    arg: Formula
    remap: tuple = ()
    _map_fields = ("remap",)


@dataclass(frozen=True)
class Decorated:
    """Subformula evaluated under the named decorator's assumptions."""

    name: str
    arg: Formula


Formula = Union[Atom, Not, And, Or, Implies, Evidence, Exists, Forall, Mcs, Mps, Indep,
                AtLeast, AtMost, Compare, Remapped, Decorated]


def conj(*parts: Formula) -> Formula:
    result = parts[0]
    for part in parts[1:]:
        result = And(result, part)
    return result


def compare(value: float, cmp: str, bound: float, tol: float = 1e-9) -> bool:
    if cmp == "<":
        return value < bound
    if cmp == "<=":
        return value <= bound
    if cmp == ">":
        return value > bound
    if cmp == ">=":
        return value >= bound
    if cmp == "=":
        return abs(value - bound) <= tol
    raise ValueError(f"unknown comparison {cmp!r}")


def walk(phi):
    """Pre-order iteration over formula nodes (terms included)."""
    yield phi
    if isinstance(phi, (Not, Exists, Forall, Evidence, Remapped, Decorated)):
        yield from walk(phi.arg)
    elif isinstance(phi, (And, Or, Implies)):
        yield from walk(phi.left)
        yield from walk(phi.right)
    elif isinstance(phi, Compare):
        yield from walk(phi.term)
    elif isinstance(phi, Prob):
        yield from walk(phi.event)
        if phi.given is not None:
            yield from walk(phi.given)


def elements_of(phi) -> set[str]:
    out: set[str] = set()
    for node in walk(phi):
        if isinstance(node, (Atom, Mcs, Mps, Metric, AttackProb)):
            out.add(node.element)
        elif isinstance(node, Indep):
            out.update((node.first, node.second))
        elif isinstance(node, AtLeast):
            out.update(node.elements)
        elif isinstance(node, Evidence):
            out.update(k for k, _ in node.evidence)
    return out


# -- rendering --------------------------------------------------------------


def _num(x) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def _map(pairs) -> str:
    return ", ".join(f"{k} -> {_num(v)}" for k, v in pairs)


def format_formula(phi) -> str:
    """ASCII rendering used in reports and error messages."""
    if isinstance(phi, Atom):
        return phi.element
    if isinstance(phi, Not):
        return f"not {_wrap(phi.arg)}"
    if isinstance(phi, (And, Or, Implies)):
        op = {And: "and", Or: "or", Implies: "=>"}[type(phi)]
        return f"{_wrap(phi.left)} {op} {_wrap(phi.right)}"
    if isinstance(phi, Evidence):
        return f"{_wrap(phi.arg)}[{_map(phi.evidence)}]"
    if isinstance(phi, Exists):
        return f"exists {_wrap(phi.arg)}"
    if isinstance(phi, Forall):
        return f"forall {_wrap(phi.arg)}"
    if isinstance(phi, Mcs):
        return f"MCS({phi.element})"
    if isinstance(phi, Mps):
        return f"MPS({phi.element})"
    if isinstance(phi, Indep):
        return f"IDP({phi.first}, {phi.second})"
    if isinstance(phi, AtMost):
        return f"Vot<={phi.k}({', '.join(phi.elements)})"
    if isinstance(phi, AtLeast):
        return f"Vot>={phi.k}({', '.join(phi.elements)})"
    if isinstance(phi, Prob):
        inner = format_formula(phi.event)
        if phi.given is not None:
            inner += f" | {format_formula(phi.given)}"
        text = f"Pr({inner})"
        for att in phi.attach:
            text += f"[{att.be} -> Prob"
            if att.remap:
                text += f"[{_map(att.remap)}]"
            text += "]"
        return text
    if isinstance(phi, Metric):
        text = f"{phi.domain}({phi.element})"
        return text + (f"[{_map(phi.remap)}]" if phi.remap else "")
    if isinstance(phi, AttackProb):
        text = f"Prob({phi.element})"
        return text + (f"[{_map(phi.remap)}]" if phi.remap else "")
    if isinstance(phi, Compare):
        return f"{format_formula(phi.term)} {phi.cmp} {_num(phi.bound)}"
    if isinstance(phi, Remapped):
        return f"({format_formula(phi.arg)})[{_map(phi.remap)}]"
    if isinstance(phi, Decorated):
        return f"@{phi.name}({format_formula(phi.arg)})"
    raise TypeError(f"not a formula: {phi!r}")


def _wrap(phi) -> str:
    text = format_formula(phi)
    if isinstance(phi, (Atom, Mcs, Mps, Indep, AtLeast, Decorated, Remapped)):
        return text
    return f"({text})"

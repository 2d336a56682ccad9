"""The ``.ftat`` text format.

::

    model WATER
    //! reconstruction
    toplevel WQF;
    WQF = or(PoE, IoC);
    be OM prob=0.1;
    bas UCL prob=0.04 cost=5 time=2 skill=1;
    attach Threat -> CAT;

``//`` starts a comment; ``//!`` lines attach tags to the model.  Sides are
derived from leaf kinds: gates over ``be`` leaves are fault-side, gates over
``bas`` leaves attack-side.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ModelSyntaxError, ModelValidationError
from .model import Kind, LeafAttrs, Node, Side, TreeModel, validate_model

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<pragma>//![^\n]*)
  | (?P<comment>//[^\n]*)
  | (?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<punct>[=(),;])
""", re.VERBOSE)

LEAF_ATTRS = {"be": ("prob",), "bas": ("prob", "cost", "time", "skill")}
KEYWORDS = ("model", "toplevel", "be", "bas", "attach")


@dataclass(frozen=True)
class ModelSource:
    text: str
    origin: str = "<inline>"

    @classmethod
    def from_path(cls, path) -> ModelSource:
        path = Path(path)
        return cls(path.read_text(encoding="utf-8"), str(path))


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: ModelSource) -> tuple[list[_Tok], list[str]]:
    toks: list[_Tok] = []
    tags: list[str] = []
    line, line_start, pos = 1, 0, 0
    text = src.text
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ModelSyntaxError(f"unexpected character {text[pos]!r}", line,
                                   pos - line_start + 1, src.origin)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "pragma":
            tag = m.group()[3:].strip()
            if tag:
                tags.append(tag)
        elif kind not in ("ws", "comment"):
            value = m.group()
            toks.append(_Tok("punct" if kind == "arrow" else kind, value, line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks, tags


class _Parser:
    def __init__(self, src: ModelSource):
        self.src = src
        self.toks, self.tags = _tokenize(src)
        self.i = 0
        self.positions: dict[str, tuple[int, int]] = {}

    def error(self, message: str, tok: _Tok):
        return ModelSyntaxError(message, tok.line, tok.col, self.src.origin)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        tok = self.tok
        if tok.kind != kind or (text is not None and tok.text != text):
            want = repr(text) if text is not None else kind
            got = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise self.error(f"expected {want}, found {got}", tok)
        return self.next()

    def parse(self) -> TreeModel:
        name = None
        top: _Tok | None = None
        defs: dict[str, tuple[_Tok, dict]] = {}
        refs: list[_Tok] = []
        attach: dict[str, tuple[_Tok, _Tok]] = {}

        def define(tok: _Tok, spec: dict) -> None:
            if tok.text in defs:
                first = defs[tok.text][0]
                raise self.error(f"duplicate definition of {tok.text} (first at {first.line}:{first.col})", tok)
            defs[tok.text] = (tok, spec)

        while self.tok.kind != "eof":
            tok = self.tok
            if tok.kind != "ident":
                raise self.error(f"expected a statement, found {tok.text!r}", tok)
            following = self.toks[self.i + 1]
            keyword = tok.text if tok.text in KEYWORDS and following.text != "=" else None
            if keyword == "model":
                self.next()
                ident = self.expect("ident")
                if name is not None:
                    raise self.error("duplicate model declaration", tok)
                name = ident.text
                if self.tok.text == ";":
                    self.next()
                continue
            if keyword == "toplevel":
                self.next()
                ident = self.expect("ident")
                if top is not None:
                    raise self.error("duplicate toplevel declaration", tok)
                top = ident
                refs.append(ident)
            elif keyword in ("be", "bas"):
                self.next()
                ident = self.expect("ident")
                attrs = {}
                while self.tok.kind == "ident":
                    key = self.next()
                    if key.text not in LEAF_ATTRS[keyword]:
                        raise self.error(f"unknown attribute {key.text!r} for {keyword}", key)
                    if key.text in attrs:
                        raise self.error(f"duplicate attribute {key.text!r}", key)
                    self.expect("punct", "=")
                    num = self.expect("num")
                    value = float(num.text)
                    if key.text == "prob" and not 0.0 <= value <= 1.0:
                        raise self.error(f"range error: prob={num.text} outside [0,1]", num)
                    if value < 0.0:
                        raise self.error(f"range error: {key.text}={num.text} is negative", num)
                    attrs[key.text] = value
                define(ident, {"kind": keyword, "attrs": attrs})
            elif keyword == "attach":
                self.next()
                source = self.expect("ident")
                self.expect("punct", "->")
                target = self.expect("ident")
                if source.text in attach:
                    raise self.error(f"{source.text} is attached twice", source)
                attach[source.text] = (source, target)
                refs.extend((source, target))
            else:
                ident = self.expect("ident")
                self.expect("punct", "=")
                op = self.expect("ident")
                if op.text not in ("and", "or"):
                    raise self.error(f"unknown gate {op.text!r} (expected and/or)", op)
                self.expect("punct", "(")
                children = [self.expect("ident")]
                while self.tok.text == ",":
                    self.next()
                    children.append(self.expect("ident"))
                self.expect("punct", ")")
                refs.extend(children)
                define(ident, {"kind": "gate", "op": op.text, "children": [c.text for c in children]})
            self.expect("punct", ";")

        for ref in refs:
            if ref.text not in defs:
                raise self.error(f"unknown reference {ref.text!r}", ref)

        sides = _derive_sides(defs)
        nodes = {}
        for nid, (_, spec) in defs.items():
            if spec["kind"] == "gate":
                nodes[nid] = Node(nid, Kind.GATE, sides[nid], op=spec["op"],
                                  children=tuple(spec["children"]))
            else:
                kind = Kind.BASIC_EVENT if spec["kind"] == "be" else Kind.ATTACK_STEP
                nodes[nid] = Node(nid, kind, sides[nid], attrs=LeafAttrs(**spec["attrs"]))
        if name is None:
            name = Path(self.src.origin).stem if self.src.origin != "<inline>" else "model"
        model = TreeModel(
            name=name,
            nodes=nodes,
            ft_top=top.text if top else None,
            attachments={s: t.text for s, (_, t) in attach.items()},
            tags=frozenset(self.tags),
        )
        self.positions = {nid: (tok.line, tok.col) for nid, (tok, _) in defs.items()}
        return model


def _derive_sides(defs) -> dict[str, Side]:
    sides: dict[str, Side] = {}
    visiting: set[str] = set()

    def side(nid: str) -> Side:
        if nid in sides:
            return sides[nid]
        spec = defs[nid][1]
        if spec["kind"] == "be":
            result = Side.FAULT
        elif spec["kind"] == "bas":
            result = Side.ATTACK
        else:
            visiting.add(nid)
            child_sides = [side(c) for c in spec["children"] if c not in visiting]
            visiting.discard(nid)
            result = child_sides[0] if child_sides else Side.FAULT
        sides[nid] = result
        return result

    for nid in sorted(defs):
        side(nid)
    return sides


def parse_model(src: ModelSource | str, *, check: bool = True) -> TreeModel:
    """Parse ``.ftat`` text; with ``check`` the result must pass validation."""
    if isinstance(src, str):
        src = ModelSource(src)
    parser = _Parser(src)
    model = parser.parse()
    if check:
        report = validate_model(model)
        if report:
            pos = parser.positions.get(report[0].node, (None, None))
            raise ModelValidationError(report, model=model, line=pos[0], column=pos[1],
                                       origin=src.origin)
    return model


def load_model(path, *, check: bool = True) -> TreeModel:
    return parse_model(ModelSource.from_path(path), check=check)


def _num(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def _gate_order(model: TreeModel) -> list[str]:
    gates = {nid for nid, n in model.nodes.items() if not n.is_leaf}
    indegree = {g: sum(1 for p in model.parents[g] if p in gates) for g in gates}
    heap = [g for g, d in indegree.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        g = heapq.heappop(heap)
        order.append(g)
        for child in model.nodes[g].children:
            if child in indegree:
                indegree[child] -= 1
                if indegree[child] == 0:
                    heapq.heappush(heap, child)
    order.extend(sorted(gates - set(order)))  # cyclic remainder, only for invalid models
    return order


def serialize_model(model: TreeModel) -> str:
    lines = [f"model {model.name}"]
    lines += [f"//! {tag}" for tag in sorted(model.tags)]
    if model.ft_top is not None:
        lines.append(f"toplevel {model.ft_top};")
    for g in _gate_order(model):
        node = model.nodes[g]
        lines.append(f"{g} = {node.op}({', '.join(node.children)});")
    for nid in sorted(n for n, node in model.nodes.items() if node.is_leaf):
        node = model.nodes[nid]
        keyword = "be" if node.kind is Kind.BASIC_EVENT else "bas"
        parts = [keyword, nid]
        attrs = node.attrs or LeafAttrs()
        for attr in LEAF_ATTRS[keyword]:
            value = attrs.get(attr)
            if value is not None:
                parts.append(f"{attr}={_num(value)}")
        lines.append(" ".join(parts) + ";")
    for source in sorted(model.attachments):
        lines.append(f"attach {source} -> {model.attachments[source]};")
    return "\n".join(lines) + "\n"

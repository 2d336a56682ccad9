"""LangPFL surface syntax: script AST, lexer and parser.

A script is a sequence of sections::

    assume:
      set DBP = 1
      set_prob OM = 0.15
      set_cost CAT <= 30
      @A1:
        set_prob BUA = 0.12
    check:
      exists @A1(P[WQF] >= 0.12) and P[UC] < 0.005

``assume:`` is optional and holds one statement per line; a decorator block
``@Name:`` collects the statements that follow it until the next decorator or
section keyword.  Exactly one payload section (``check:``, ``compute:`` or
``computeall:``) holds a single expression in which newlines are ignored.
``//`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import ScriptSyntaxError


@dataclass(frozen=True)
class Pos:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOPOS = Pos(0, 0)


def _pos():
    return field(default=NOPOS, compare=False, repr=False)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Ident:
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class ProbTerm:
    event: str
    given: str | None = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class MetricTerm:
    domain: str  # cost | partime | seqtime | skill | prob
    element: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Comparison:
    term: ProbTerm | MetricTerm
    cmp: str
    bound: float
    pos: Pos = _pos()


@dataclass(frozen=True)
class SetsAtom:
    kind: str  # MCS | MPS
    element: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class IndepAtom:
    first: str
    second: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class UnaryOp:
    op: str  # not
    arg: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class BinaryOp:
    op: str  # and | or | =>
    left: object
    right: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class Quantified:
    quantifier: str  # exists | forall
    arg: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class DecoratorUse:
    name: str
    arg: object
    pos: Pos = _pos()


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class SetBool:
    element: str
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class SetProb:
    element: str
    value: float
    pos: Pos = _pos()


@dataclass(frozen=True)
class SetMetric:
    domain: str  # cost | partime | seqtime | skill
    element: str
    op: str  # = | <= | <
    value: float
    pos: Pos = _pos()


@dataclass(frozen=True)
class BareAssumption:
    expr: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class DecoratorBlock:
    name: str
    statements: tuple = ()
    pos: Pos = _pos()


PAYLOAD_KINDS = ("check", "compute", "computeall")


@dataclass(frozen=True)
class Script:
    statements: tuple = ()
    decorators: tuple[DecoratorBlock, ...] = ()
    kind: str = "check"
    payload: object = None
    origin: str = field(default="<inline>", compare=False, repr=False)
    pos: Pos = _pos()  # position of the payload section keyword


# -- lexer -------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|=>|[<>=\[\]()|,:@])
""", re.VERBOSE)

SECTIONS = ("assume",) + PAYLOAD_KINDS
QUANTIFIERS = ("exists", "forall")
RESERVED = {"and", "or", "not"} | set(QUANTIFIERS)
CMPS = ("<", "<=", ">", ">=", "=")

SET_METRIC = {
    "set_cost": "cost", "setcost": "cost",
    "set_partime": "partime", "setpartime": "partime",
    "set_time": "partime", "settime": "partime",
    "set_seqtime": "seqtime", "setseqtime": "seqtime",
    "set_skill": "skill", "setskill": "skill",
}
SET_PROB = ("set_prob", "setp")
STATEMENT_KEYWORDS = {"set", *SET_PROB, *SET_METRIC}
METRIC_TERMS = {"cost": "cost", "partime": "partime", "time": "partime",
                "seqtime": "seqtime", "skill": "skill", "prob": "prob"}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | num | op | nl | eof
    text: str
    pos: Pos


def tokenize(text: str, origin: str = "<inline>") -> list[Token]:
    toks: list[Token] = []
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ScriptSyntaxError(f"unexpected character {text[i]!r}", line, i - line_start + 1, origin)
        kind = m.lastgroup
        pos = Pos(line, i - line_start + 1)
        if kind == "nl":
            toks.append(Token("nl", "\n", pos))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(Token(kind, m.group(), pos))
        i = m.end()
    toks.append(Token("eof", "", Pos(line, i - line_start + 1)))
    return toks


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, origin: str):
        self.origin = origin
        self.toks = tokenize(text, origin)
        self.i = 0
        self.depth = 0  # bracket nesting; newlines are insignificant inside
        self.in_payload = False

    def error(self, message: str, pos: Pos) -> ScriptSyntaxError:
        return ScriptSyntaxError(message, pos.line, pos.col, self.origin)

    def _skip_nl(self) -> None:
        if self.in_payload or self.depth:
            while self.toks[self.i].kind == "nl":
                self.i += 1

    @property
    def tok(self) -> Token:
        self._skip_nl()
        return self.toks[self.i]

    def peek(self, offset: int = 1) -> Token:
        self._skip_nl()
        j = self.i
        for _ in range(offset):
            j += 1
            if self.in_payload or self.depth:
                while self.toks[j].kind == "nl":
                    j += 1
        return self.toks[min(j, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.tok
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.tok
        return tok.kind in ("op", "ident") and tok.text == text

    def expect(self, text: str) -> Token:
        tok = self.tok
        if tok.text != text or tok.kind not in ("op", "ident"):
            raise self.error(f"expected {text!r}, found {_describe(tok)}", tok.pos)
        return self.next()

    def expect_ident(self, what: str = "an identifier") -> Token:
        tok = self.tok
        if tok.kind != "ident" or tok.text in RESERVED:
            raise self.error(f"expected {what}, found {_describe(tok)}", tok.pos)
        return self.next()

    def expect_num(self) -> tuple[float, Token]:
        tok = self.tok
        if tok.kind != "num":
            raise self.error(f"expected a number, found {_describe(tok)}", tok.pos)
        self.next()
        return float(tok.text), tok

    def end_line(self) -> None:
        tok = self.toks[self.i]
        if tok.kind not in ("nl", "eof"):
            raise self.error(f"unexpected {_describe(tok)} at end of statement", tok.pos)
        if tok.kind == "nl":
            self.i += 1

    def skip_blank(self) -> None:
        while self.toks[self.i].kind == "nl":
            self.i += 1

    def at_section(self) -> bool:
        tok, nxt = self.toks[self.i], self.toks[self.i + 1] if self.i + 1 < len(self.toks) else None
        return tok.kind == "ident" and nxt is not None and nxt.text == ":" and nxt.kind == "op"

    # -- script --------------------------------------------------------------

    def parse(self) -> Script:
        seen: dict[str, Token] = {}
        statements: list = []
        decorators: list[DecoratorBlock] = []
        kind = None
        payload = None
        payload_pos = NOPOS
        self.skip_blank()
        while self.toks[self.i].kind != "eof":
            tok = self.toks[self.i]
            if not self.at_section():
                raise self.error(f"expected a section keyword (assume:, check:, compute:, computeall:), "
                                 f"found {_describe(tok)}", tok.pos)
            name = tok.text
            if name not in SECTIONS:
                raise self.error(f"unknown section keyword {name!r}", tok.pos)
            if name in seen:
                first = seen[name].pos
                raise self.error(f"duplicate section {name!r} (first at {first})", tok.pos)
            if name != "assume" and kind is not None:
                raise self.error(f"second payload section {name!r}; a script has exactly one of "
                                 "check:, compute:, computeall:", tok.pos)
            if name == "assume" and kind is not None:
                raise self.error("assume: must precede the payload section", tok.pos)
            seen[name] = tok
            self.i += 2
            if name == "assume":
                self.parse_assume(statements, decorators)
            else:
                kind, payload_pos = name, tok.pos
                payload = self.parse_payload()
            self.skip_blank()
        if kind is None:
            tok = self.toks[self.i]
            raise self.error("missing payload section (check:, compute: or computeall:)", tok.pos)
        names: dict[str, DecoratorBlock] = {}
        for block in decorators:
            if block.name in names:
                raise self.error(f"duplicate decorator @{block.name} (first at {names[block.name].pos})",
                                 block.pos)
            names[block.name] = block
        return Script(tuple(statements), tuple(decorators), kind, payload, self.origin, payload_pos)

    def parse_assume(self, statements: list, decorators: list) -> None:
        target = statements
        current: tuple[Token, list] | None = None
        self.end_line()
        while True:
            self.skip_blank()
            tok = self.toks[self.i]
            if tok.kind == "eof" or self.at_section():
                break
            if tok.kind == "op" and tok.text == "@" and self.toks[self.i + 2].text == ":":
                self.i += 1
                name = self.expect_ident("a decorator name")
                self.expect(":")
                self.end_line()
                if current is not None:
                    decorators.append(DecoratorBlock(current[0].text, tuple(current[1]), current[0].pos))
                current = (name, [])
                target = current[1]
                continue
            target.append(self.parse_statement())
        if current is not None:
            decorators.append(DecoratorBlock(current[0].text, tuple(current[1]), current[0].pos))

    def parse_statement(self):
        tok = self.toks[self.i]
        start = tok.pos
        word = tok.text if tok.kind == "ident" else None
        nxt = self.toks[self.i + 1]
        if word in STATEMENT_KEYWORDS and nxt.kind == "ident":
            self.i += 1
            ident = self.expect_ident()
            if word in SET_METRIC:
                op_tok = self.tok
                if op_tok.text not in ("=", "<=", "<"):
                    raise self.error(f"expected '=', '<=' or '<', found {_describe(op_tok)}", op_tok.pos)
                self.next()
                value, num = self.expect_num()
                if value < 0:
                    raise self.error(f"{word} value must be non-negative, got {num.text}", num.pos)
                stmt = SetMetric(SET_METRIC[word], ident.text, op_tok.text, value, start)
            else:
                self.expect("=")
                value, num = self.expect_num()
                if word == "set":
                    if value not in (0.0, 1.0):
                        raise self.error(f"set expects 0 or 1, got {num.text}", num.pos)
                    stmt = SetBool(ident.text, int(value), start)
                else:
                    if not 0.0 <= value <= 1.0:
                        raise self.error(f"probability {num.text} outside [0,1]", num.pos)
                    stmt = SetProb(ident.text, value, start)
            self.end_line()
            return stmt
        if word is not None and word.startswith("set") and nxt.kind == "ident":
            raise self.error(f"unknown keyword {word!r}", start)
        expr = self.parse_expr()
        self.end_line()
        return BareAssumption(expr, start)

    def parse_payload(self):
        self.in_payload = True
        try:
            tok = self.tok
            if tok.kind == "eof" or self.at_section():
                raise self.error("empty payload", tok.pos)
            expr = self.parse_expr()
            tok = self.tok
            if tok.kind != "eof" and not self.at_section():
                raise self.error(f"unexpected {_describe(tok)} after the payload expression", tok.pos)
            return expr
        finally:
            self.in_payload = False

    # -- expressions ---------------------------------------------------------

    def parse_expr(self):
        tok = self.tok
        if tok.kind == "ident" and tok.text in QUANTIFIERS:
            self.next()
            return Quantified(tok.text, self.parse_expr(), tok.pos)
        left = self.parse_or()
        if self.at("=>"):
            op = self.next()
            return BinaryOp("=>", left, self.parse_expr(), op.pos)
        return left

    def parse_or(self):
        left = self.parse_and()
        while self.at("or"):
            op = self.next()
            right = self.parse_quantified_or(self.parse_and)
            left = BinaryOp("or", left, right, op.pos)
            if isinstance(right, Quantified):
                break
        return left

    def parse_and(self):
        left = self.parse_not()
        while self.at("and"):
            op = self.next()
            right = self.parse_quantified_or(self.parse_not)
            left = BinaryOp("and", left, right, op.pos)
            if isinstance(right, Quantified):
                break
        return left

    def parse_quantified_or(self, parse):
        tok = self.tok
        if tok.kind == "ident" and tok.text in QUANTIFIERS:
            return self.parse_expr()
        return parse()

    def parse_not(self):
        if self.at("not"):
            op = self.next()
            return UnaryOp("not", self.parse_quantified_or(self.parse_not), op.pos)
        return self.parse_primary()

    def parse_primary(self):
        tok = self.tok
        if tok.kind == "op" and tok.text == "(":
            self.next()
            self.depth += 1
            expr = self.parse_expr()
            self.expect(")")
            self.depth -= 1
            return expr
        if tok.kind == "op" and tok.text == "@":
            self.next()
            name = self.expect_ident("a decorator name")
            self.expect("(")
            self.depth += 1
            expr = self.parse_expr()
            self.expect(")")
            self.depth -= 1
            return DecoratorUse(name.text, expr, tok.pos)
        if tok.kind != "ident" or tok.text in RESERVED:
            raise self.error(f"expected an expression, found {_describe(tok)}", tok.pos)
        nxt = self.peek()
        word = tok.text
        if nxt.text == "[" and nxt.kind == "op":
            return self.parse_bracket_atom()
        if word == "indep" and nxt.text == "(":
            self.next()
            self.expect("(")
            self.depth += 1
            first = self.expect_ident()
            self.expect(",")
            second = self.expect_ident()
            self.expect(")")
            self.depth -= 1
            return IndepAtom(first.text, second.text, tok.pos)
        self.next()
        return Ident(word, tok.pos)

    def parse_bracket_atom(self):
        head = self.next()
        word = head.text
        self.expect("[")
        self.depth += 1
        element = self.expect_ident()
        given = None
        if word == "P" and self.at("|"):
            self.next()
            given = self.expect_ident().text
        self.expect("]")
        self.depth -= 1
        if word in ("MCS", "MPS"):
            return SetsAtom(word, element.text, head.pos)
        if word == "P":
            term = ProbTerm(element.text, given, head.pos)
        elif word.lower() in METRIC_TERMS:
            term = MetricTerm(METRIC_TERMS[word.lower()], element.text, head.pos)
        else:
            raise self.error(f"unknown keyword {word!r} (expected P, MCS, MPS, Cost, ParTime, "
                             "SeqTime, Time, Skill or Prob)", head.pos)
        tok = self.tok
        if tok.kind == "op" and tok.text in CMPS:
            self.next()
            bound, _ = self.expect_num()
            return Comparison(term, tok.text, bound, tok.pos)
        return term


def _describe(tok: Token) -> str:
    if tok.kind == "eof":
        return "end of input"
    if tok.kind == "nl":
        return "end of line"
    return repr(tok.text)


def parse_script(text: str, origin: str = "<inline>") -> Script:
    return _Parser(text, origin).parse()

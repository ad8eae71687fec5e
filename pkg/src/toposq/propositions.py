"""Proposition expressions over a model.

Grammar, loosest binding first::

    expr    := or ( IMPLIES expr )?          right-associative
    or      := and ( OR and )*
    and     := unary ( AND unary )*
    unary   := NOT unary | "(" expr ")" | atom
    atom    := NAME | NAME "in" interval ( "," interval )*
    interval:= "[" number "," number "]"

Connectives may be written as ``∧ & and``, ``∨ | or``, ``¬ ~ ! not`` and
``⇒ => -> implies``. A bare NAME is a named proposition of the scenario;
``Obs in [a,b]`` is the spectral projection of an observable. Atoms are
daseinised first and the connectives then act on clopen subobjects.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .daseinisation import daseinise
from .errors import ParseError
from .scenario_io import Model
from .subobjects import ClopenSubobject, implies, join, meet, negate

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>=>|->|/\\|\\/|[∧∨¬⇒&|~!()\[\],])"
    r")"
)

_WORDS = {"and": "∧", "or": "∨", "not": "¬", "implies": "⇒"}
_SYMBOLS = {"&": "∧", "/\\": "∧", "|": "∨", "\\/": "∨", "~": "¬", "!": "¬", "=>": "⇒", "->": "⇒"}


@dataclass(frozen=True)
class Named:
    name: str


@dataclass(frozen=True)
class Spectral:
    observable: str
    intervals: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Not:
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str  # one of ∧ ∨ ⇒
    left: object
    right: object


def tokenize(text: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r} at offset {pos} in {text!r}")
        kind = m.lastgroup
        val = m.group(kind)
        if kind == "name" and val in _WORDS:
            kind, val = "op", _WORDS[val]
        elif kind == "op":
            val = _SYMBOLS.get(val, val)
        out.append((kind, val))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self, value: str | None = None, kind: str | None = None):
        k, v = self.peek()
        if k is None or (value is not None and v != value) or (kind is not None and k != kind):
            want = value or kind
            got = "end of input" if k is None else repr(v)
            raise ParseError(f"expected {want} but found {got} in {self.text!r}")
        self.i += 1
        return v

    def parse(self):
        node = self.expr()
        if self.i != len(self.tokens):
            raise ParseError(f"unexpected {self.peek()[1]!r} in {self.text!r}")
        return node

    def expr(self):
        left = self.disjunction()
        if self.peek()[1] == "⇒":
            self.take("⇒")
            return Binary("⇒", left, self.expr())
        return left

    def disjunction(self):
        node = self.conjunction()
        while self.peek()[1] == "∨":
            self.take("∨")
            node = Binary("∨", node, self.conjunction())
        return node

    def conjunction(self):
        node = self.unary()
        while self.peek()[1] == "∧":
            self.take("∧")
            node = Binary("∧", node, self.unary())
        return node

    def unary(self):
        k, v = self.peek()
        if v == "¬":
            self.take("¬")
            return Not(self.unary())
        if v == "(":
            self.take("(")
            node = self.expr()
            self.take(")")
            return node
        name = self.take(kind="name")
        if self.peek() == ("name", "in"):
            self.take("in")
            ivs = [self.interval()]
            while self.peek()[1] == "," and self.tokens[self.i + 1 : self.i + 2] == [("op", "[")]:
                self.take(",")
                ivs.append(self.interval())
            return Spectral(name, tuple(ivs))
        return Named(name)

    def interval(self):
        self.take("[")
        a = float(self.take(kind="num"))
        self.take(",")
        b = float(self.take(kind="num"))
        self.take("]")
        if a > b:
            raise ParseError(f"empty interval [{a}, {b}] in {self.text!r}")
        return (a, b)


def parse_expression(text: str):
    if not text or not text.strip():
        raise ParseError("empty proposition")
    return _Parser(text).parse()


def is_atomic(node) -> bool:
    return isinstance(node, (Named, Spectral))


def atom_projection(node, model: Model):
    scenario = model.scenario
    if isinstance(node, Named):
        return scenario.projection(node.name)
    return scenario.spectral(node.observable, node.intervals)


def evaluate(node, model: Model) -> ClopenSubobject:
    if is_atomic(node):
        return daseinise(atom_projection(node, model), model.presheaf, model.scenario.eps)
    if isinstance(node, Not):
        return negate(evaluate(node.operand, model))
    left, right = evaluate(node.left, model), evaluate(node.right, model)
    if node.op == "∧":
        return meet(left, right)
    if node.op == "∨":
        return join(left, right)
    return implies(left, right)


def render(node) -> str:
    if isinstance(node, Named):
        return node.name
    if isinstance(node, Spectral):
        return f"{node.observable} in " + ",".join(f"[{a!r},{b!r}]" for a, b in node.intervals)
    if isinstance(node, Not):
        inner = render(node.operand)
        return f"¬{inner}" if is_atomic(node.operand) or isinstance(node.operand, Not) else f"¬({inner})"
    return f"({render(node.left)} {node.op} {render(node.right)})"


def proposition(text: str, model: Model) -> ClopenSubobject:
    return evaluate(parse_expression(text), model)

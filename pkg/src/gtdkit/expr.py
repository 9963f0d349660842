"""
Fundamental-equation DSL: parsing, evaluation and catalog files.

Grammar, lowest to highest precedence::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Only ``ln``, ``exp`` and ``sqrt`` are recognised as functions. Evaluation is
generic over floats and :class:`~gtdkit.jets.Jet` values.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import jets
from .errors import CatalogError, DomainError, ParseError

FUNCTIONS = ("ln", "exp", "sqrt")
POTENTIAL_CLASSES = ("fundamental", "legendre", "diffeomorphic")


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # neg | ln | exp | sqrt
    child: "Expression"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^
    left: "Expression"
    right: "Expression"


Expression = Union[Constant, Variable, Unary, Binary]

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value:
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Unary("neg", self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Constant(float(text))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg)
            return Variable(text)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise ParseError("unexpected end of input, expected an operand", pos)
        raise ParseError(f"unexpected token {text!r}, expected an operand", pos)


def parse(text: str) -> Expression:
    """Parse DSL text into an expression tree."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text).parse()


def to_text(expr: Expression) -> str:
    """Fully parenthesised rendering that parses back to the same tree."""
    if isinstance(expr, Constant):
        return repr(float(expr.value))
    if isinstance(expr, Variable):
        return expr.name
    if isinstance(expr, Unary):
        if expr.op == "neg":
            return f"(-{to_text(expr.child)})"
        return f"{expr.op}({to_text(expr.child)})"
    return f"({to_text(expr.left)} {expr.op} {to_text(expr.right)})"


def variables(expr: Expression) -> set[str]:
    if isinstance(expr, Variable):
        return {expr.name}
    if isinstance(expr, Unary):
        return variables(expr.child)
    if isinstance(expr, Binary):
        return variables(expr.left) | variables(expr.right)
    return set()


def _power(base, expo):
    # integer exponents keep negative bases legal; anything else needs base > 0
    if isinstance(expo, jets.Jet):
        return jets.pow_real(base, expo)
    expo = float(expo)
    if expo.is_integer():
        return jets.pow_int(base, int(expo))
    return jets.pow_real(base, expo)


def evaluate(expr: Expression, assignment):
    """Evaluate ``expr`` with variables bound by ``assignment`` (floats or jets)."""
    if isinstance(expr, Constant):
        return expr.value
    if isinstance(expr, Variable):
        try:
            return assignment[expr.name]
        except KeyError:
            raise DomainError(f"unbound variable {expr.name!r}") from None
    if isinstance(expr, Unary):
        x = evaluate(expr.child, assignment)
        if expr.op == "neg":
            return -x
        return getattr(jets, expr.op)(x)
    a = evaluate(expr.left, assignment)
    b = evaluate(expr.right, assignment)
    op = expr.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if not isinstance(b, jets.Jet) and float(b) == 0.0:
            raise DomainError("division by zero")
        if isinstance(b, jets.Jet):
            return a * jets.reciprocal(b)
        return a / b
    return _power(a, b)


@dataclass(frozen=True)
class Constraint:
    """``expression > 0``; source text kept for messages."""

    text: str
    expression: Expression

    def holds(self, assignment) -> bool:
        try:
            return jets.value_of(evaluate(self.expression, assignment)) > 0.0
        except DomainError:
            return False


@dataclass(frozen=True)
class SystemDefinition:
    name: str
    potential: str
    variables: tuple[str, ...]
    equation: Expression
    domain: tuple[Constraint, ...] = ()
    potential_class: str = "fundamental"
    source: str = field(default="", compare=False)

    @property
    def n(self) -> int:
        return len(self.variables)

    def assignment(self, point):
        if len(point) != self.n:
            raise ValueError(f"{self.name} expects {self.n} coordinates, got {len(point)}")
        return dict(zip(self.variables, point))

    def in_domain(self, point) -> bool:
        values = self.assignment([jets.value_of(x) for x in point])
        return all(c.holds(values) for c in self.domain)

    def check_domain(self, point):
        values = self.assignment([jets.value_of(x) for x in point])
        for c in self.domain:
            if not c.holds(values):
                raise DomainError(f"{self.name}: point {values} violates domain constraint {c.text!r}")

    def potential_value(self, point):
        """Evaluate the fundamental equation at ``point`` (floats or jets)."""
        return evaluate(self.equation, self.assignment(point))


def _parse_constraint(text):
    m = re.fullmatch(r"\s*(.+?)\s*>\s*(.+?)\s*", text)
    if not m:
        raise CatalogError(f"domain constraint {text!r} must have the form 'lhs > rhs'")
    lhs, rhs = parse(m.group(1)), parse(m.group(2))
    if rhs != Constant(0.0):
        lhs = Binary("-", lhs, rhs)
    return Constraint(text.strip(), lhs)


def system_from_mapping(data: dict, source: str = "") -> SystemDefinition:
    for key in ("name", "potential", "variables", "equation"):
        if key not in data:
            raise CatalogError(f"missing field {key!r}")
    names = data["variables"]
    if not isinstance(names, list) or not names or not all(isinstance(v, str) for v in names):
        raise CatalogError("'variables' must be a non-empty list of names")
    seen = set()
    for v in names:
        if v in seen:
            raise CatalogError(f"duplicate variable {v!r}")
        seen.add(v)
    potential = data["potential"]
    if potential in seen:
        raise CatalogError(f"potential {potential!r} also listed as a variable")
    equation = parse(data["equation"])
    unknown = variables(equation) - seen
    if unknown:
        raise CatalogError(f"equation uses undeclared variables {sorted(unknown)}")
    domain = tuple(_parse_constraint(c) for c in data.get("domain", []))
    for c in domain:
        unknown = variables(c.expression) - seen
        if unknown:
            raise CatalogError(f"domain constraint {c.text!r} uses undeclared variables {sorted(unknown)}")
    cls = data.get("class", "fundamental")
    if cls not in POTENTIAL_CLASSES:
        raise CatalogError(f"class must be one of {POTENTIAL_CLASSES}, got {cls!r}")
    return SystemDefinition(
        name=data["name"],
        potential=potential,
        variables=tuple(names),
        equation=equation,
        domain=domain,
        potential_class=cls,
        source=source,
    )


def load_system(data: Union[bytes, str]) -> SystemDefinition:
    """Build a :class:`SystemDefinition` from catalog file contents."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        mapping = tomllib.loads(data)
    except tomllib.TOMLDecodeError as exc:
        raise CatalogError(f"malformed catalog file: {exc}") from None
    return system_from_mapping(mapping, source=data)


def catalog_dir() -> Path:
    env = os.environ.get("GTD_CATALOG_DIR")
    if env:
        return Path(env)
    return Path(__file__).with_name("catalog")


def catalog_names() -> list[str]:
    return sorted(p.stem for p in catalog_dir().glob("*.toml"))


def get_system(name_or_path: str) -> SystemDefinition:
    """Resolve a catalog name or a file path to a system definition."""
    path = Path(name_or_path)
    if not path.is_file():
        path = catalog_dir() / f"{name_or_path}.toml"
    if not path.is_file():
        raise CatalogError(f"unknown system {name_or_path!r}; known: {', '.join(catalog_names())}")
    return load_system(path.read_bytes())

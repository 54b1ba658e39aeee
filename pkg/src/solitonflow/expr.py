"""Small arithmetic language for orbit mean-curvature functions h(s).

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := number | 's' | identifier | identifier '(' expr ')' | '(' expr ')'

``^`` is right-associative and binds tighter than unary minus, so ``-2^2``
is ``-4`` and ``2^-1`` is ``0.5``.  The Unicode minus sign is accepted as
``-``.  Besides ``s``, an identifier is either a declared parameter (``n``
by default) or one of the constants ``pi`` and ``e``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

FUNCTIONS = (
    "sin", "cos", "tan", "ln", "exp", "sqrt", "abs",
    "atan", "sinh", "cosh", "tanh", "coth",
)
CONSTANTS = {"pi": math.pi, "e": math.e}
DEFAULT_PARAMS = ("n",)


class ExpressionError(ValueError):
    pass


class ParseError(ExpressionError):
    """Syntax error; ``offset`` is the byte offset into the UTF-8 source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownFunctionError(ParseError):
    pass


class UnknownIdentifierError(ParseError):
    pass


class EvalError(ExpressionError):
    pass


class DomainError(EvalError):
    pass


class UnboundIdentifierError(EvalError):
    pass


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    """The arc parameter ``s``."""


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, Param, Neg, BinOp, Call]


# -- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    offset: int  # byte offset


def _tokenize(source: str) -> list[_Token]:
    text = source.replace("−", "-")
    tokens: list[_Token] = []
    pos = 0
    # Byte offsets refer to the original string (U+2212 is 3 bytes in UTF-8).
    def byte_offset(i: int) -> int:
        return len(source[:i].encode("utf-8"))

    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", byte_offset(pos))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), byte_offset(pos)))
        pos = m.end()
    tokens.append(_Token("end", "", byte_offset(len(text))))
    return tokens


class _Parser:
    def __init__(self, source: str, params: tuple[str, ...]):
        self.tokens = _tokenize(source)
        self.i = 0
        self.params = params

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def take(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.peek()
        if tok.text != text or tok.kind != "op":
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ParseError(f"expected {text!r}, found {found}", tok.offset)
        self.take()

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected {tok.text!r}", tok.offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.take()
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                raise ParseError(f"number {tok.text!r} is not finite", tok.offset)
            return Const(value)
        if tok.kind == "ident":
            name = tok.text
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if name not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {name!r}", tok.offset)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            if name in FUNCTIONS:
                raise ParseError(f"function {name!r} needs an argument", nxt.offset)
            if name == "s":
                return Var()
            if name in self.params:
                return Param(name)
            if name in CONSTANTS:
                return Const(CONSTANTS[name])
            raise UnknownIdentifierError(f"unknown identifier {name!r}", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ParseError(f"unexpected {found}", tok.offset)


# -- evaluation --------------------------------------------------------------

def _coth(x: float) -> float:
    if x == 0.0:
        raise DomainError("coth(0) is undefined")
    return math.cosh(x) / math.sinh(x)


def _ln(x: float) -> float:
    if x <= 0.0:
        raise DomainError(f"ln of non-positive value {x!r}")
    return math.log(x)


def _sqrt(x: float) -> float:
    if x < 0.0:
        raise DomainError(f"sqrt of negative value {x!r}")
    return math.sqrt(x)


_FUNC_IMPL: dict[str, Callable[[float], float]] = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "ln": _ln,
    "exp": math.exp, "sqrt": _sqrt, "abs": abs, "atan": math.atan,
    "sinh": math.sinh, "cosh": math.cosh, "tanh": math.tanh, "coth": _coth,
}


def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise DomainError("division by zero")
    return a / b


def _pow(a: float, b: float) -> float:
    try:
        return math.pow(a, b)
    except ValueError:
        raise DomainError(f"{a!r}^{b!r} is not real") from None
    except ZeroDivisionError:
        raise DomainError(f"{a!r}^{b!r} divides by zero") from None


_BINOPS: dict[str, Callable[[float, float], float]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "^": _pow,
}


def _compile(node: Node, params: Mapping[str, float]) -> Callable[[float], float]:
    if isinstance(node, Const):
        v = node.value
        return lambda s: v
    if isinstance(node, Var):
        return lambda s: s
    if isinstance(node, Param):
        if node.name not in params:
            raise UnboundIdentifierError(f"parameter {node.name!r} is not bound")
        v = float(params[node.name])
        return lambda s: v
    if isinstance(node, Neg):
        inner = _compile(node.operand, params)
        return lambda s: -inner(s)
    if isinstance(node, BinOp):
        left = _compile(node.left, params)
        right = _compile(node.right, params)
        fn = _BINOPS[node.op]
        return lambda s: fn(left(s), right(s))
    if isinstance(node, Call):
        arg = _compile(node.arg, params)
        fn = _FUNC_IMPL[node.func]
        return lambda s: fn(arg(s))
    raise TypeError(f"not an expression node: {node!r}")


def to_text(node: Node) -> str:
    """Canonical fully parenthesised form; parses back to the same tree."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return "s"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


@dataclass(frozen=True)
class EvalContext:
    s: float
    params: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Expression:
    ast: Node
    text: str = ""

    def bind(self, params: Mapping[str, float] | None = None) -> Callable[[float], float]:
        """Compile to a plain ``s -> float`` callable with parameters fixed.

        The callable raises :class:`EvalError` (or a subclass) instead of
        returning a non-finite value.
        """
        params = dict(params or {})
        for name, value in params.items():
            if not math.isfinite(float(value)):
                raise EvalError(f"parameter {name!r} is not finite")
        raw = _compile(self.ast, params)

        def fn(s: float) -> float:
            try:
                value = raw(float(s))
            except OverflowError:
                raise EvalError(f"overflow at s={s!r}") from None
            except ValueError as exc:
                if isinstance(exc, ExpressionError):
                    raise
                raise DomainError(f"{exc} at s={s!r}") from None
            if not math.isfinite(value):
                raise EvalError(f"non-finite value at s={s!r}")
            return value

        return fn

    def __str__(self) -> str:
        return to_text(self.ast)


def parse(text: str, params: tuple[str, ...] = DEFAULT_PARAMS) -> Expression:
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return Expression(_Parser(text, tuple(params)).parse(), text)


def evaluate(e: Expression, ctx: EvalContext) -> float:
    return e.bind(ctx.params)(ctx.s)


def derivative_num(e: Expression | Callable[[float], float], ctx: EvalContext,
                   one_sided: str | None = None) -> float:
    """Finite-difference derivative at ``ctx.s``.

    Central differences by default.  ``one_sided="+"`` (or ``"-"``) uses the
    three points s+k*d (s-k*d), k=1..3, never touching s itself, so it works
    at an open endpoint where the function is undefined.  Both stencils are
    exact for quadratics.
    """
    fn = e.bind(ctx.params) if isinstance(e, Expression) else e
    return _fd(fn, ctx.s, one_sided)


def _fd(fn: Callable[[float], float], s: float, one_sided: str | None) -> float:
    d = (2.0 ** -52) ** (1.0 / 3.0) * max(1.0, abs(s))
    if one_sided is None:
        return (fn(s + d) - fn(s - d)) / (2.0 * d)
    if one_sided not in ("+", "-"):
        raise ValueError("one_sided must be '+', '-' or None")
    sign = 1.0 if one_sided == "+" else -1.0
    d1, d2, d3 = (fn(s + sign * k * d) for k in (1, 2, 3))
    return sign * (-2.5 * d1 + 4.0 * d2 - 1.5 * d3) / d

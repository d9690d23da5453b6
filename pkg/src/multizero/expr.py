"""Expression trees for systems of analytic functions.

A system file looks like::

    # comment
    vars x y
    x^2*sin(y)
    y - x + 1e-8

Every non-empty line after ``vars`` is one equation (implicitly ``= 0``).
``;`` may be used instead of a newline.  Supported functions are
sin, cos, tan, exp, log and sqrt; ``^`` takes a nonnegative integer literal.
"""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")


class ExprError(ValueError):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class DomainError(ExprError, ArithmeticError):
    """Raised when an expression is evaluated outside its domain."""

    def __init__(self, message: str, equation: int | None = None):
        if equation is not None:
            message = f"equation {equation + 1}: {message}"
        super().__init__(message)
        self.equation = equation


# ---------------------------------------------------------------------------
# nodes


@dataclass(frozen=True)
class Const:
    value: complex


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of FUNCTIONS
    arg: "Expression"


@dataclass(frozen=True)
class Binary:
    op: str  # "+", "-", "*", "/"
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ExprError("integer power exponents must be nonnegative")


Expression = Const | Var | Unary | Binary | Pow


def variables_used(expr: Expression) -> set[int]:
    if isinstance(expr, Var):
        return {expr.index}
    if isinstance(expr, Const):
        return set()
    if isinstance(expr, Unary):
        return variables_used(expr.arg)
    if isinstance(expr, Pow):
        return variables_used(expr.base)
    return variables_used(expr.left) | variables_used(expr.right)


@dataclass(frozen=True)
class System:
    """``t`` equations in ``s`` variables."""

    equations: tuple[Expression, ...]
    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise ExprError("a system needs at least one variable")
        if not self.equations:
            raise ExprError("a system needs at least one equation")
        for k, eq in enumerate(self.equations):
            used = variables_used(eq)
            if used and max(used) >= len(self.names):
                raise ExprError(f"equation {k + 1} uses an undeclared variable")

    @property
    def s(self) -> int:
        return len(self.names)

    @property
    def t(self) -> int:
        return len(self.equations)

    def __call__(self, point) -> np.ndarray:
        return eval_system(self, point)


# ---------------------------------------------------------------------------
# generic evaluation

# Scalar complex arithmetic.  The jet module supplies its own table.
def _checked(fn: Callable, name: str) -> Callable:
    def wrapped(z):
        if name == "log" and z == 0:
            raise DomainError("log of zero")
        try:
            return fn(z)
        except (ValueError, OverflowError) as exc:
            raise DomainError(f"{name}({z}): {exc}") from None

    return wrapped


SCALAR_FUNCTIONS: dict[str, Callable[[complex], complex]] = {
    name: _checked(getattr(cmath, name), name) for name in FUNCTIONS
}


def evaluate(expr: Expression, values: Sequence, functions: Mapping[str, Callable] = SCALAR_FUNCTIONS,
             const: Callable = complex):
    """Evaluate ``expr`` with ``Var(i)`` bound to ``values[i]``.

    ``values`` may hold complex scalars or any object implementing the
    arithmetic operators (e.g. jets); ``functions`` maps function names to the
    matching implementations and ``const`` lifts complex constants.
    """
    cache: dict[int, object] = {}

    def ev(node):
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, Const):
            out = const(node.value)
        elif isinstance(node, Var):
            out = values[node.index]
        elif isinstance(node, Unary):
            a = ev(node.arg)
            out = -a if node.op == "neg" else functions[node.op](a)
        elif isinstance(node, Pow):
            b = ev(node.base)
            out = const(1.0) if node.exponent == 0 else b ** node.exponent
        else:
            a, b = ev(node.left), ev(node.right)
            op = node.op
            if op == "+":
                out = a + b
            elif op == "-":
                out = a - b
            elif op == "*":
                out = a * b
            else:
                try:
                    out = a / b
                except ZeroDivisionError:
                    raise DomainError("division by zero") from None
        cache[key] = out
        return out

    return ev(expr)


def eval_system(sys: System, point) -> np.ndarray:
    """Values ``f_i(point)`` as a complex vector of length ``t``."""
    p = [complex(c) for c in np.asarray(point, dtype=complex).ravel()]
    if len(p) != sys.s:
        raise ValueError(f"point has {len(p)} coordinates, system has {sys.s} variables")
    out = np.empty(sys.t, dtype=complex)
    for i, eq in enumerate(sys.equations):
        try:
            out[i] = evaluate(eq, p)
        except DomainError as exc:
            raise DomainError(str(exc), equation=i) from None
    return out


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str, line: int, col0: int = 1) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col0 + pos)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), line, col0 + pos))
        pos = m.end()
    toks.append(_Tok("end", "", line, col0 + len(src)))
    return toks


class _Parser:
    # expr   := term (('+'|'-') term)*
    # term   := unary (('*'|'/') unary)*
    # unary  := '-' unary | '+' unary | power
    # power  := atom ('^' uint)?
    # atom   := number | 'i' | name | func '(' expr ')' | '(' expr ')'

    def __init__(self, toks: list[_Tok], names: Mapping[str, int]):
        self.toks = toks
        self.pos = 0
        self.names = names

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            found = self.tok.text or "end of line"
            self.error(f"expected {text!r}, found {found!r}")

    def parse(self) -> Expression:
        e = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self):
        e = self.term()
        while True:
            if self.accept("+"):
                e = Binary("+", e, self.term())
            elif self.accept("-"):
                e = Binary("-", e, self.term())
            else:
                return e

    def term(self):
        e = self.unary()
        while True:
            if self.accept("*"):
                e = Binary("*", e, self.unary())
            elif self.accept("/"):
                e = Binary("/", e, self.unary())
            else:
                return e

    def unary(self):
        if self.accept("-"):
            return Unary("neg", self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            tok = self.tok
            if tok.kind != "number" or not tok.text.isdigit():
                self.error("exponent must be a nonnegative integer literal")
            self.pos += 1
            return Pow(base, int(tok.text))
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "number":
            self.pos += 1
            return Const(complex(float(tok.text)))
        if tok.kind == "name":
            self.pos += 1
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(tok.text, arg)
            if tok.text in self.names:
                return Var(self.names[tok.text])
            if tok.text == "i":
                return Const(1j)
            self.error(f"unknown identifier {tok.text!r}", tok)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.error(f"unexpected {tok.text or 'end of line'!r}")


def parse_expression(text: str, names: Sequence[str], line: int = 1, col: int = 1) -> Expression:
    lookup = {n: k for k, n in enumerate(names)}
    return _Parser(_tokenize(text, line, col), lookup).parse()


def _statements(text: str):
    """Yield (line, column, text) for each non-empty statement."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        code = raw.split("#", 1)[0]
        col = 1
        for piece in code.split(";"):
            stripped = piece.strip()
            if stripped:
                yield lineno, col + (len(piece) - len(piece.lstrip())), stripped
            col += len(piece) + 1


def parse_system(text: str) -> System:
    stmts = list(_statements(text))
    if not stmts:
        raise ParseError("empty system", 1, 1)
    line, col, head = stmts[0]
    words = head.split()
    if words[0] != "vars":
        raise ParseError("first statement must be 'vars <name> ...'", line, col)
    names = words[1:]
    if not names:
        raise ParseError("no variables declared", line, col)
    for n in names:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", n):
            raise ParseError(f"invalid variable name {n!r}", line, col)
        if n in FUNCTIONS or n == "i" or n == "vars":
            raise ParseError(f"reserved name {n!r} cannot be a variable", line, col)
    if len(set(names)) != len(names):
        raise ParseError("duplicate variable name", line, col)
    eqs = tuple(parse_expression(src, names, ln, c) for ln, c, src in stmts[1:])
    if not eqs:
        raise ParseError("no equations", line, col)
    return System(eqs, tuple(names))


def load_system(path) -> System:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())


# ---------------------------------------------------------------------------
# rendering

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_const(z: complex) -> str:
    re_, im = z.real, z.imag

    def num(x: float) -> str:
        r = repr(float(x))
        if r in ("inf", "-inf", "nan"):
            raise ExprError(f"cannot render non-finite constant {x}")
        return r

    if im == 0:
        return num(re_)
    if re_ == 0:
        return f"{num(im)}*i"
    return f"({num(re_)} + {num(im)}*i)"


def render(expr: Expression, names: Sequence[str]) -> str:
    """Render ``expr`` in the grammar accepted by :func:`parse_expression`."""

    def go(node, prec: int) -> str:
        if isinstance(node, Const):
            text = _fmt_const(node.value)
            # negative literals bind like a unary minus, b*i like a product
            if (text.startswith("-") and prec > 1) or (text.endswith("*i") and prec > 2):
                return f"({text})"
            return text
        if isinstance(node, Var):
            return names[node.index]
        if isinstance(node, Unary):
            if node.op == "neg":
                text = "-" + go(node.arg, 3)
                return f"({text})" if prec > 1 else text
            return f"{node.op}({go(node.arg, 0)})"
        if isinstance(node, Pow):
            text = f"{go(node.base, 5)}^{node.exponent}"
            return f"({text})" if prec > 4 else text
        p = _PREC[node.op]
        # left-associative: the right operand of - and / needs a higher level
        right_prec = p + 1 if node.op in "-/" else p
        text = f"{go(node.left, p)} {node.op} {go(node.right, right_prec)}"
        return f"({text})" if p < prec else text

    return go(expr, 0)


def render_system(sys: System) -> str:
    lines = ["vars " + " ".join(sys.names)]
    lines += [render(eq, sys.names) for eq in sys.equations]
    return "\n".join(lines) + "\n"


# small helpers for building polynomial expressions programmatically

def const(z) -> Const:
    return Const(complex(z))


def add_all(terms: Sequence[Expression]) -> Expression:
    if not terms:
        return Const(0j)
    out = terms[0]
    for t in terms[1:]:
        out = Binary("+", out, t)
    return out


def is_finite_complex(z: complex) -> bool:
    return math.isfinite(z.real) and math.isfinite(z.imag)

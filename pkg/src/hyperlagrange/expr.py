"""Arithmetic DSL for internal functions with hyperreal constants.

Grammar (``^`` binds tightest and is right-associative, then unary minus,
then ``* /``, then ``+ -``; binary operators are left-associative)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := atom ("^" intpow)?
    intpow  := INT ("^" intpow)? | "(" intpow ")"
    atom    := NUMBER | IDENT | "(" expr ")"

Identifiers resolve to variables first, then to infinitesimal generators.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

from .hyperreal import (
    DEFAULT_ORDER,
    DEFAULT_TOL,
    GeneratorSet,
    Hyperreal,
    Tolerance,
    render as render_hyperreal,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class ProblemError(ValueError):
    """Malformed or inadmissible problem definition."""


# -- AST ------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Union[Hyperreal, float]


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class PowInt:
    base: "Expr"
    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("PowInt exponent must be >= 0")


Expr = Union[Const, Var, Add, Sub, Mul, Div, Neg, PowInt]

_BINARY = (Add, Sub, Mul, Div)


def children(e: Expr) -> tuple:
    if isinstance(e, _BINARY):
        return (e.left, e.right)
    if isinstance(e, Neg):
        return (e.operand,)
    if isinstance(e, PowInt):
        return (e.base,)
    return ()


def arity(e: Expr) -> int:
    """One more than the largest variable index used (0 if none)."""
    if isinstance(e, Var):
        return e.index + 1
    return max((arity(c) for c in children(e)), default=0)


# -- lexer ----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str, line: int = 1, column: int = 1) -> list[Token]:
    tokens = []
    pos = 0
    line_start = pos - (column - 1)
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("end", "", line, pos - line_start + 1))
    return tokens


# -- parser ---------------------------------------------------------------


class _Parser:
    def __init__(self, tokens, vars, gens, order):
        self.tokens = tokens
        self.pos = 0
        self.vars = {name: i for i, name in enumerate(vars)}
        self.gens = gens
        self.order = order

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.column)

    def expect(self, text):
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise self.error("empty expression")
        e = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self):
        left = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.advance().text
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self):
        left = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.advance().text
            right = self.unary()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.kind == "op" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.text == "^" and self.tok.kind == "op":
            self.advance()
            return PowInt(base, self.intpow())
        return base

    def intpow(self) -> int:
        if self.tok.text == "(":
            self.advance()
            k = self.intpow()
            self.expect(")")
        elif self.tok.kind == "num" and self.tok.text.isdigit():
            k = int(self.advance().text)
        else:
            raise self.error("exponent must be a nonnegative integer literal")
        if self.tok.text == "^":
            self.advance()
            k = k ** self.intpow()
        return k

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Const(Hyperreal.constant(float(tok.text), self.gens, self.order))
        if tok.kind == "ident":
            self.advance()
            if tok.text in self.vars:
                return Var(self.vars[tok.text])
            if tok.text in self.gens:
                return Const(Hyperreal.generator(tok.text, self.gens, self.order))
            raise self.error(f"unknown identifier {tok.text!r}", tok)
        if tok.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}")


def parse(text: str, vars: Sequence[str], generators: GeneratorSet | Sequence[str] = (),
          order: int = DEFAULT_ORDER, *, line: int = 1, column: int = 1) -> Expr:
    """Parse ``text`` into an :data:`Expr` over the variables ``vars``.

    ``line``/``column`` offset reported error positions, for text embedded in a
    larger file.
    """
    if not isinstance(generators, GeneratorSet):
        generators = GeneratorSet(generators)
    if not text.strip():
        raise ParseError("empty expression", line, column)
    return _Parser(tokenize(text, line, column), vars, generators, order).parse()


# -- rendering ------------------------------------------------------------

_LEVEL = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, PowInt: 4}


def _literal(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot render non-finite constant {v!r}")
    if v.is_integer() and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(v)
    return f"({s})" if v < 0 or s.startswith("-") else s


def _level(e) -> int:
    if isinstance(e, Const):
        return 5
    return _LEVEL.get(type(e), 5)


def render(e: Expr, vars: Sequence[str]) -> str:
    """Text that :func:`parse` maps back to the same tree."""
    if isinstance(e, Var):
        return vars[e.index]
    if isinstance(e, Const):
        v = e.value
        if isinstance(v, Hyperreal):
            if v.is_standard():
                return _literal(v.st())
            terms = v.terms
            if len(terms) == 1:
                (mono, c), = terms.items()
                if c == 1.0 and mono.total_degree == 1:
                    return mono.render(v.gens)
            return f"({render_hyperreal(v, digits=17)})"
        return _literal(float(v))
    if isinstance(e, _BINARY):
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
        lvl = _LEVEL[type(e)]
        left = render(e.left, vars)
        if _level(e.left) < lvl:
            left = f"({left})"
        right = render(e.right, vars)
        if _level(e.right) <= lvl:
            right = f"({right})"
        return f"{left} {op} {right}"
    if isinstance(e, Neg):
        inner = render(e.operand, vars)
        if _level(e.operand) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, PowInt):
        base = render(e.base, vars)
        if _level(e.base) < 5:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    raise TypeError(f"not an expression node: {e!r}")


# -- evaluation -----------------------------------------------------------


def evaluate(e: Expr, point: Sequence[Hyperreal]) -> Hyperreal:
    """Value of ``e`` at a point of hyperreal coordinates.

    Constants are embedded into the coordinates' generator set and order, which
    must extend those of the constants.
    """
    if not point:
        raise ValueError("evaluation point must have at least one coordinate")
    basis = point[0].basis
    if any(p.basis is not basis for p in point):
        raise ValueError("point coordinates must share generators and order")
    zero = point[0] * 0.0
    n = len(point)

    def ev(node):
        if isinstance(node, Var):
            if node.index >= n:
                raise ValueError(f"variable index {node.index} outside point of size {n}")
            return point[node.index]
        if isinstance(node, Const):
            v = node.value
            if isinstance(v, Hyperreal):
                return v.lift(basis.gens, basis.order)
            return zero + float(v)
        if isinstance(node, Add):
            return ev(node.left) + ev(node.right)
        if isinstance(node, Sub):
            return ev(node.left) - ev(node.right)
        if isinstance(node, Mul):
            return ev(node.left) * ev(node.right)
        if isinstance(node, Div):
            return ev(node.left) / ev(node.right)
        if isinstance(node, Neg):
            return -ev(node.operand)
        if isinstance(node, PowInt):
            return ev(node.base) ** node.exponent
        raise TypeError(f"not an expression node: {node!r}")

    return ev(e)


def _py(node) -> str:
    if isinstance(node, Var):
        return f"z[{node.index}]"
    if isinstance(node, Const):
        v = node.value
        if isinstance(v, Hyperreal):
            if not v.is_standard():
                raise ValueError("compile_standard needs a shadowed expression")
            v = v.st()
        return f"({float(v)!r})"
    if isinstance(node, _BINARY):
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
        return f"({_py(node.left)} {op} {_py(node.right)})"
    if isinstance(node, Neg):
        return f"(-{_py(node.operand)})"
    if isinstance(node, PowInt):
        return f"({_py(node.base)} ** {node.exponent})"
    raise TypeError(f"not an expression node: {node!r}")


def compile_standard(e: Expr) -> Callable[[Sequence[float]], float]:
    """Float-valued Python function of a real point, for infinitesimal-free ``e``."""
    return eval(f"lambda z: {_py(e)}", {"__builtins__": {}})


def evaluate_standard(e: Expr, values: Sequence[float]) -> float:
    return compile_standard(shadow(e))(values)


# -- transforms -----------------------------------------------------------


def _is_const(e, value) -> bool:
    if not isinstance(e, Const):
        return False
    v = e.value
    if isinstance(v, Hyperreal):
        return v.is_standard() and v.st() == value
    return v == value


ZERO = Const(0.0)
ONE = Const(1.0)


def _add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def _sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return Neg(b)
    return Sub(a, b)


def _mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Mul(a, b)


def _div(a, b):
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    return Div(a, b)


def _neg(a):
    if _is_const(a, 0.0):
        return ZERO
    return Neg(a)


def symbolic_diff(e: Expr, i: int) -> Expr:
    """Exact partial derivative of ``e`` in variable ``i``."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == i else ZERO
    if isinstance(e, Add):
        return _add(symbolic_diff(e.left, i), symbolic_diff(e.right, i))
    if isinstance(e, Sub):
        return _sub(symbolic_diff(e.left, i), symbolic_diff(e.right, i))
    if isinstance(e, Neg):
        return _neg(symbolic_diff(e.operand, i))
    if isinstance(e, Mul):
        da, db = symbolic_diff(e.left, i), symbolic_diff(e.right, i)
        return _add(_mul(da, e.right), _mul(e.left, db))
    if isinstance(e, Div):
        # (a/b)' = (a' b - a b') / b^2
        da, db = symbolic_diff(e.left, i), symbolic_diff(e.right, i)
        num = _sub(_mul(da, e.right), _mul(e.left, db))
        return _div(num, PowInt(e.right, 2))
    if isinstance(e, PowInt):
        k = e.exponent
        if k == 0:
            return ZERO
        db = symbolic_diff(e.base, i)
        if k == 1:
            return db
        inner = e.base if k == 2 else PowInt(e.base, k - 1)
        return _mul(_mul(Const(float(k)), inner), db)
    raise TypeError(f"not an expression node: {e!r}")


def shadow(e: Expr) -> Expr:
    """The standard function st(e): every constant replaced by its standard part."""
    if isinstance(e, Const):
        v = e.value
        return Const(v.st() if isinstance(v, Hyperreal) else float(v))
    if isinstance(e, Var):
        return e
    if isinstance(e, _BINARY):
        return type(e)(shadow(e.left), shadow(e.right))
    if isinstance(e, Neg):
        return Neg(shadow(e.operand))
    if isinstance(e, PowInt):
        return PowInt(shadow(e.base), e.exponent)
    raise TypeError(f"not an expression node: {e!r}")


# -- problem files --------------------------------------------------------


@dataclass
class ProblemDef:
    generators: GeneratorSet
    vars: tuple[str, ...]
    objective: Expr
    constraints: list[Expr] = field(default_factory=list)
    order: int = DEFAULT_ORDER
    tolerance: Tolerance = field(default_factory=Tolerance)
    objective_text: str = ""
    constraint_texts: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.vars)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def check_dimensions(self):
        if self.m >= self.n:
            raise ProblemError(
                f"too many constraints: m={self.m} must be smaller than n={self.n}"
            )

    @classmethod
    def from_strings(cls, generators, vars, objective, constraints=(), order=DEFAULT_ORDER,
                     tol=DEFAULT_TOL) -> ProblemDef:
        gens = generators if isinstance(generators, GeneratorSet) else GeneratorSet(generators)
        vars = tuple(vars)
        _check_names(gens, vars)
        return cls(
            generators=gens,
            vars=vars,
            objective=parse(objective, vars, gens, order),
            constraints=[parse(c, vars, gens, order) for c in constraints],
            order=order,
            tolerance=Tolerance(tol),
            objective_text=objective,
            constraint_texts=list(constraints),
        )


def _check_names(gens: GeneratorSet, vars: Sequence[str]):
    if not vars:
        raise ProblemError("at least one variable is required")
    for v in vars:
        if not v.isidentifier():
            raise ProblemError(f"invalid variable name {v!r}")
    if len(set(vars)) != len(vars):
        raise ProblemError(f"duplicate variable names in {list(vars)!r}")
    clash = set(vars) & set(gens.names)
    if clash:
        raise ProblemError(f"names used as both variable and generator: {sorted(clash)}")


_KEYS = {"generators", "vars", "objective", "constraint", "trunc", "tol"}


def _split_names(value: str, line: int, key: str) -> list[str]:
    names = [s.strip() for s in value.split(",")] if value.strip() else []
    for s in names:
        if not s.isidentifier():
            raise ProblemError(f"line {line}: invalid name {s!r} in {key}")
    return names


def parse_problem(text: str) -> ProblemDef:
    """Parse the line-oriented ``key: value`` problem format."""
    single: dict[str, tuple[str, int, int]] = {}
    constraints: list[tuple[str, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        raw_key, sep, value = line.partition(":")
        if not sep:
            raise ProblemError(f"line {lineno}: expected 'key: value'")
        key = raw_key.strip()
        if key not in _KEYS:
            raise ProblemError(f"line {lineno}: unknown key {key!r}")
        col = len(raw_key) + 2 + len(value) - len(value.lstrip())
        entry = (value.strip(), lineno, col)
        if key == "constraint":
            constraints.append(entry)
        elif key in single:
            raise ProblemError(f"line {lineno}: duplicate key {key!r}")
        else:
            single[key] = entry
    for key in ("generators", "vars", "objective"):
        if key not in single:
            raise ProblemError(f"missing required key {key!r}")

    gens = GeneratorSet(_split_names(single["generators"][0], single["generators"][1], "generators"))
    vars = tuple(_split_names(single["vars"][0], single["vars"][1], "vars"))
    _check_names(gens, vars)

    order = DEFAULT_ORDER
    if "trunc" in single:
        value, lineno, _ = single["trunc"]
        try:
            order = int(value)
        except ValueError:
            raise ProblemError(f"line {lineno}: trunc must be an integer") from None
        if order < 1:
            raise ProblemError(f"line {lineno}: trunc must be positive")
    tol = DEFAULT_TOL
    if "tol" in single:
        value, lineno, _ = single["tol"]
        try:
            tol = float(value)
            Tolerance(tol)
        except ValueError:
            raise ProblemError(f"line {lineno}: tol must be a nonnegative number") from None

    def expr_of(entry):
        value, lineno, col = entry
        return parse(value, vars, gens, order, line=lineno, column=col)

    return ProblemDef(
        generators=gens,
        vars=vars,
        objective=expr_of(single["objective"]),
        constraints=[expr_of(c) for c in constraints],
        order=order,
        tolerance=Tolerance(tol),
        objective_text=single["objective"][0],
        constraint_texts=[c[0] for c in constraints],
    )


def load_problem(path: str | Path) -> ProblemDef:
    return parse_problem(Path(path).read_text(encoding="utf-8"))

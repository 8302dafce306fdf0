"""Hamiltonian expressions: parsing, printing, differentiation, compilation.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom (('^' | '**') ['-'] INT)?
    atom   := NUMBER | 'pi' | VAR | FUNC '(' expr ')' | '(' expr ')'

Variables are ``t``, ``x``, ``y``; functions are ``sin``, ``cos``, ``exp``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

VARIABLES = ("t", "x", "y")
FUNCTIONS = ("sin", "cos", "exp")


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class EvaluationError(ArithmeticError):
    pass


# ------------------------------------------------------------------ AST

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"


Expr = Const | Pi | Var | Neg | BinOp | Pow | Func

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value:
            got = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, got {got}", pos)

    def parse(self) -> Expr:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            kind, val, pos = self.take()
            if kind != "num" or not re.fullmatch(r"\d+", val):
                raise ParseError("exponent must be an integer literal", pos)
            return Pow(base, sign * int(val))
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val == "pi":
                return Pi()
            if val in VARIABLES:
                return Var(val)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(val, arg)
            raise ParseError(f"unknown identifier {val!r}", pos)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {what}", pos)


def parse_expr(text: str) -> Expr:
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    return _Parser(text).parse()


def to_text(node: Expr) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Pow):
        return f"({to_text(node.base)}^{node.exponent})"
    if isinstance(node, Func):
        return f"{node.name}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def free_variables(node: Expr) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset([node.name])
    if isinstance(node, (Const, Pi)):
        return frozenset()
    if isinstance(node, (Neg, Func)):
        return free_variables(node.arg)
    if isinstance(node, Pow):
        return free_variables(node.base)
    return free_variables(node.left) | free_variables(node.right)


# ------------------------------------------------------------ simplifier

def const(v: float) -> Expr:
    return Const(float(v)) if v >= 0 else Neg(Const(float(-v)))


def _value(node: Expr) -> float | None:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Pi):
        return math.pi
    if isinstance(node, Neg):
        v = _value(node.arg)
        return None if v is None else -v
    return None


def neg(a: Expr) -> Expr:
    v = _value(a)
    if v is not None:
        return const(-v)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    va, vb = _value(a), _value(b)
    if va is not None and vb is not None:
        return const(va + vb)
    if va == 0:
        return b
    if vb == 0:
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    va, vb = _value(a), _value(b)
    if va is not None and vb is not None:
        return const(va - vb)
    if vb == 0:
        return a
    if va == 0:
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    va, vb = _value(a), _value(b)
    if va is not None and vb is not None:
        return const(va * vb)
    if va == 0 or vb == 0:
        return Const(0.0)
    if va == 1:
        return b
    if vb == 1:
        return a
    if va == -1:
        return neg(b)
    if vb == -1:
        return neg(a)
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    va, vb = _value(a), _value(b)
    if va == 0:
        return Const(0.0)
    if vb == 1:
        return a
    if va is not None and vb is not None and vb != 0:
        return const(va / vb)
    return BinOp("/", a, b)


def power(a: Expr, n: int) -> Expr:
    if n == 0:
        return Const(1.0)
    if n == 1:
        return a
    va = _value(a)
    if va is not None and (va != 0 or n > 0):
        return const(va**n)
    return Pow(a, n)


# --------------------------------------------------------- differentiation

def differentiate(node: Expr, var: str) -> Expr:
    if var not in VARIABLES:
        raise ValueError(f"cannot differentiate with respect to {var!r}")
    return _diff(node, var)


def _diff(node: Expr, v: str) -> Expr:
    if isinstance(node, (Const, Pi)):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0 if node.name == v else 0.0)
    if isinstance(node, Neg):
        return neg(_diff(node.arg, v))
    if isinstance(node, BinOp):
        a, b = node.left, node.right
        da, db = _diff(a, v), _diff(b, v)
        if node.op == "+":
            return add(da, db)
        if node.op == "-":
            return sub(da, db)
        if node.op == "*":
            return add(mul(da, b), mul(a, db))
        # quotient rule
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    if isinstance(node, Pow):
        return mul(mul(Const(float(node.exponent)), power(node.base, node.exponent - 1)),
                   _diff(node.base, v))
    if isinstance(node, Func):
        inner = _diff(node.arg, v)
        if node.name == "sin":
            outer = Func("cos", node.arg)
        elif node.name == "cos":
            outer = neg(Func("sin", node.arg))
        else:
            outer = node
        return mul(outer, inner)
    raise TypeError(f"not an expression node: {node!r}")


def substitute(node: Expr, mapping: dict[str, Expr]) -> Expr:
    """Replace variables by expressions."""
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, (Const, Pi)):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, mapping))
    if isinstance(node, Func):
        return Func(node.name, substitute(node.arg, mapping))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, mapping), node.exponent)
    return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))


# ------------------------------------------------------------- evaluation

def _checked_div(a, b):
    b_arr = np.asarray(b)
    if np.any(b_arr == 0):
        raise EvaluationError("division by zero in Hamiltonian expression")
    return a / b


def _checked_pow(a, n):
    if n < 0:
        return _checked_div(1.0, a ** (-n))
    return a**n


def _source(node: Expr) -> str:
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Pi):
        return repr(math.pi)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_source(node.arg)})"
    if isinstance(node, BinOp):
        if node.op == "/":
            return f"_div({_source(node.left)}, {_source(node.right)})"
        return f"({_source(node.left)} {node.op} {_source(node.right)})"
    if isinstance(node, Pow):
        return f"_pow({_source(node.base)}, {node.exponent})"
    if isinstance(node, Func):
        return f"_np.{node.name}({_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


@lru_cache(maxsize=512)
def compile_expr(node: Expr) -> Callable:
    """Compile to a vectorized ``f(t, x, y)``; the result broadcasts."""
    src = f"lambda t, x, y: {_source(node)} + _zero(t, x, y)"
    env = {"_np": np, "_div": _checked_div, "_pow": _checked_pow, "_zero": _zero}
    return eval(src, env)  # noqa: S307 - source generated from a validated AST


def _emit(node: Expr, memo: dict, lines: list) -> str:
    """Emit one assignment per distinct subtree; returns the name holding it."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Pi):
        return repr(math.pi)
    if isinstance(node, Var):
        return node.name
    key = node
    if key in memo:
        return memo[key]
    if isinstance(node, Neg):
        rhs = f"-{_emit(node.arg, memo, lines)}"
    elif isinstance(node, BinOp):
        a, b = _emit(node.left, memo, lines), _emit(node.right, memo, lines)
        rhs = f"_div({a}, {b})" if node.op == "/" else f"{a} {node.op} {b}"
    elif isinstance(node, Pow):
        a = _emit(node.base, memo, lines)
        rhs = f"{a} ** {node.exponent}" if node.exponent >= 0 else f"_pow({a}, {node.exponent})"
    elif isinstance(node, Func):
        rhs = f"_np.{node.name}({_emit(node.arg, memo, lines)})"
    else:
        raise TypeError(f"not an expression node: {node!r}")
    name = f"_v{len(memo)}"
    memo[key] = name
    lines.append(f"    {name} = {rhs}")
    return name


@lru_cache(maxsize=256)
def compile_many(nodes: tuple) -> Callable:
    """Compile several expressions into one ``f(t, x, y) -> tuple`` sharing subexpressions.

    Entries that do not depend on the inputs come back as Python floats.
    """
    memo: dict = {}
    lines: list = []
    names = [_emit(n, memo, lines) for n in nodes]
    src = "def _f(t, x, y):\n" + "\n".join(lines + [f"    return ({', '.join(names)},)"]) + "\n"
    env = {"_np": np, "_div": _checked_div, "_pow": _checked_pow}
    exec(src, env)  # noqa: S102 - source generated from a validated AST
    return env["_f"]


def _zero(t, x, y):
    return np.zeros(np.broadcast(np.asarray(t), np.asarray(x), np.asarray(y)).shape)


def evaluate(node: Expr, t=0.0, x=0.0, y=0.0):
    return compile_expr(node)(t, x, y)


# ----------------------------------------------------------- Hamiltonians

@dataclass(frozen=True)
class ChartFunction:
    """An expression with its first and second spatial derivatives compiled."""

    expr: Expr
    H: Callable = field(repr=False, compare=False)
    Hx: Callable = field(repr=False, compare=False)
    Hy: Callable = field(repr=False, compare=False)
    Hxx: Callable = field(repr=False, compare=False)
    Hxy: Callable = field(repr=False, compare=False)
    Hyy: Callable = field(repr=False, compare=False)
    derivatives: Callable = field(repr=False, compare=False)  # -> (Hx, Hy, Hxx, Hxy, Hyy)

    @classmethod
    def build(cls, expr: Expr) -> "ChartFunction":
        dx = differentiate(expr, "x")
        dy = differentiate(expr, "y")
        parts = [expr, dx, dy, differentiate(dx, "x"), differentiate(dx, "y"), differentiate(dy, "y")]
        return cls(expr, *(compile_expr(p) for p in parts), compile_many(tuple(parts[1:])))


@dataclass(frozen=True)
class HamiltonianSpec:
    """Hamiltonian given per chart.  Chart ids are 'T' (torus) or 'N'/'S'."""

    charts: dict
    text: str = ""

    def __hash__(self):
        return hash((self.text, tuple(sorted((k, to_text(v.expr)) for k, v in self.charts.items()))))

    def chart(self, name: str) -> ChartFunction:
        return self.charts[name]

    @property
    def autonomous(self) -> bool:
        return all("t" not in free_variables(c.expr) for c in self.charts.values())

    def texts(self) -> dict[str, str]:
        return {k: to_text(v.expr) for k, v in sorted(self.charts.items())}

    def map_exprs(self, fn: Callable[[Expr], Expr], text: str = "") -> "HamiltonianSpec":
        return HamiltonianSpec({k: ChartFunction.build(fn(v.expr)) for k, v in self.charts.items()}, text)


def south_from_north(expr: Expr, R: float) -> Expr:
    """Rewrite a north-chart expression in south-chart coordinates (w = R^2/z)."""
    u, v = Var("x"), Var("y")
    r2 = BinOp("+", Pow(u, 2), Pow(v, 2))
    R2 = const(R * R)
    return substitute(expr, {"x": BinOp("/", BinOp("*", R2, u), r2),
                             "y": Neg(BinOp("/", BinOp("*", R2, v), r2))})


def make_hamiltonian(model, source, check_overlap: bool = True) -> HamiltonianSpec:
    """Build a HamiltonianSpec from text or {north, south} texts."""
    if model.is_sphere:
        if isinstance(source, dict):
            unknown = set(source) - {"north", "south"}
            if unknown or "north" not in source or "south" not in source:
                raise ValueError("sphere Hamiltonian tables need exactly 'north' and 'south'")
            north, south = parse_expr(source["north"]), parse_expr(source["south"])
            text = f"north: {source['north']}; south: {source['south']}"
        else:
            north = parse_expr(source)
            south = south_from_north(north, model.size)
            text = str(source)
        spec = HamiltonianSpec({"N": ChartFunction.build(north), "S": ChartFunction.build(south)}, text)
        if check_overlap and isinstance(source, dict):
            check_chart_agreement(model, spec)
        return spec
    if isinstance(source, dict):
        raise ValueError("torus Hamiltonians take a single expression")
    return HamiltonianSpec({"T": ChartFunction.build(parse_expr(source))}, str(source))


def check_chart_agreement(model, spec: HamiltonianSpec, tol: float = 1e-8) -> float:
    """Largest north/south disagreement on an overlap sample; raises above tol."""
    from .geometry import sphere_transition

    R = model.size
    rng = np.random.default_rng(7)
    ang = rng.uniform(0, 2 * np.pi, 400)
    rad = R * rng.uniform(0.3, 3.0, 400)
    z = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)
    w = sphere_transition(z, R)
    tt = rng.uniform(0, 1, 400)
    hn = spec.chart("N").H(tt, z[:, 0], z[:, 1])
    hs = spec.chart("S").H(tt, w[:, 0], w[:, 1])
    err = float(np.max(np.abs(hn - hs)))
    if err > tol * max(1.0, float(np.max(np.abs(hn)))):
        raise ValueError(f"north and south expressions disagree on the overlap by {err:.3g}")
    return err


def time_reversed(spec: HamiltonianSpec) -> HamiltonianSpec:
    """H~(t, x) = -H(1 - t, x)."""
    flip = {"t": BinOp("-", Const(1.0), Var("t"))}
    return spec.map_exprs(lambda e: Neg(substitute(e, flip)), f"-({spec.text})(1-t)")


def shifted(spec: HamiltonianSpec, r: str | Expr) -> HamiltonianSpec:
    """H + r(t) for a function of time only."""
    r_expr = parse_expr(r) if isinstance(r, str) else r
    if free_variables(r_expr) - {"t"}:
        raise ValueError("shift must depend on t only")
    return spec.map_exprs(lambda e: BinOp("+", e, r_expr), f"({spec.text}) + ({to_text(r_expr)})")


def scaled(spec: HamiltonianSpec, c: float) -> HamiltonianSpec:
    return spec.map_exprs(lambda e: BinOp("*", const(c), e), f"{c}*({spec.text})")

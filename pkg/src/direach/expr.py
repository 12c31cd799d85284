"""Symbolic expressions over state variables.

Nodes are hash-consed: building the same tree twice yields the same object,
so identity doubles as structural equality and shared subtrees are evaluated
once per call.  Rational constants are kept exactly as ``Fraction``.
"""

from __future__ import annotations

import math
import weakref
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import interval as iv
from .exceptions import DimensionError, DomainError, ParseError
from .interval import Interval, IntervalBox
from .taylor import TaylorModel, TaylorModelVector

OPS = ("var", "const", "add", "sub", "mul", "neg", "pow", "sin", "cos", "exp", "div")
FUNCTIONS = ("sin", "cos", "exp")

_INTERN: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


class Expr:
    __slots__ = ("op", "children", "payload", "__weakref__")

    def __init__(self, op: str, children: tuple, payload):
        self.op = op
        self.children = children
        self.payload = payload

    # operator sugar, mostly for tests and catalog construction
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n: int):
        return power(self, n)

    def __repr__(self) -> str:
        return f"Expr({to_string(self)!r})"

    def __reduce__(self):
        return (parse, (to_string(self, [f"x{i}" for i in range(max_var_index(self) + 1)]),
                        [f"x{i}" for i in range(max_var_index(self) + 1)]))

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    def is_zero(self) -> bool:
        return self.op == "const" and self.payload == 0


def _make(op: str, children: tuple = (), payload=None) -> Expr:
    key = (op, payload, tuple(id(c) for c in children))
    node = _INTERN.get(key)
    if node is None:
        node = Expr(op, children, payload)
        _INTERN[key] = node
    return node


def _lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, float):
        return const(Fraction(x))
    return const(x)


# -- smart constructors --------------------------------------------------

def var(index: int) -> Expr:
    if index < 0:
        raise DimensionError("variable index must be non-negative")
    return _make("var", (), int(index))


def const(value) -> Expr:
    return _make("const", (), Fraction(value))


ZERO = const(0)
ONE = const(1)


def add(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        return const(a.payload + b.payload)
    if a.is_zero():
        return b
    if b.is_zero():
        return a
    return _make("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        return const(a.payload - b.payload)
    if b.is_zero():
        return a
    if a.is_zero():
        return neg(b)
    if a is b:
        return ZERO
    return _make("sub", (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        return const(a.payload * b.payload)
    if a.is_zero() or b.is_zero():
        return ZERO
    if a is ONE:
        return b
    if b is ONE:
        return a
    if b.is_const:
        a, b = b, a
    if a.is_const:
        if b.op == "mul" and b.children[0].is_const:
            return mul(const(a.payload * b.children[0].payload), b.children[1])
        if b.op == "neg":
            return mul(const(-a.payload), b.children[0])
    return _make("mul", (a, b))


def neg(a: Expr) -> Expr:
    if a.is_const:
        return const(-a.payload)
    if a.op == "mul" and a.children[0].is_const:
        return mul(const(-a.children[0].payload), a.children[1])
    return _make("neg", (a,))


def power(a: Expr, n: int) -> Expr:
    if int(n) != n or n < 0:
        raise DomainError(f"only non-negative integer powers are supported, got {n}")
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return a
    if a.is_const:
        return const(a.payload ** n)
    return _make("pow", (a,), n)


def div(a: Expr, b: Expr) -> Expr:
    if b.is_const:
        if b.payload == 0:
            raise DomainError("division by the constant zero")
        if a.is_const:
            return const(a.payload / b.payload)
        if b is ONE:
            return a
    if a.is_zero():
        return ZERO
    return _make("div", (a, b))


def sin(a: Expr) -> Expr:
    if a.is_zero():
        return ZERO
    return _make("sin", (a,))


def cos(a: Expr) -> Expr:
    if a.is_zero():
        return ONE
    return _make("cos", (a,))


def exp(a: Expr) -> Expr:
    if a.is_zero():
        return ONE
    return _make("exp", (a,))


_UNARY = {"sin": sin, "cos": cos, "exp": exp}


# -- structure -------------------------------------------------------------

def max_var_index(e: Expr) -> int:
    best = -1
    stack = [e]
    seen = set()
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if node.op == "var":
            best = max(best, node.payload)
        stack.extend(node.children)
    return best


def substitute(e: Expr, mapping: Callable[[int], Expr]) -> Expr:
    """Replace every variable ``x_i`` by ``mapping(i)``."""
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        op = node.op
        if op == "var":
            out = mapping(node.payload)
        elif op == "const":
            out = node
        else:
            kids = [go(c) for c in node.children]
            out = _rebuild(node, kids)
        memo[id(node)] = out
        return out

    return go(e)


def _rebuild(node: Expr, kids: list) -> Expr:
    op = node.op
    if op == "add":
        return add(*kids)
    if op == "sub":
        return sub(*kids)
    if op == "mul":
        return mul(*kids)
    if op == "div":
        return div(*kids)
    if op == "neg":
        return neg(kids[0])
    if op == "pow":
        return power(kids[0], node.payload)
    return _UNARY[op](kids[0])


# -- differentiation -------------------------------------------------------

def diff(e: Expr, index: int) -> Expr:
    """Exact partial derivative with respect to ``x_index``."""
    memo: dict[int, Expr] = {}

    def d(node: Expr) -> Expr:
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        op = node.op
        if op == "var":
            out = ONE if node.payload == index else ZERO
        elif op == "const":
            out = ZERO
        elif op == "add":
            out = add(d(node.children[0]), d(node.children[1]))
        elif op == "sub":
            out = sub(d(node.children[0]), d(node.children[1]))
        elif op == "mul":
            a, b = node.children
            out = add(mul(d(a), b), mul(a, d(b)))
        elif op == "neg":
            out = neg(d(node.children[0]))
        elif op == "pow":
            a = node.children[0]
            n = node.payload
            out = mul(mul(const(n), power(a, n - 1)), d(a))
        elif op == "sin":
            a = node.children[0]
            out = mul(cos(a), d(a))
        elif op == "cos":
            a = node.children[0]
            out = neg(mul(sin(a), d(a)))
        elif op == "exp":
            a = node.children[0]
            out = mul(node, d(a))
        elif op == "div":
            a, b = node.children
            da, db = d(a), d(b)
            if db.is_zero():
                out = div(da, b)
            else:
                out = div(sub(mul(da, b), mul(a, db)), power(b, 2))
        else:  # pragma: no cover
            raise ValueError(op)
        memo[id(node)] = out
        return out

    return d(e)


def symbolic_jacobian(exprs: Sequence[Expr], n: int | None = None) -> tuple[tuple[Expr, ...], ...]:
    if n is None:
        n = len(exprs)
    return tuple(tuple(diff(e, j) for j in range(n)) for e in exprs)


def symbolic_hessian_norm_exprs(exprs: Sequence[Expr], n: int | None = None):
    """All second partials: ``out[i][j][k] = d^2 exprs[i] / dx_j dx_k``."""
    if n is None:
        n = len(exprs)
    out = []
    for e in exprs:
        grads = [diff(e, j) for j in range(n)]
        out.append(tuple(tuple(diff(g, k) for k in range(n)) for g in grads))
    return tuple(out)


# -- evaluation --------------------------------------------------------------

@lru_cache(maxsize=4096)
def const_interval(q: Fraction) -> Interval:
    return Interval.from_fraction(q)


def eval_interval(e: Expr, box: Sequence[Interval], memo: dict | None = None) -> Interval:
    """Natural interval extension of ``e`` over ``box``."""
    if memo is None:
        memo = {}

    def go(node: Expr) -> Interval:
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        op = node.op
        if op == "var":
            if node.payload >= len(box):
                raise DimensionError(f"variable x{node.payload} outside a {len(box)}-dimensional box")
            out = box[node.payload]
        elif op == "const":
            out = const_interval(node.payload)
        elif op == "add":
            out = go(node.children[0]) + go(node.children[1])
        elif op == "sub":
            out = go(node.children[0]) - go(node.children[1])
        elif op == "mul":
            a, b = node.children
            out = iv.pow_int(go(a), 2) if a is b else go(a) * go(b)
        elif op == "neg":
            out = -go(node.children[0])
        elif op == "pow":
            out = iv.pow_int(go(node.children[0]), node.payload)
        elif op == "div":
            out = go(node.children[0]) / go(node.children[1])
        elif op == "sin":
            out = iv.sin(go(node.children[0]))
        elif op == "cos":
            out = iv.cos(go(node.children[0]))
        elif op == "exp":
            out = iv.exp(go(node.children[0]))
        else:  # pragma: no cover
            raise ValueError(op)
        memo[id(node)] = out
        return out

    return go(e)


def eval_interval_many(exprs: Sequence[Expr], box: Sequence[Interval]) -> list[Interval]:
    memo: dict = {}
    return [eval_interval(e, box, memo) for e in exprs]


SERIES_ORDER = 8


def _tm_series(x: TaylorModel, fn: str, order: int) -> TaylorModel:
    """Validated Taylor expansion of sin/cos/exp around the constant part of ``x``."""
    c = x.constant_term
    r = x.add_constant(-c) if c else x
    rb = r.bound()
    R = rb.mag()
    ci = Interval.point(c)
    if fn == "exp":
        derivs = [iv.exp(ci)] * order
        tail = iv.exp(ci + Interval(-R, R)).hi
    else:
        s, co = iv.sin(ci), iv.cos(ci)
        cycle = [s, co, -s, -co] if fn == "sin" else [co, -s, -co, s]
        derivs = [cycle[k % 4] for k in range(order)]
        if fn == "sin":
            tail_iv = [iv.sin, iv.cos][order % 2](ci + Interval(-R, R))
        else:
            tail_iv = [iv.cos, iv.sin][order % 2](ci + Interval(-R, R))
        tail = min(1.0, tail_iv.mag())
    p = x.num_params
    thr = x.sweep_threshold
    total = TaylorModel.from_interval(derivs[0], p, thr)
    rk = TaylorModel.constant(1.0, p, thr)
    fact = Interval.point(1.0)
    for k in range(1, order):
        rk = rk * r
        fact = fact * Interval.point(float(k))
        total = total + rk.scale_interval(derivs[k] / fact)
    fact = fact * Interval.point(float(order))
    rem = (Interval.point(R) ** order).hi * tail / fact.lo
    rem = iv.up(iv.up(rem) * (1 + 1e-12))
    return total.with_error(iv.up(total.error + rem))


def _tm_reciprocal(x: TaylorModel, order: int) -> TaylorModel:
    b = x.bound()
    if b.lo <= 0.0 <= b.hi:
        raise DomainError(f"division by a Taylor model whose range {b} contains zero")
    c = x.constant_term
    if c == 0.0:
        c = b.mid
    r = x.add_constant(-c)
    ci = Interval.point(c)
    inv = Interval.point(1.0) / ci
    p = x.num_params
    thr = x.sweep_threshold
    total = TaylorModel.from_interval(inv, p, thr)
    rk = TaylorModel.constant(1.0, p, thr)
    coef = inv
    for _ in range(1, order):
        rk = rk * r
        coef = -(coef * inv)
        total = total + rk.scale_interval(coef)
    # remainder r^N / xi^(N+1) with xi between c and c + r, all inside the range b
    R = r.bound().mag()
    mig = b.mig()
    rem = (Interval.point(R) ** order).hi / (Interval.point(mig) ** (order + 1)).lo
    return total.with_error(iv.up(iv.up(total.error + rem) * (1 + 1e-12)))


def eval_taylor_model(
    e: Expr,
    args: TaylorModelVector | Sequence[TaylorModel],
    memo: dict | None = None,
    order: int = SERIES_ORDER,
) -> TaylorModel:
    """Taylor model of ``e`` composed with ``args``."""
    if memo is None:
        memo = {}
    args = list(args)
    if not args:
        raise DimensionError("at least one argument model is required")
    p = args[0].num_params
    thr = args[0].sweep_threshold

    def go(node: Expr) -> TaylorModel:
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        op = node.op
        if op == "var":
            if node.payload >= len(args):
                raise DimensionError(f"variable x{node.payload} but only {len(args)} argument models")
            out = args[node.payload]
        elif op == "const":
            out = TaylorModel.from_interval(const_interval(node.payload), p, thr)
        elif op in ("add", "sub"):
            a, b = node.children
            ta = go(a)
            if b.is_const and const_interval(b.payload).lo == const_interval(b.payload).hi:
                v = const_interval(b.payload).lo
                out = ta.add_constant(v if op == "add" else -v)
            else:
                tb = go(b)
                out = ta + tb if op == "add" else ta - tb
        elif op == "mul":
            a, b = node.children
            if a.is_const or b.is_const:
                k, other = (a, b) if a.is_const else (b, a)
                ki = const_interval(k.payload)
                to = go(other)
                out = to.scale(ki.lo) if ki.lo == ki.hi else to.scale_interval(ki)
            else:
                out = go(a) * go(b)
        elif op == "neg":
            out = -go(node.children[0])
        elif op == "pow":
            out = go(node.children[0]) ** node.payload
        elif op == "div":
            a, b = node.children
            if b.is_const:
                ki = Interval.point(1.0) / const_interval(b.payload)
                ta = go(a)
                out = ta.scale(ki.lo) if ki.lo == ki.hi else ta.scale_interval(ki)
            else:
                out = go(a) * _tm_reciprocal(go(b), order)
        elif op in FUNCTIONS:
            out = _tm_series(go(node.children[0]), op, order)
        else:  # pragma: no cover
            raise ValueError(op)
        memo[id(node)] = out
        return out

    return go(e)


def eval_taylor_model_many(exprs: Sequence[Expr], args, order: int = SERIES_ORDER) -> list[TaylorModel]:
    memo: dict = {}
    return [eval_taylor_model(e, args, memo, order) for e in exprs]


def eval_float(e: Expr, x: Sequence[float]) -> float:
    return float(compile_numpy([e], max(len(x), 1))(np.asarray(x, dtype=float).reshape(-1, 1))[0, 0])


def _np_source(e: Expr, memo: dict, lines: list) -> str:
    hit = memo.get(id(e))
    if hit is not None:
        return hit
    op = e.op
    if op == "var":
        return f"x[{e.payload}]"
    if op == "const":
        return repr(float(e.payload))
    kids = [_np_source(c, memo, lines) for c in e.children]
    if op == "add":
        src = f"({kids[0]} + {kids[1]})"
    elif op == "sub":
        src = f"({kids[0]} - {kids[1]})"
    elif op == "mul":
        src = f"({kids[0]} * {kids[1]})"
    elif op == "div":
        src = f"({kids[0]} / {kids[1]})"
    elif op == "neg":
        src = f"(-{kids[0]})"
    elif op == "pow":
        src = f"({kids[0]} ** {e.payload})"
    else:
        src = f"np.{op}({kids[0]})"
    if e.children and len(src) > 24:
        name = f"t{len(lines)}"
        lines.append(f"    {name} = {src}")
        src = name
    memo[id(e)] = src
    return src


def compile_numpy(exprs: Sequence[Expr], n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised evaluator: ``fn(x)`` with ``x`` of shape (n, N) returns shape (len(exprs), N)."""
    memo: dict = {}
    lines: list[str] = []
    outs = [_np_source(e, memo, lines) for e in exprs]
    body = "\n".join(lines)
    rows = ", ".join(f"np.broadcast_to({o}, shape)" for o in outs)
    src = (
        "def _fn(x):\n"
        "    shape = np.shape(x[0]) if len(x) else ()\n"
        f"{body}\n"
        f"    return np.array([{rows}], dtype=float)\n"
    )
    scope = {"np": np}
    exec(compile(src, "<expr>", "exec"), scope)
    fn = scope["_fn"]
    fn.source = src
    return fn


# -- printing ----------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _fmt_const(q: Fraction) -> str:
    if q.denominator == 1 and q >= 0:
        return str(q.numerator)
    if q.denominator == 1:
        return f"({q.numerator})"
    return f"({q.numerator}/{q.denominator})"


def to_string(e: Expr, names: Sequence[str] | None = None) -> str:
    def name(i: int) -> str:
        return names[i] if names is not None else f"x{i}"

    def prec(node: Expr) -> int:
        return _PREC.get(node.op, 5)

    def go(node: Expr) -> str:
        op = node.op
        if op == "var":
            return name(node.payload)
        if op == "const":
            return _fmt_const(node.payload)
        if op in FUNCTIONS:
            return f"{op}({go(node.children[0])})"
        if op == "neg":
            c = node.children[0]
            s = go(c)
            return "-" + (f"({s})" if prec(c) < 3 else s)
        if op == "pow":
            c = node.children[0]
            s = go(c)
            return (f"({s})" if prec(c) <= 4 else s) + f"^{node.payload}"
        a, b = node.children
        p = _PREC[op]
        sa, sb = go(a), go(b)
        if prec(a) < p:
            sa = f"({sa})"
        if prec(b) < p or (prec(b) == p and op in ("sub", "div", "add", "mul")):
            # right operands at equal precedence are parenthesised so that
            # the parser (left-associative) rebuilds the same tree
            sb = f"({sb})"
        sym = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}[op]
        return sa + sym + sb

    return go(e)


# -- parsing -------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str, names: Sequence[str], line: int, column: int, source: str):
        self.text = text
        self.names = {n: i for i, n in enumerate(names)}
        self.pos = 0
        self.line = line
        self.col0 = column
        self.source = source

    def error(self, msg: str, pos: int | None = None) -> ParseError:
        p = self.pos if pos is None else pos
        return ParseError(msg, self.line, self.col0 + p + 1, self.source)

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            found = self.peek() or "end of input"
            raise self.error(f"expected '{ch}' but found '{found}'")
        self.pos += 1

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek():
            raise self.error(f"unexpected '{self.peek()}'")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            at = self.pos
            self.pos += 1
            rhs = self.unary()
            if op == "*":
                e = mul(e, rhs)
            else:
                try:
                    e = div(e, rhs)
                except DomainError as exc:
                    raise self.error(str(exc), at) from None
        return e

    def unary(self) -> Expr:
        ch = self.peek()
        if ch == "-":
            self.pos += 1
            return neg(self.unary())
        if ch == "+":
            self.pos += 1
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            self.skip()
            at = self.pos
            ex = self.unary()
            if not ex.is_const or ex.payload.denominator != 1 or ex.payload < 0:
                raise self.error("exponent must be a non-negative integer constant", at)
            return power(base, int(ex.payload))
        return base

    def atom(self) -> Expr:
        ch = self.peek()
        start = self.pos
        if not ch:
            raise self.error("unexpected end of expression")
        if ch == "(":
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        if ch.isdigit() or ch == ".":
            return self.number()
        if ch.isalpha() or ch == "_":
            while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
                self.pos += 1
            word = self.text[start:self.pos]
            if word in FUNCTIONS and self.peek() == "(":
                self.pos += 1
                arg = self.expr()
                self.expect(")")
                return _UNARY[word](arg)
            if word in self.names:
                return var(self.names[word])
            raise self.error(f"unknown identifier '{word}'", start)
        raise self.error(f"unexpected '{ch}'")

    def number(self) -> Expr:
        start = self.pos
        t = self.text
        while self.pos < len(t) and (t[self.pos].isdigit() or t[self.pos] == "."):
            self.pos += 1
        if self.pos < len(t) and t[self.pos] in "eE":
            save = self.pos
            self.pos += 1
            if self.pos < len(t) and t[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(t) and t[self.pos].isdigit():
                while self.pos < len(t) and t[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = save
        lit = t[start:self.pos]
        try:
            return const(Fraction(lit))
        except (ValueError, ZeroDivisionError):
            raise self.error(f"malformed number '{lit}'", start) from None


def parse(text: str, names: Sequence[str], line: int = 1, column: int = 1, source: str = "<string>") -> Expr:
    """Parse an infix expression over the variable ``names``.

    Grammar: ``+ - * /``, ``^`` with a non-negative integer exponent, unary
    minus, parentheses and the functions sin, cos, exp.  Decimal literals are
    read exactly as rationals.
    """
    return _Parser(text, names, line, column - 1, source).parse()


def split_top_level(text: str, sep: str = ",") -> list[tuple[str, int]]:
    """Split on ``sep`` outside parentheses; returns (piece, offset) pairs."""
    parts = []
    depth = 0
    start = 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append((text[start:i], start))
            start = i + 1
    parts.append((text[start:], start))
    return parts

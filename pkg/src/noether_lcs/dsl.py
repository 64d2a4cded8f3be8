"""Small arithmetic expression language over t, x1..xm, v1..vm.

Recursive-descent parser with the precedence chain ^ > unary minus > * / > + -,
and exact first/second partials by forward-mode jet arithmetic (value, gradient,
Hessian) propagated through the expression tree.  Exponents of ^ must be
constant so second partials stay closed-form.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fields import ScalarField, FDConfig, DEFAULT_FD


class ParseDiagnostic(ValueError):
    """Parse failure with the byte offset and offending token."""

    def __init__(self, offset: int, token: str, message: str):
        self.offset = offset
        self.token = token
        self.message = message
        super().__init__(f"at offset {offset} near {token!r}: {message}")


class DomainError(ArithmeticError):
    """Evaluation hit an invalid argument (log/sqrt/division)."""


class NonDifferentiableError(ArithmeticError):
    """abs() evaluated within 1e-12 of its kink; analytic partials unavailable."""


# -- expression tree ----------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # 't' | 'x' | 'v'
    index: int  # 1-based for x/v, 0 for t


@dataclass(frozen=True)
class Unary:
    op: str  # neg sin cos exp log sqrt abs
    operand: "Expression"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * /
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exponent: float


Expression = Const | Var | Unary | Binary | Pow

_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[()+\-*/^]))"
)

_VAR_RE = re.compile(r"^([xv])([0-9]+)$")


class _Parser:
    def __init__(self, source: str, dim: int):
        self.source = source
        self.dim = dim
        self.tokens = []  # (offset, kind, text)
        pos = 0
        while pos < len(source):
            m = _TOKEN_RE.match(source, pos)
            if m is None:
                rest = source[pos:].lstrip()
                if not rest:
                    break
                raise ParseDiagnostic(pos, rest[0], "unknown token")
            kind = m.lastgroup
            self.tokens.append((m.start(kind), kind, m.group(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (len(self.source), "end", "")

    def advance(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect_op(self, op: str):
        off, kind, text = self.peek()
        if kind != "op" or text != op:
            raise ParseDiagnostic(off, text or "<end>", f"expected {op!r}")
        self.advance()

    # precedence climbing: sum -> term -> unary -> power -> atom
    def parse(self) -> Expression:
        expr = self.parse_sum()
        off, kind, text = self.peek()
        if kind != "end":
            raise ParseDiagnostic(off, text, "unexpected trailing input")
        return expr

    def parse_sum(self) -> Expression:
        node = self.parse_term()
        while True:
            off, kind, text = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = Binary(text, node, self.parse_term())
            else:
                return node

    def parse_term(self) -> Expression:
        node = self.parse_unary()
        while True:
            off, kind, text = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = Binary(text, node, self.parse_unary())
            else:
                return node

    def parse_unary(self) -> Expression:
        off, kind, text = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Unary("neg", self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Expression:
        base = self.parse_atom()
        off, kind, text = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            exponent = self.parse_unary()  # right-associative; sign allowed
            if _has_variables(exponent):
                raise ParseDiagnostic(off, "^", "exponent must be constant")
            return Pow(base, _fold_constant(exponent))
        return base

    def parse_atom(self) -> Expression:
        off, kind, text = self.advance()
        if kind == "num":
            return Const(float(text))
        if kind == "ident":
            if text == "t":
                return Var("t", 0)
            m = _VAR_RE.match(text)
            if m:
                idx = int(m.group(2))
                if not 1 <= idx <= self.dim:
                    raise ParseDiagnostic(
                        off, text, f"index {idx} exceeds dimension {self.dim}"
                    )
                return Var(m.group(1), idx)
            if text in _FUNCTIONS:
                self.expect_op("(")
                arg = self.parse_sum()
                self.expect_op(")")
                return Unary(text, arg)
            raise ParseDiagnostic(off, text, "unknown identifier")
        if kind == "op" and text == "(":
            node = self.parse_sum()
            self.expect_op(")")
            return node
        raise ParseDiagnostic(off, text or "<end>", "expected a value")


def parse(source: str, dim: int) -> Expression:
    """Parse an expression over t, x1..x<dim>, v1..v<dim>."""
    if dim < 1:
        raise ParseDiagnostic(0, source[:1], "dimension must be positive")
    return _Parser(source, dim).parse()


def _has_variables(e: Expression) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, Unary):
        return _has_variables(e.operand)
    if isinstance(e, Binary):
        return _has_variables(e.left) or _has_variables(e.right)
    if isinstance(e, Pow):
        return _has_variables(e.base)
    return False


def _fold_constant(e: Expression) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Unary):
        u = _fold_constant(e.operand)
        return {
            "neg": lambda z: -z,
            "sin": math.sin,
            "cos": math.cos,
            "exp": math.exp,
            "log": math.log,
            "sqrt": math.sqrt,
            "abs": abs,
        }[e.op](u)
    if isinstance(e, Binary):
        a, b = _fold_constant(e.left), _fold_constant(e.right)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return a / b
    if isinstance(e, Pow):
        return _fold_constant(e.base) ** e.exponent
    raise AssertionError(e)


# -- pretty printer -----------------------------------------------------

_PREC = {"+": 10, "-": 10, "*": 20, "/": 20, "neg": 25, "^": 30}


def _prec(e: Expression) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary):
        return _PREC["neg"] if e.op == "neg" else 100
    if isinstance(e, Pow):
        return _PREC["^"]
    return 100


def _num(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def to_string(e: Expression) -> str:
    """Canonical rendering; reparsing the output reproduces the string."""
    if isinstance(e, Const):
        return _num(e.value)
    if isinstance(e, Var):
        return "t" if e.kind == "t" else f"{e.kind}{e.index}"
    if isinstance(e, Unary):
        inner = to_string(e.operand)
        if e.op == "neg":
            if _prec(e.operand) < _PREC["^"] and not isinstance(e.operand, Unary):
                inner = f"({inner})"
            return f"-{inner}"
        return f"{e.op}({inner})"
    if isinstance(e, Pow):
        base = to_string(e.base)
        if _prec(e.base) <= _PREC["^"]:
            base = f"({base})"
        exp = _num(e.exponent)
        if e.exponent < 0:
            exp = f"({exp})"
        return f"{base}^{exp}"
    left = to_string(e.left)
    right = to_string(e.right)
    if _prec(e.left) < _PREC[e.op]:
        left = f"({left})"
    if _prec(e.right) <= _PREC[e.op]:
        right = f"({right})"
    return f"{left}{e.op}{right}"


# -- jet arithmetic -----------------------------------------------------


class _Jet:
    """Truncated Taylor value: scalar, gradient, optional Hessian."""

    __slots__ = ("val", "g", "h")

    def __init__(self, val, g, h):
        self.val = val
        self.g = g
        self.h = h


def _jet_const(value: float, n: int, order: int) -> _Jet:
    return _Jet(value, np.zeros(n), np.zeros((n, n)) if order >= 2 else None)


def _jet_var(value: float, slot: int, n: int, order: int) -> _Jet:
    g = np.zeros(n)
    g[slot] = 1.0
    return _Jet(value, g, np.zeros((n, n)) if order >= 2 else None)


def _jet_add(a: _Jet, b: _Jet, sign: float) -> _Jet:
    h = None if a.h is None else a.h + sign * b.h
    return _Jet(a.val + sign * b.val, a.g + sign * b.g, h)


def _jet_mul(a: _Jet, b: _Jet) -> _Jet:
    h = None
    if a.h is not None:
        h = a.h * b.val + b.h * a.val + np.outer(a.g, b.g) + np.outer(b.g, a.g)
    return _Jet(a.val * b.val, a.g * b.val + b.g * a.val, h)


def _jet_div(a: _Jet, b: _Jet) -> _Jet:
    if b.val == 0.0:
        raise DomainError("division by zero")
    q = a.val / b.val
    g = (a.g - q * b.g) / b.val
    h = None
    if a.h is not None:
        h = (a.h - np.outer(g, b.g) - np.outer(b.g, g) - q * b.h) / b.val
    return _Jet(q, g, h)


def _jet_chain(u: _Jet, f0: float, f1: float, f2: float) -> _Jet:
    h = None
    if u.h is not None:
        h = f1 * u.h + f2 * np.outer(u.g, u.g)
    return _Jet(f0, f1 * u.g, h)


def _jet_pow(u: _Jet, c: float) -> _Jet:
    x = u.val
    if c == 0.0:
        return _jet_chain(u, 1.0, 0.0, 0.0)
    if x == 0.0:
        if c == 1.0:
            return _jet_chain(u, 0.0, 1.0, 0.0)
        if c == 2.0:
            return _jet_chain(u, 0.0, 0.0, 2.0)
        if c > 2.0 and c == int(c):
            return _jet_chain(u, 0.0, 0.0, 0.0)
        raise DomainError(f"0 raised to exponent {c}")
    if x < 0.0 and c != int(c):
        raise DomainError(f"negative base {x} with non-integer exponent {c}")
    f0 = x**c
    f1 = c * x ** (c - 1.0)
    f2 = c * (c - 1.0) * x ** (c - 2.0)
    return _jet_chain(u, f0, f1, f2)


def _jet_unary(op: str, u: _Jet) -> _Jet:
    x = u.val
    if op == "neg":
        h = None if u.h is None else -u.h
        return _Jet(-x, -u.g, h)
    if op == "sin":
        return _jet_chain(u, math.sin(x), math.cos(x), -math.sin(x))
    if op == "cos":
        return _jet_chain(u, math.cos(x), -math.sin(x), -math.cos(x))
    if op == "exp":
        e = math.exp(x)
        return _jet_chain(u, e, e, e)
    if op == "log":
        if x <= 0.0:
            raise DomainError(f"log of non-positive value {x}")
        return _jet_chain(u, math.log(x), 1.0 / x, -1.0 / x**2)
    if op == "sqrt":
        if x < 0.0:
            raise DomainError(f"sqrt of negative value {x}")
        if x == 0.0:
            raise DomainError("sqrt not differentiable at 0")
        s = math.sqrt(x)
        return _jet_chain(u, s, 0.5 / s, -0.25 / (s * x))
    if op == "abs":
        if abs(x) < 1e-12:
            raise NonDifferentiableError("abs evaluated at its kink")
        sgn = 1.0 if x > 0 else -1.0
        return _jet_chain(u, abs(x), sgn, 0.0)
    raise AssertionError(op)


def _eval_jet(e: Expression, t: float, x, v, order: int) -> _Jet:
    m = len(x)
    n = 1 + 2 * m

    def rec(node):
        if isinstance(node, Const):
            return _jet_const(node.value, n, order)
        if isinstance(node, Var):
            if node.kind == "t":
                return _jet_var(t, 0, n, order)
            if node.kind == "x":
                return _jet_var(x[node.index - 1], node.index, n, order)
            return _jet_var(v[node.index - 1], m + node.index, n, order)
        if isinstance(node, Unary):
            return _jet_unary(node.op, rec(node.operand))
        if isinstance(node, Pow):
            return _jet_pow(rec(node.base), node.exponent)
        a, b = rec(node.left), rec(node.right)
        if node.op == "+":
            return _jet_add(a, b, 1.0)
        if node.op == "-":
            return _jet_add(a, b, -1.0)
        if node.op == "*":
            return _jet_mul(a, b)
        return _jet_div(a, b)

    return rec(e)


def _eval_plain(e: Expression, t: float, x, v) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        if e.kind == "t":
            return t
        return float(x[e.index - 1] if e.kind == "x" else v[e.index - 1])
    if isinstance(e, Unary):
        u = _eval_plain(e.operand, t, x, v)
        if e.op == "neg":
            return -u
        if e.op == "log" and u <= 0.0:
            raise DomainError(f"log of non-positive value {u}")
        if e.op == "sqrt" and u < 0.0:
            raise DomainError(f"sqrt of negative value {u}")
        return {
            "sin": math.sin,
            "cos": math.cos,
            "exp": math.exp,
            "log": math.log,
            "sqrt": math.sqrt,
            "abs": abs,
        }[e.op](u)
    if isinstance(e, Pow):
        base = _eval_plain(e.base, t, x, v)
        if base < 0.0 and e.exponent != int(e.exponent):
            raise DomainError(
                f"negative base {base} with non-integer exponent {e.exponent}"
            )
        return base**e.exponent
    a = _eval_plain(e.left, t, x, v)
    b = _eval_plain(e.right, t, x, v)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if b == 0.0:
        raise DomainError("division by zero")
    return a / b


@dataclass(frozen=True)
class EvalResult:
    value: float
    d_t: Optional[float] = None
    d_x: Optional[np.ndarray] = None
    d_v: Optional[np.ndarray] = None
    d2: Optional[dict] = None  # blocks tt, xx, xv, vx, vv


def evaluate(e: Expression, t, x, v, order: int = 0) -> EvalResult:
    """Evaluate with exact partials up to the requested order."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    m = len(x)
    if order == 0:
        return EvalResult(value=float(_eval_plain(e, float(t), x, v)))
    jet = _eval_jet(e, float(t), x, v, order)
    res = {
        "value": float(jet.val),
        "d_t": float(jet.g[0]),
        "d_x": jet.g[1 : m + 1].copy(),
        "d_v": jet.g[m + 1 :].copy(),
    }
    if order >= 2:
        H = jet.h
        res["d2"] = {
            "tt": float(H[0, 0]),
            "xx": H[1 : m + 1, 1 : m + 1].copy(),
            "vv": H[m + 1 :, m + 1 :].copy(),
            "xv": H[1 : m + 1, m + 1 :].copy(),
            "vx": H[m + 1 :, 1 : m + 1].copy(),
        }
    return EvalResult(**res)


def _used_variables(e: Expression, acc=None) -> frozenset:
    if acc is None:
        acc = set()
    if isinstance(e, Var):
        acc.add(e.kind)
    elif isinstance(e, Unary):
        _used_variables(e.operand, acc)
    elif isinstance(e, Binary):
        _used_variables(e.left, acc)
        _used_variables(e.right, acc)
    elif isinstance(e, Pow):
        _used_variables(e.base, acc)
    return frozenset(acc)


def compile_field(source, dim: int, fd: FDConfig = DEFAULT_FD) -> ScalarField:
    """Turn an expression (string or tree) into a ScalarField with exact
    analytic partials.  Near an abs() kink the analytic route is unavailable;
    the field then falls back to finite differences with a warning."""
    expr = parse(source, dim) if isinstance(source, str) else source

    def func(t, x, v):
        return _eval_plain(expr, float(t), x, v)

    def order1(t, x, v):
        return evaluate(expr, t, x, v, order=1)

    def order2(t, x, v):
        return evaluate(expr, t, x, v, order=2)

    def guarded(getter, order_fn, fallback):
        def call(t, x, v):
            try:
                return getter(order_fn(t, x, v))
            except NonDifferentiableError:
                warnings.warn(
                    "abs() within 1e-12 of its kink; falling back to finite "
                    "differences",
                    RuntimeWarning,
                    stacklevel=2,
                )
                return fallback(t, x, v)

        return call

    fd_field = ScalarField(dim=dim, func=func, fd=fd)
    field = ScalarField(
        dim=dim,
        func=func,
        uses=_used_variables(expr),
        d_t=guarded(lambda r: r.d_t, order1, lambda t, x, v: fd_field.partial("t", t, x, v)),
        d_x=guarded(lambda r: r.d_x, order1, lambda t, x, v: fd_field.partial("x", t, x, v)),
        d_v=guarded(lambda r: r.d_v, order1, lambda t, x, v: fd_field.partial("v", t, x, v)),
        d2={
            pair: guarded(
                lambda r, pair=pair: r.d2[pair],
                order2,
                lambda t, x, v, pair=pair: fd_field.second_partial(pair, t, x, v),
            )
            for pair in ("tt", "xx", "vv", "xv", "vx")
        },
        fd=fd,
    )
    object.__setattr__(field, "expression", expr)
    return field

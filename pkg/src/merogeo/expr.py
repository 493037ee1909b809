"""Closed-form complex expressions of one variable.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = atom , [ "^" , [ "-" ] , integer ] ;
    atom    = number | "i" | variable | "exp" , "(" , expr , ")"
            | "(" , expr , ")" ;
    number  = digits , [ "." , digits ] , [ ("e" | "E") , [ "+" | "-" ] , digits ] , [ "i" ] ;

Exponents must be integer literals.  The variable name is fixed per parse
call (``u`` by default).

Evaluation never produces an infinite complex number: when a denominator
(or the base of a negative power) is within ``pole_eps`` of zero, relative to
the numerator scale, :class:`Pole` is raised instead.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

__all__ = [
    "ExprNode", "Const", "Var", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Exp",
    "Jet2", "Pole", "ExprSyntaxError", "ExponentNotInteger",
    "parse", "render", "evaluate", "eval_jet", "evaluate_with",
    "derivative", "substitute", "is_rational", "DEFAULT_POLE_EPS",
]

DEFAULT_POLE_EPS = 1e-12


class Pole(ArithmeticError):
    """Evaluation point sits on (or within ``pole_eps`` of) a pole."""

    def __init__(self, point):
        super().__init__(f"pole at {point!r}")
        self.point = point


class ExprSyntaxError(ValueError):
    def __init__(self, offset: int, expected: str, text: str = ""):
        super().__init__(f"syntax error at byte {offset}: expected {expected}")
        self.offset = offset
        self.expected = expected
        self.text = text


class ExponentNotInteger(ExprSyntaxError):
    def __init__(self, offset: int, text: str = ""):
        ValueError.__init__(self, f"exponent at byte {offset} is not an integer literal")
        self.offset = offset
        self.expected = "integer exponent"
        self.text = text


# ---------------------------------------------------------------------------
# AST

class ExprNode:
    """Base class of the immutable expression tree."""

    __slots__ = ()

    def __str__(self):
        return render(self)

    # compiled evaluators are cached per node (see _compile)
    @cached_property
    def _value_fn(self):
        return _compile(self, jets=False)

    @cached_property
    def _jet_fn(self):
        return _compile(self, jets=True)


@dataclass(frozen=True, eq=True)
class Const(ExprNode):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True, eq=True)
class Var(ExprNode):
    pass


@dataclass(frozen=True, eq=True)
class Neg(ExprNode):
    arg: ExprNode


@dataclass(frozen=True, eq=True)
class Add(ExprNode):
    left: ExprNode
    right: ExprNode


@dataclass(frozen=True, eq=True)
class Sub(ExprNode):
    left: ExprNode
    right: ExprNode


@dataclass(frozen=True, eq=True)
class Mul(ExprNode):
    left: ExprNode
    right: ExprNode


@dataclass(frozen=True, eq=True)
class Div(ExprNode):
    left: ExprNode
    right: ExprNode


@dataclass(frozen=True, eq=True)
class Pow(ExprNode):
    base: ExprNode
    exponent: int

    def __post_init__(self):
        if int(self.exponent) != self.exponent:
            raise TypeError("exponent must be an integer")
        object.__setattr__(self, "exponent", int(self.exponent))


@dataclass(frozen=True, eq=True)
class Exp(ExprNode):
    arg: ExprNode


# ---------------------------------------------------------------------------
# Parsing

_NUMBER = re.compile(r"(\d+(?:\.\d*)?|\.\d+)([eE][+-]?\d+)?(i)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class _Parser:
    def __init__(self, text: str, var: str):
        self.text = text
        self.var = var
        self.pos = 0

    def offset(self, pos=None):
        pos = self.pos if pos is None else pos
        return len(self.text[:pos].encode("utf-8"))

    def fail(self, expected, pos=None):
        raise ExprSyntaxError(self.offset(pos), expected, self.text)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch):
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def parse(self):
        node = self.expr()
        if self.peek():
            self.fail("operator or end of input")
        return node

    def expr(self):
        node = self.term()
        while True:
            if self.take("+"):
                node = Add(node, self.term())
            elif self.take("-"):
                node = Sub(node, self.term())
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            if self.take("*"):
                node = Mul(node, self.unary())
            elif self.take("/"):
                node = Div(node, self.unary())
            else:
                return node

    def unary(self):
        if self.take("-"):
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if not self.take("^"):
            return base
        start = self.pos
        self.skip()
        sign = -1 if self.take("-") else 1
        self.skip()
        m = _NUMBER.match(self.text, self.pos)
        if m is None:
            if self.peek() in ("", ")", "+", "*", "/", "^"):
                self.fail("integer exponent")
            raise ExponentNotInteger(self.offset(start), self.text)
        if m.group(1) is None or not m.group(1).isdigit() or m.group(2) or m.group(3):
            raise ExponentNotInteger(self.offset(start), self.text)
        self.pos = m.end()
        return Pow(base, sign * int(m.group(1)))

    def atom(self):
        ch = self.peek()
        if not ch:
            self.fail("operand")
        if ch == "(":
            self.pos += 1
            node = self.expr()
            if not self.take(")"):
                self.fail("')'")
            return node
        m = _NUMBER.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            x = float(m.group(1) + (m.group(2) or ""))
            return Const(complex(0.0, x) if m.group(3) else complex(x, 0.0))
        m = _NAME.match(self.text, self.pos)
        if m:
            name = m.group(0)
            self.pos = m.end()
            if name == self.var:
                return Var()
            if name == "exp":
                if not self.take("("):
                    self.fail("'('")
                node = self.expr()
                if not self.take(")"):
                    self.fail("')'")
                return Exp(node)
            if name == "i":
                return Const(1j)
            self.fail(f"variable '{self.var}', number or exp(", m.start())
        self.fail("operand")


def parse(text: str, var: str = "u") -> ExprNode:
    """Parse ``text`` into an expression tree in the variable ``var``.

    >>> parse("u^2+1")
    Add(left=Pow(base=Var(), exponent=2), right=Const(value=(1+0j)))
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text, var).parse()


# ---------------------------------------------------------------------------
# Rendering

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _prec(node):
    return _PREC.get(type(node), 5)


def _render_const(z: complex) -> str:
    re_, im = z.real, z.imag
    if im == 0.0 and math.copysign(1.0, re_) > 0:
        return repr(re_)
    if re_ == 0.0 and math.copysign(1.0, re_) > 0 and math.copysign(1.0, im) > 0:
        return repr(im) + "i"
    # not a grammar literal: emit an equivalent expression instead
    sign_re = "-" if math.copysign(1.0, re_) < 0 else ""
    sign_im = "-" if math.copysign(1.0, im) < 0 else "+"
    return f"({sign_re}{abs(re_)!r}{sign_im}{abs(im)!r}i)"


def render(node: ExprNode, var: str = "u") -> str:
    """Render a tree back to source text.

    ``parse(render(t)) == t`` holds for every tree built from literals the
    grammar can produce (non-negative real or imaginary constants).
    """
    if isinstance(node, Const):
        return _render_const(node.value)
    if isinstance(node, Var):
        return var
    if isinstance(node, Exp):
        return f"exp({render(node.arg, var)})"
    if isinstance(node, Neg):
        inner = render(node.arg, var)
        return "-" + (f"({inner})" if _prec(node.arg) < _PREC[Neg] else inner)
    if isinstance(node, Pow):
        inner = render(node.base, var)
        if _prec(node.base) <= _PREC[Pow]:
            inner = f"({inner})"
        return f"{inner}^{node.exponent}"
    p = _PREC[type(node)]
    left = render(node.left, var)
    right = render(node.right, var)
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left}{_SYMBOL[type(node)]}{right}"


# ---------------------------------------------------------------------------
# Jets

@dataclass(frozen=True)
class Jet2:
    """Value and first two derivatives at an evaluation point."""

    value: complex
    d1: complex = 0j
    d2: complex = 0j

    @staticmethod
    def _lift(other):
        return other if isinstance(other, Jet2) else Jet2(complex(other))

    def __add__(self, other):
        o = self._lift(other)
        return Jet2(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return Jet2(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Jet2(-self.value, -self.d1, -self.d2)

    def __mul__(self, other):
        o = self._lift(other)
        return Jet2(self.value * o.value,
                    self.d1 * o.value + self.value * o.d1,
                    self.d2 * o.value + 2 * self.d1 * o.d1 + self.value * o.d2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        q = self.value / o.value
        q1 = (self.d1 - q * o.d1) / o.value
        q2 = (self.d2 - 2 * q1 * o.d1 - q * o.d2) / o.value
        return Jet2(q, q1, q2)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, n: int):
        n = int(n)
        if n == 0:
            return Jet2(1 + 0j)
        if n < 0:
            return Jet2(1 + 0j) / self ** (-n)
        v = self.value
        if n == 1:
            return self
        vn1 = v ** (n - 1)
        return Jet2(v * vn1, n * vn1 * self.d1,
                    n * (n - 1) * v ** (n - 2) * self.d1 ** 2 + n * vn1 * self.d2)

    def exp(self):
        e = cmath.exp(self.value)
        return Jet2(e, e * self.d1, e * (self.d2 + self.d1 ** 2))


Number = Union[complex, float, int]


def evaluate_with(node: ExprNode, x, pole_eps: float = DEFAULT_POLE_EPS):
    """Tree-walking evaluation on any numeric-like ``x`` (complex or Jet2).

    Slow reference path; used as an independent check on the compiled
    evaluators and for multi-variable partial derivatives.
    """
    def val(obj):
        return obj.value if isinstance(obj, Jet2) else obj

    def walk(n):
        if isinstance(n, Const):
            return n.value
        if isinstance(n, Var):
            return x
        if isinstance(n, Neg):
            return -walk(n.arg)
        if isinstance(n, Add):
            return walk(n.left) + walk(n.right)
        if isinstance(n, Sub):
            return walk(n.left) - walk(n.right)
        if isinstance(n, Mul):
            return walk(n.left) * walk(n.right)
        if isinstance(n, Div):
            a, b = walk(n.left), walk(n.right)
            if abs(val(b)) <= pole_eps * max(1.0, abs(val(a))):
                raise Pole(val(x))
            return a / b
        if isinstance(n, Pow):
            a = walk(n.base)
            if n.exponent < 0 and abs(val(a)) <= pole_eps:
                raise Pole(val(x))
            return a ** n.exponent if isinstance(a, Jet2) else complex(a) ** n.exponent
        if isinstance(n, Exp):
            a = walk(n.arg)
            try:
                return a.exp() if isinstance(a, Jet2) else cmath.exp(a)
            except OverflowError:
                raise Pole(val(x)) from None
        raise TypeError(f"unknown node {n!r}")

    out = walk(node)
    if isinstance(out, Jet2):
        if not all(cmath.isfinite(c) for c in (out.value, out.d1, out.d2)):
            raise Pole(val(x))
        return out
    out = complex(out)
    if not cmath.isfinite(out):
        raise Pole(x)
    return out


# ---------------------------------------------------------------------------
# Compilation to straight-line Python

def _compile(node: ExprNode, jets: bool) -> Callable:
    lines = []
    counter = [0]
    consts = {}

    def fresh():
        counter[0] += 1
        return f"t{counter[0]}"

    def const(value):
        name = f"c{len(consts)}"
        consts[name] = complex(value)
        return name

    def emit(n):
        """Return names (v, d1, d2) holding the node's jet (d's may be None)."""
        if isinstance(n, Const):
            return const(n.value), None, None
        if isinstance(n, Var):
            return "p", "1.0", None
        v = fresh()
        if isinstance(n, Neg):
            a, a1, a2 = emit(n.arg)
            lines.append(f"{v} = -{a}")
            return v, _neg(a1, v + "_1"), _neg(a2, v + "_2")
        if isinstance(n, (Add, Sub)):
            a, a1, a2 = emit(n.left)
            b, b1, b2 = emit(n.right)
            op = "+" if isinstance(n, Add) else "-"
            lines.append(f"{v} = {a} {op} {b}")
            return v, _lin(a1, b1, op, v + "_1"), _lin(a2, b2, op, v + "_2")
        if isinstance(n, Mul):
            a, a1, a2 = emit(n.left)
            b, b1, b2 = emit(n.right)
            lines.append(f"{v} = {a} * {b}")
            if not jets:
                return v, None, None
            d1 = _sum([_prod(a1, b), _prod(a, b1)])
            d2 = _sum([_prod(a2, b), _prod("2.0", a1, b1), _prod(a, b2)])
            return v, _bind(d1, v + "_1"), _bind(d2, v + "_2")
        if isinstance(n, Div):
            a, a1, a2 = emit(n.left)
            b, b1, b2 = emit(n.right)
            lines.append(f"if abs({b}) <= eps * max(1.0, abs({a})): raise Pole(p)")
            lines.append(f"{v} = {a} / {b}")
            if not jets:
                return v, None, None
            q1 = _bind(_div(_sum([a1, _neg_term(_prod(v, b1))]), b), v + "_1")
            q2 = _bind(_div(_sum([a2, _neg_term(_prod("2.0", q1, b1)),
                                  _neg_term(_prod(v, b2))]), b), v + "_2")
            return v, q1, q2
        if isinstance(n, Pow):
            a, a1, a2 = emit(n.base)
            k = n.exponent
            if k == 0:
                lines.append(f"{v} = 1+0j")
                return v, None, None
            if k == 1:
                return a, a1, a2
            if k < 0:
                lines.append(f"if abs({a}) <= eps: raise Pole(p)")
            lines.append(f"{v}_m1 = {a} ** {k - 1}")
            lines.append(f"{v} = {v}_m1 * {a}")
            if not jets:
                return v, None, None
            d1 = _prod(str(float(k)), f"{v}_m1", a1)
            d2 = _sum([_prod(str(float(k * (k - 1))), f"{a} ** {k - 2}", a1, a1)
                       if a1 is not None else None,
                       _prod(str(float(k)), f"{v}_m1", a2)])
            return v, _bind(d1, v + "_1"), _bind(d2, v + "_2")
        if isinstance(n, Exp):
            a, a1, a2 = emit(n.arg)
            lines.append(f"{v} = _exp({a})")
            if not jets:
                return v, None, None
            d1 = _prod(v, a1)
            inner = _sum([a2, _prod(a1, a1)])
            d2 = _prod(v, inner)
            return v, _bind(d1, v + "_1"), _bind(d2, v + "_2")
        raise TypeError(f"unknown node {n!r}")

    def _bind(expr_src, name):
        if expr_src is None:
            return None
        if jets:
            lines.append(f"{name} = {expr_src}")
        return name

    def _neg(x, name):
        return None if x is None or not jets else _bind(f"-{x}", name)

    def _lin(x, y, op, name):
        if not jets or (x is None and y is None):
            return None
        if y is None:
            return _bind(x, name)
        if x is None:
            return _bind(f"{op}{y}" if op == "-" else y, name)
        return _bind(f"{x} {op} {y}", name)

    v, d1, d2 = emit(node)
    body = "\n    ".join(lines) if lines else "pass"
    if jets:
        ret = f"return {v}, {d1 or '0j'}, {d2 or '0j'}"
    else:
        ret = f"return {v}"
    src = f"def _f(p, eps):\n    {body}\n    {ret}\n"
    namespace = {"Pole": Pole, "_exp": cmath.exp, **consts}
    exec(compile(src, "<merogeo.expr>", "exec"), namespace)
    return namespace["_f"]


def _prod(*factors):
    if any(f is None for f in factors):
        return None
    return " * ".join(f"({f})" for f in factors)


def _sum(terms):
    terms = [t for t in terms if t is not None]
    if not terms:
        return None
    return " + ".join(f"({t})" for t in terms)


def _neg_term(t):
    return None if t is None else f"-({t})"


def _div(num, den):
    return None if num is None else f"({num}) / {den}"


def evaluate(node: ExprNode, p: Number, pole_eps: float = DEFAULT_POLE_EPS) -> complex:
    """Value of ``node`` at ``p``; raises :class:`Pole` instead of returning infinity."""
    p = complex(p)
    try:
        out = node._value_fn(p, pole_eps)
    except (OverflowError, ZeroDivisionError):
        raise Pole(p) from None
    out = complex(out)
    if not cmath.isfinite(out):
        raise Pole(p)
    return out


def eval_jet(node: ExprNode, p: Number, pole_eps: float = DEFAULT_POLE_EPS) -> Jet2:
    """Forward-mode value, first and second derivative of ``node`` at ``p``."""
    return Jet2(*eval_jet_tuple(node, p, pole_eps))


def eval_jet_tuple(node: ExprNode, p: Number, pole_eps: float = DEFAULT_POLE_EPS):
    """Like :func:`eval_jet` but returns a plain ``(value, d1, d2)`` tuple."""
    p = complex(p)
    try:
        v, d1, d2 = node._jet_fn(p, pole_eps)
    except (OverflowError, ZeroDivisionError):
        raise Pole(p) from None
    v, d1, d2 = complex(v), complex(d1), complex(d2)
    if not (cmath.isfinite(v) and cmath.isfinite(d1) and cmath.isfinite(d2)):
        raise Pole(p)
    return v, d1, d2


# ---------------------------------------------------------------------------
# Tree utilities

def derivative(node: ExprNode) -> ExprNode:
    """Unsimplified symbolic derivative."""
    zero = Const(0)
    if isinstance(node, Const):
        return zero
    if isinstance(node, Var):
        return Const(1)
    if isinstance(node, Neg):
        return Neg(derivative(node.arg))
    if isinstance(node, Add):
        return Add(derivative(node.left), derivative(node.right))
    if isinstance(node, Sub):
        return Sub(derivative(node.left), derivative(node.right))
    if isinstance(node, Mul):
        return Add(Mul(derivative(node.left), node.right),
                   Mul(node.left, derivative(node.right)))
    if isinstance(node, Div):
        return Div(Sub(Mul(derivative(node.left), node.right),
                       Mul(node.left, derivative(node.right))),
                   Pow(node.right, 2))
    if isinstance(node, Pow):
        k = node.exponent
        if k == 0:
            return zero
        return Mul(Mul(Const(k), Pow(node.base, k - 1)), derivative(node.base))
    if isinstance(node, Exp):
        return Mul(node, derivative(node.arg))
    raise TypeError(f"unknown node {node!r}")


def substitute(node: ExprNode, replacement: ExprNode) -> ExprNode:
    """Replace every occurrence of the variable by ``replacement``."""
    if isinstance(node, Var):
        return replacement
    if isinstance(node, Const):
        return node
    if isinstance(node, (Neg, Exp)):
        return type(node)(substitute(node.arg, replacement))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, replacement), node.exponent)
    return type(node)(substitute(node.left, replacement), substitute(node.right, replacement))


def is_rational(node: ExprNode) -> bool:
    """True when the tree uses rational operations only."""
    if isinstance(node, Exp):
        return False
    if isinstance(node, (Const, Var)):
        return True
    if isinstance(node, Neg):
        return is_rational(node.arg)
    if isinstance(node, Pow):
        return is_rational(node.base)
    return is_rational(node.left) and is_rational(node.right)

"""Small arithmetic expression language for initial data and metric factors.

Grammar (standard precedence, ``**`` binds tighter than unary minus and is
right associative, everything else is left associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('**' unary)?
    atom   := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

Names must be declared coordinate labels; the only functions are
sin, cos, exp, sqrt, abs and tanh. There are no conditionals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ExpressionSyntaxError, UnknownSymbol

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
}

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/()])"
    r")"
)

# binding strength used when printing
_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


class Expr:
    prec = _PREC_ATOM

    def __call__(self, **env):
        return self.evaluate(env)

    def variables(self):
        return frozenset()


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def evaluate(self, env):
        return self.value

    def diff(self, var):
        return ZERO

    def __str__(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def evaluate(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise UnknownSymbol(f"no value bound for {self.name!r}") from None

    def diff(self, var):
        return ONE if var == self.name else ZERO

    def variables(self):
        return frozenset([self.name])

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr
    prec = _PREC_NEG

    def evaluate(self, env):
        return -self.operand.evaluate(env)

    def diff(self, var):
        return _neg(self.operand.diff(var))

    def variables(self):
        return self.operand.variables()

    def __str__(self):
        return "-" + _wrap(self.operand, self.operand.prec >= _PREC_NEG)


@dataclass(frozen=True)
class Bin(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def prec(self):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "**": _PREC_POW}[self.op]

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        # IEEE semantics for scalars too: 1/0 is inf, (-1)**0.5 is nan
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            op = np.divide if self.op == "/" else np.power
            out = op(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        return out if np.ndim(out) else float(out)

    def variables(self):
        return self.left.variables() | self.right.variables()

    def diff(self, var):
        u, v = self.left, self.right
        du, dv = u.diff(var), v.diff(var)
        if self.op == "+":
            return _add(du, dv)
        if self.op == "-":
            return _sub(du, dv)
        if self.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        if self.op == "/":
            return _div(_sub(_mul(du, v), _mul(u, dv)), _pow(v, Num(2.0)))
        if var in v.variables():
            raise ValueError("cannot differentiate a power whose exponent depends on " + var)
        return _mul(_mul(v, _pow(u, _sub(v, ONE))), du)

    def __str__(self):
        if self.op == "**":
            # base must be an atom, exponent is a unary
            left = _wrap(self.left, self.left.prec == _PREC_ATOM)
            right = _wrap(self.right, self.right.prec >= _PREC_NEG)
            return f"{left}**{right}"
        p = self.prec
        left = _wrap(self.left, self.left.prec >= p)
        right = _wrap(self.right, self.right.prec > p)
        return f"{left} {self.op} {right}"


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr

    def evaluate(self, env):
        return FUNCTIONS[self.func](self.arg.evaluate(env))

    def variables(self):
        return self.arg.variables()

    def diff(self, var):
        a, da = self.arg, self.arg.diff(var)
        if da == ZERO:
            return ZERO
        f = self.func
        if f == "sin":
            outer = Call("cos", a)
        elif f == "cos":
            outer = Neg(Call("sin", a))
        elif f == "exp":
            outer = self
        elif f == "sqrt":
            outer = _div(ONE, _mul(Num(2.0), self))
        elif f == "abs":
            outer = _div(a, self)
        else:  # tanh
            outer = _sub(ONE, _pow(self, Num(2.0)))
        return _mul(outer, da)

    def __str__(self):
        return f"{self.func}({self.arg})"


ZERO = Num(0.0)
ONE = Num(1.0)


def _wrap(node, bare):
    return str(node) if bare else f"({node})"


# light constant folding keeps symbolic derivatives readable
def _neg(a):
    if a == ZERO:
        return ZERO
    return a.operand if isinstance(a, Neg) else Neg(a)


def _add(a, b):
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return Bin("+", a, b)


def _sub(a, b):
    if b == ZERO:
        return a
    if a == ZERO:
        return _neg(b)
    return Bin("-", a, b)


def _mul(a, b):
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return Bin("*", a, b)


def _div(a, b):
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return Bin("/", a, b)


def _pow(a, b):
    if b == ONE:
        return a
    return Bin("**", a, b)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {text[start]!r}", start,
                                        {"number", "name", "operator", "'('"})
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    _ATOM_START = {"number", "name", "'('", "'-'"}

    def __init__(self, text, variables):
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, value, pos = self.peek()
        if kind != "op" or value != op:
            raise ExpressionSyntaxError(f"expected {op!r}", pos, {f"'{op}'"})
        self.take()

    def parse(self):
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected {value!r}", pos, {"'+'", "'-'", "'*'", "'/'", "'**'", "end"})
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "**":
            self.take()
            return Bin("**", base, self.unary())
        return base

    def atom(self):
        kind, value, pos = self.take()
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            if self.variables is not None and value not in self.variables:
                raise UnknownSymbol(f"unknown symbol {value!r} at position {pos}; "
                                    f"declared: {', '.join(self.variables)}")
            return Var(value)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        what = "end of input" if kind == "end" else repr(value)
        raise ExpressionSyntaxError(f"unexpected {what}", pos, self._ATOM_START)


def parse_expression(text, variables=None):
    """Parse ``text`` into an expression tree.

    If ``variables`` is given, any other name is rejected with
    :class:`UnknownSymbol`. Malformed input raises
    :class:`ExpressionSyntaxError` carrying the 0-based position.
    """
    if not isinstance(text, str):
        raise TypeError("expression text must be a string")
    declared = tuple(variables) if variables is not None else None
    return _Parser(text, declared).parse()


def serialize(node):
    """Canonical text form; reparses to an equal tree."""
    return str(node)

"""Drift-expression grammar: parser, vectorized evaluator, pretty-printer.

Grammar (one expression per drift component, components separated by ';'):

    expr    := term (('+'|'-') term)*
    term    := unary (('*'|'/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative, binds above unary '-'
    atom    := NUMBER | 't' | 'x<k>' | FUNC '(' expr ')' | 'norm' '(' 'x' ')'
             | '(' expr ')'
    FUNC    := exp | log | sin | cos | abs | sqrt

Evaluation is vectorized: `x` may be a single point of shape (d,) or a batch
of shape (n, d); `t` is a scalar.  log and sqrt of nonpositive arguments and
division by zero raise DomainEvalError at call time.
"""

import re

import numpy as np

from .errors import ArityError, DomainEvalError, ExpressionSyntaxError, UnknownIdentifier

_FUNCTIONS = ("exp", "log", "sin", "cos", "abs", "sqrt")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^();]))"
)


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            bad = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {source[bad]!r}", bad)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


# --- AST ----------------------------------------------------------------------
# Each node evaluates against (t, X) where X has shape (..., d), returning an
# array broadcastable to the batch shape X.shape[:-1].

class Num:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def eval(self, t, X):
        return self.value

    def pretty(self, prec=0):
        r = repr(self.value)
        return r[:-2] if r.endswith(".0") else r


class TimeVar:
    __slots__ = ()

    def eval(self, t, X):
        return t

    def pretty(self, prec=0):
        return "t"


class Coord:
    __slots__ = ("index",)

    def __init__(self, index):
        self.index = index  # zero-based

    def eval(self, t, X):
        return X[..., self.index]

    def pretty(self, prec=0):
        return f"x{self.index + 1}"


class Norm:
    __slots__ = ()

    def eval(self, t, X):
        return np.sqrt((X * X).sum(axis=-1))

    def pretty(self, prec=0):
        return "norm(x)"


class Neg:
    __slots__ = ("arg",)

    def __init__(self, arg):
        self.arg = arg

    def eval(self, t, X):
        return -np.asarray(self.arg.eval(t, X))

    def pretty(self, prec=0):
        s = "-" + self.arg.pretty(2)
        return f"({s})" if prec > 2 else s


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


class BinOp:
    __slots__ = ("op", "left", "right")

    def __init__(self, op, left, right):
        self.op = op
        self.left = left
        self.right = right

    def eval(self, t, X):
        a = np.asarray(self.left.eval(t, X), dtype=float)
        b = np.asarray(self.right.eval(t, X), dtype=float)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            if np.any(b == 0.0):
                raise DomainEvalError("division by zero")
            return a / b
        # '^': reject cases that would produce NaN/inf silently
        if np.any((a == 0.0) & (b < 0.0)):
            raise DomainEvalError("zero raised to a negative power")
        with np.errstate(invalid="ignore"):
            out = np.power(a, b)
        if np.any(np.isnan(out)):
            raise DomainEvalError("negative base with non-integer exponent")
        return out

    def pretty(self, prec=0):
        p = _PRECEDENCE[self.op]
        if self.op == "^":
            # right-associative
            s = f"{self.left.pretty(p + 1)}^{self.right.pretty(p)}"
        else:
            s = f"{self.left.pretty(p)} {self.op} {self.right.pretty(p + 1)}"
        return f"({s})" if prec > p else s


class Func:
    __slots__ = ("name", "arg")

    def __init__(self, name, arg):
        self.name = name
        self.arg = arg

    def eval(self, t, X):
        a = np.asarray(self.arg.eval(t, X), dtype=float)
        if self.name == "log":
            if np.any(a <= 0.0):
                raise DomainEvalError("log of nonpositive argument")
            return np.log(a)
        if self.name == "sqrt":
            if np.any(a < 0.0):
                raise DomainEvalError("sqrt of negative argument")
            return np.sqrt(a)
        return getattr(np, self.name if self.name != "abs" else "abs")(a)

    def pretty(self, prec=0):
        return f"{self.name}({self.arg.pretty(0)})"


# --- parser -------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens, dimension):
        self.tokens = tokens
        self.i = 0
        self.d = dimension

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            raise ExpressionSyntaxError(f"expected '{op}'", off)
        return self.advance()

    def parse_expr(self):
        node = self.parse_term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = BinOp(val, node, self.parse_term())
            else:
                return node

    def parse_term(self):
        node = self.parse_unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = BinOp(val, node, self.parse_unary())
            else:
                return node

    def parse_unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            return BinOp("^", base, self.parse_unary())
        return base

    def parse_atom(self):
        kind, val, off = self.advance()
        if kind == "num":
            return Num(float(val))
        if kind == "op" and val == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        if kind == "name":
            if val == "norm":
                self.expect_op("(")
                nkind, nval, noff = self.advance()
                if nkind != "name" or nval != "x":
                    raise ExpressionSyntaxError("norm takes the x-vector: norm(x)", noff)
                self.expect_op(")")
                return Norm()
            if val in _FUNCTIONS:
                self.expect_op("(")
                node = self.parse_expr()
                self.expect_op(")")
                return Func(val, node)
            if val == "t":
                return TimeVar()
            m = re.fullmatch(r"x(\d+)", val)
            if m:
                k = int(m.group(1))
                if not 1 <= k <= self.d:
                    raise UnknownIdentifier(val, off)
                return Coord(k - 1)
            raise UnknownIdentifier(val, off)
        raise ExpressionSyntaxError(f"unexpected token {val!r}" if val else "unexpected end of input", off)


def parse_component(source, dimension, offset_base=0):
    """Parse a single scalar expression; internal helper."""
    if not source.strip():
        raise ExpressionSyntaxError("empty expression", offset_base)
    tokens = [(k, v, off + offset_base) for (k, v, off) in _tokenize(source)]
    parser = _Parser(tokens, dimension)
    node = parser.parse_expr()
    kind, val, off = parser.peek()
    if kind != "end":
        raise ExpressionSyntaxError(f"trailing input starting with {val!r}", off)
    return node


class DriftExpression:
    """Compiled drift b(t, x): evaluates all components, vectorized over points.

    Calling with x of shape (d,) returns shape (d,); shape (n, d) returns (n, d).
    """

    def __init__(self, components, source):
        self.components = components
        self.source = source
        self.dimension = len(components)

    def __call__(self, t, x):
        X = np.asarray(x, dtype=float)
        if X.shape[-1] != self.dimension:
            raise ArityError(
                f"drift has {self.dimension} components, point has {X.shape[-1]}"
            )
        batch = X.shape[:-1]
        out = np.empty(X.shape, dtype=float)
        for k, comp in enumerate(self.components):
            out[..., k] = np.broadcast_to(np.asarray(comp.eval(t, X), dtype=float), batch)
        return out

    def pretty(self):
        return "; ".join(c.pretty(0) for c in self.components)

    def __repr__(self):
        return f"DriftExpression({self.pretty()!r})"


def parse_drift_expression(source, dimension):
    """Compile a ';'-separated drift expression into an evaluable closure.

    Raises ExpressionSyntaxError (with byte offset), ArityError when the
    component count differs from `dimension`, UnknownIdentifier for
    unrecognized names.
    """
    if dimension < 1:
        raise ValueError("dimension must be a positive integer")
    pieces = source.split(";")
    if len(pieces) != dimension:
        raise ArityError(
            f"expected {dimension} drift component(s), found {len(pieces)}"
        )
    components = []
    base = 0
    for piece in pieces:
        components.append(parse_component(piece, dimension, offset_base=base))
        base += len(piece) + 1  # account for the ';'
    return DriftExpression(components, source)

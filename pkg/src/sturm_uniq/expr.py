"""Coefficient expression language.

Coefficients a(x), b(x), V(x) are written as small arithmetic expressions
over the variable ``x``::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | 'x' | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

``NAME`` is either a bound parameter, one of the constants ``pi`` and ``e``,
or a function from :data:`FUNCTIONS`.  ``a ^ b`` is shorthand for ``pow(a, b)``.
There is no implicit multiplication.  ``piecewise(t, left, right)`` evaluates
``left`` where ``x < t`` and ``right`` elsewhere.

Evaluation works on floats and on numpy arrays.  A division by zero, a
logarithm of a non-positive number or ``pow(0, negative)`` raises
:class:`~sturm_uniq.errors.PoleAt`; any other non-finite or out-of-domain
result raises :class:`~sturm_uniq.errors.EvaluationError`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import EvaluationError, ExprSyntaxError, PoleAt, UnknownIdentifier

__all__ = [
    "Num", "Var", "Neg", "BinOp", "Call", "CoefficientExpr",
    "parse_coefficient", "evaluate", "FUNCTIONS",
]

# name -> arity
FUNCTIONS = {
    "pow": 2, "exp": 1, "log": 1, "abs": 1, "sgn": 1,
    "min": 2, "max": 2, "sqrt": 1, "piecewise": 3,
}
CONSTANTS = {"pi": math.pi, "e": math.e}


# -- AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]


def to_source(node: Node) -> str:
    """Fully parenthesised source text that re-parses to ``node``."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    return f"{node.name}({', '.join(to_source(a) for a in node.args)})"


# -- lexer --------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # 'num', 'name', 'op', 'end'
    text: str
    offset: int  # byte offset into the UTF-8 source


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    pos = 0
    while True:
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos >= len(source):
            break
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(
                f"unexpected character {source[pos]!r}",
                len(source[:pos].encode()),
                {"number", "name", "operator"},
            )
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), len(source[:m.start(kind)].encode())))
        pos = m.end()
    toks.append(_Tok("end", "", len(source.encode())))
    return toks


# -- parser -------------------------------------------------------------------

_BINARY = {"+": 10, "-": 10, "*": 20, "/": 20}
_UNARY_BP = 25
_POW_BP = 30


class _Parser:
    def __init__(self, source, params):
        self.toks = _tokenize(source)
        self.i = 0
        self.params = params

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        t = self.tok
        if t.kind != "op" or t.text != text:
            raise ExprSyntaxError(f"unexpected {t.text or 'end of input'!r}", t.offset, {text})
        return self.advance()

    def parse(self):
        node = self.expression(0)
        if self.tok.kind != "end":
            raise ExprSyntaxError(
                f"unexpected {self.tok.text!r}", self.tok.offset,
                {"+", "-", "*", "/", "^", "end of input"},
            )
        return node

    def expression(self, rbp):
        left = self.nud(self.advance())
        while True:
            t = self.tok
            if t.kind == "op" and t.text in _BINARY and _BINARY[t.text] > rbp:
                self.advance()
                left = BinOp(t.text, left, self.expression(_BINARY[t.text]))
            elif t.kind == "op" and t.text == "^" and _POW_BP > rbp:
                self.advance()
                # right-associative; exponent may carry a sign
                left = Call("pow", (left, self.expression(_UNARY_BP - 1)))
            else:
                return left

    def nud(self, t):
        if t.kind == "num":
            value = float(t.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"literal {t.text!r} overflows", t.offset)
            return Num(value)
        if t.kind == "op" and t.text == "(":
            node = self.expression(0)
            self.expect(")")
            return node
        if t.kind == "op" and t.text in "+-":
            arg = self.expression(_UNARY_BP)
            if t.text == "+":
                return arg
            if isinstance(arg, Num):
                return Num(-arg.value)
            return Neg(arg)
        if t.kind == "name":
            return self.name(t)
        raise ExprSyntaxError(
            f"unexpected {t.text or 'end of input'!r}", t.offset,
            {"number", "name", "(", "-"},
        )

    def name(self, t):
        name = t.text
        if name in FUNCTIONS:
            self.expect("(")
            args = [self.expression(0)]
            while self.tok.kind == "op" and self.tok.text == ",":
                self.advance()
                args.append(self.expression(0))
            close = self.tok
            self.expect(")")
            if len(args) != FUNCTIONS[name]:
                raise ExprSyntaxError(
                    f"{name} takes {FUNCTIONS[name]} arguments, got {len(args)}",
                    close.offset,
                )
            return Call(name, tuple(args))
        if name == "x":
            return Var()
        if name in self.params:
            return Num(float(self.params[name]))
        if name in CONSTANTS:
            return Num(CONSTANTS[name])
        raise UnknownIdentifier(name, t.offset)


# -- evaluation ---------------------------------------------------------------

def _first(x, mask):
    return float(np.asarray(x)[mask].flat[0])


def _has_var(node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Num):
        return False
    if isinstance(node, Neg):
        return _has_var(node.arg)
    if isinstance(node, BinOp):
        return _has_var(node.left) or _has_var(node.right)
    # piecewise compares x with its threshold even when no argument mentions x
    return node.name == "piecewise" or any(_has_var(a) for a in node.args)


def _checked(fn, mask_fn, exc):
    def run(x, *vals):
        bad = mask_fn(*vals)
        if bad.any():
            raise exc(x, bad)
        return fn(*vals)
    return run


def _pole(x, bad):
    return PoleAt(_first(x, bad))


def _domain(msg):
    return lambda x, bad: EvaluationError(msg, _first(x, bad))


_UNARY_FN = {
    "exp": np.exp, "abs": np.abs, "sgn": np.sign,
    "log": _checked(np.log, lambda v: v <= 0, _pole),
    "sqrt": _checked(np.sqrt, lambda v: v < 0, _domain("sqrt of negative value")),
}
_BINARY_FN = {
    "+": np.add, "-": np.subtract, "*": np.multiply, "min": np.minimum, "max": np.maximum,
    "/": _checked(np.divide, lambda l, r: r == 0, _pole),
}
_CHECKED = {"log", "sqrt", "/"}


def _pow(x, base, ex):
    pole = (base == 0) & (ex < 0)
    if pole.any():
        raise PoleAt(_first(x, pole))
    bad = (base < 0) & (ex != np.round(ex))
    if bad.any():
        raise EvaluationError("negative base with non-integer exponent", _first(x, bad))
    return np.power(base, ex)


def _compile(node):
    """Closure ``x -> values`` for ``node``; subtrees free of ``x`` are folded to scalars."""
    if isinstance(node, Num):
        v = np.float64(node.value)
        return lambda x: v
    if isinstance(node, Var):
        return lambda x: x
    if not _has_var(node):
        try:
            with np.errstate(all="ignore"):
                v = np.float64(np.asarray(_compile_tree(node)(np.zeros(1))).flat[0])
        except EvaluationError:
            pass  # keep it unfolded so the error reports the evaluation point
        else:
            return lambda x: v
    return _compile_tree(node)


def _compile_tree(node):
    if isinstance(node, Neg):
        f = _compile(node.arg)
        return lambda x: -f(x)
    if isinstance(node, BinOp):
        name, args = node.op, (node.left, node.right)
    else:
        name, args = node.name, node.args
    if name == "piecewise":
        thr, fl, fr = (_compile(a) for a in args)

        def piece(x):
            lmask = x < thr(x)
            out = np.empty_like(x)
            if lmask.any():
                out[lmask] = fl(x[lmask])
            if not lmask.all():
                out[~lmask] = fr(x[~lmask])
            return out
        return piece
    fs = [_compile(a) for a in args]
    if name == "pow":
        f, g = fs
        if not _has_var(args[1]):
            try:
                with np.errstate(all="ignore"):
                    ex = float(np.asarray(g(np.zeros(1))).flat[0])
            except EvaluationError:
                ex = math.nan
            if math.isfinite(ex) and ex == round(ex) and ex >= 0:  # no pole and no sign restriction
                return lambda x: np.power(f(x), ex)
        return lambda x: _pow(x, f(x), g(x))
    if len(fs) == 1:
        op = _UNARY_FN[name]
        f = fs[0]
        if name in _CHECKED:
            return lambda x: op(x, f(x))
        return lambda x: op(f(x))
    op = _BINARY_FN[name]
    f, g = fs
    if name in _CHECKED:
        return lambda x: op(x, f(x), g(x))
    return lambda x: op(f(x), g(x))


_compiled_cache: dict = {}


def _compiled(node):
    # keyed by identity: hashing a deep tree on every call costs more than evaluating it
    hit = _compiled_cache.get(id(node))
    if hit is None or hit[0] is not node:
        hit = _compiled_cache[id(node)] = (node, _compile(node))
    return hit[1]


@dataclass(frozen=True)
class CoefficientExpr:
    """A parsed, immutable coefficient expression."""

    source: str
    ast: Node
    params: tuple = ()

    def __call__(self, x):
        return evaluate(self, x)

    def pretty(self) -> str:
        return to_source(self.ast)

    @property
    def is_zero(self) -> bool:
        return isinstance(self.ast, Num) and self.ast.value == 0.0

    @property
    def constant(self):
        """The value if the expression does not depend on ``x``, else None."""
        return self.ast.value if isinstance(self.ast, Num) else None


def parse_coefficient(source: str, params: Mapping[str, float] | None = None) -> CoefficientExpr:
    """Parse ``source``; identifiers in ``params`` are bound to their values."""
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", 0, {"number", "name", "(", "-"})
    params = dict(params or {})
    for name in params:
        if name in FUNCTIONS or name == "x":
            raise ValueError(f"parameter name {name!r} is reserved")
    ast = _Parser(source, params).parse()
    return CoefficientExpr(source, ast, tuple(sorted((k, float(v)) for k, v in params.items())))


def evaluate(expr: CoefficientExpr, x):
    """Evaluate at a float (returns float) or an array (returns array)."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    shape = xs.shape
    flat = xs.ravel()
    with np.errstate(all="ignore"):
        out = np.asarray(_compiled(expr.ast)(flat))
    if out.shape != flat.shape:
        out = np.broadcast_to(out, flat.shape).copy()
    bad = ~np.isfinite(out)
    if bad.any():
        raise EvaluationError("non-finite value", _first(flat, bad))
    return float(out[0]) if scalar else out.reshape(shape)

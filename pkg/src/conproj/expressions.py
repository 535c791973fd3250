"""Closed-form coordinate expressions: parsing, printing, jet evaluation.

Grammar (EBNF)::

    expr   := term (("+"|"-") term)* ;
    term   := factor (("*"|"/") factor)* ;
    factor := base ("^" factor)? ;
    base   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")" | "-" base ;

``^`` is right-associative and a leading minus binds tighter than the
``^`` base (so ``-x^2`` means ``(-x)^2``).  Known functions: exp log sin
cos tan sinh cosh tanh sqrt.  NUMBER is a decimal with optional exponent.
Trees are immutable after parse.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from . import jets
from .errors import (
    DomainError,
    ExpressionSyntaxError,
    UnknownFunctionError,
    UnknownIdentifierError,
)

__all__ = [
    "Expr",
    "Literal",
    "Variable",
    "Neg",
    "Binary",
    "Call",
    "parse_expression",
    "print_expression",
    "eval_expr",
    "differentiate",
    "symbolic_inverse",
]


@dataclass(frozen=True)
class Literal:
    value: float


@dataclass(frozen=True)
class Variable:
    index: int
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Literal, Variable, Neg, Binary, Call]


# -- tokenizer / parser -------------------------------------------------

_NUM_RE = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_WS = " \t\r\n"


def _byte_offset(src: str, i: int) -> int:
    return len(src[:i].encode("utf-8"))


def _tokenize(src: str):
    tokens = []
    i = 0
    length = len(src)
    while i < length:
        ch = src[i]
        if ch in _WS:
            i += 1
            continue
        m = _NUM_RE.match(src, i)
        if m:
            tokens.append(("num", m.group(), i))
            i = m.end()
            continue
        m = _IDENT_RE.match(src, i)
        if m:
            tokens.append(("ident", m.group(), i))
            i = m.end()
            continue
        if ch in "+-*/^()":
            tokens.append(("op", ch, i))
            i += 1
            continue
        raise ExpressionSyntaxError(
            f"unexpected character {ch!r}", _byte_offset(src, i)
        )
    tokens.append(("end", "", length))
    return tokens


class _Parser:
    def __init__(self, src: str, coord_index: dict):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0
        self.coords = coord_index

    def _peek(self):
        return self.tokens[self.pos]

    def _advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _fail(self, message: str, tok):
        raise ExpressionSyntaxError(message, _byte_offset(self.src, tok[2]))

    def parse(self) -> Expr:
        node = self._expr()
        tok = self._peek()
        if tok[0] != "end":
            self._fail("unexpected trailing input", tok)
        return node

    def _expr(self) -> Expr:
        node = self._term()
        while True:
            kind, text, _ = self._peek()
            if kind == "op" and text in "+-":
                self._advance()
                node = Binary(text, node, self._term())
            else:
                return node

    def _term(self) -> Expr:
        node = self._factor()
        while True:
            kind, text, _ = self._peek()
            if kind == "op" and text in "*/":
                self._advance()
                node = Binary(text, node, self._factor())
            else:
                return node

    def _factor(self) -> Expr:
        base = self._base()
        kind, text, _ = self._peek()
        if kind == "op" and text == "^":
            self._advance()
            return Binary("^", base, self._factor())
        return base

    def _base(self) -> Expr:
        tok = self._advance()
        kind, text, pos = tok
        if kind == "num":
            return Literal(float(text))
        if kind == "ident":
            nxt = self._peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if text not in jets.FUNCTION_NAMES:
                    raise UnknownFunctionError(text, _byte_offset(self.src, pos))
                self._advance()
                arg = self._expr()
                closing = self._advance()
                if closing[0] != "op" or closing[1] != ")":
                    self._fail("expected ')'", closing)
                return Call(text, arg)
            index = self.coords.get(text)
            if index is None:
                raise UnknownIdentifierError(text, _byte_offset(self.src, pos))
            return Variable(index, text)
        if kind == "op" and text == "(":
            node = self._expr()
            closing = self._advance()
            if closing[0] != "op" or closing[1] != ")":
                self._fail("expected ')'", closing)
            return node
        if kind == "op" and text == "-":
            return Neg(self._base())
        self._fail("expected a number, identifier, or '('", tok)


def parse_expression(src: str, coords) -> Expr:
    """Parse ``src`` against the declared coordinate names."""
    if not isinstance(src, str) or not src.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    coord_index = {name: i for i, name in enumerate(coords)}
    return _Parser(src, coord_index).parse()


# -- printer -------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM_PREC = 5


def _node_prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _NEG_PREC
    if isinstance(e, Literal) and e.value < 0:
        return _NEG_PREC
    return _ATOM_PREC


def _format_number(v: float) -> str:
    return repr(float(v))


def print_expression(e: Expr) -> str:
    """Render a tree back to grammar-conformant source.

    Parenthesization preserves the tree structure exactly, so
    ``parse(print(parse(s)))`` equals ``parse(s)``.  Negative literals
    (which the grammar itself never produces) reparse as a negation node
    with the same meaning.
    """
    if isinstance(e, Literal):
        return _format_number(e.value)
    if isinstance(e, Variable):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({print_expression(e.arg)})"
    if isinstance(e, Neg):
        body = print_expression(e.operand)
        if isinstance(e.operand, Binary):
            body = f"({body})"
        return "-" + body
    if isinstance(e, Binary):
        prec = _PREC[e.op]
        left = print_expression(e.left)
        right = print_expression(e.right)
        if e.op == "^":
            if isinstance(e.left, Binary) or _node_prec(e.left) < _NEG_PREC:
                left = f"({left})"
            if isinstance(e.right, Binary) and e.right.op != "^":
                right = f"({right})"
        else:
            if _node_prec(e.left) < prec:
                left = f"({left})"
            if _node_prec(e.right) <= prec:
                right = f"({right})"
        if e.op in "+-":
            return f"{left} {e.op} {right}"
        return f"{left}{e.op}{right}"
    raise TypeError(f"not an expression node: {e!r}")


# -- symbolic differentiation --------------------------------------------
# Used to derive drift fields from potentials; folds the obvious constants
# so generated sources stay readable.


def _lit(v: float) -> Literal:
    return Literal(float(v))


def _as_literal(e: Expr) -> Expr:
    if isinstance(e, Neg) and isinstance(e.operand, Literal):
        return _lit(-e.operand.value)
    return e


def _is_lit(e, v=None) -> bool:
    return isinstance(e, Literal) and (v is None or e.value == v)


def _fold_neg(e: Expr) -> Expr:
    e = _as_literal(e)
    if isinstance(e, Literal):
        return _lit(-e.value)
    if isinstance(e, Neg):
        return e.operand
    return Neg(e)


def _fold_add(a: Expr, b: Expr) -> Expr:
    a = _as_literal(a)
    b = _as_literal(b)
    if _is_lit(a) and _is_lit(b) and math.isfinite(a.value + b.value):
        return _lit(a.value + b.value)
    if _is_lit(a, 0.0):
        return b
    if _is_lit(b, 0.0):
        return a
    return Binary("+", a, b)


def _fold_sub(a: Expr, b: Expr) -> Expr:
    a = _as_literal(a)
    b = _as_literal(b)
    if _is_lit(a) and _is_lit(b) and math.isfinite(a.value - b.value):
        return _lit(a.value - b.value)
    if _is_lit(b, 0.0):
        return a
    if _is_lit(a, 0.0):
        return _fold_neg(b)
    return Binary("-", a, b)


def _fold_mul(a: Expr, b: Expr) -> Expr:
    a = _as_literal(a)
    b = _as_literal(b)
    if _is_lit(a, 0.0) or _is_lit(b, 0.0):
        return _lit(0.0)
    if _is_lit(a) and _is_lit(b) and math.isfinite(a.value * b.value):
        return _lit(a.value * b.value)
    if _is_lit(a, 1.0):
        return b
    if _is_lit(b, 1.0):
        return a
    return Binary("*", a, b)


def _fold_div(a: Expr, b: Expr) -> Expr:
    a = _as_literal(a)
    b = _as_literal(b)
    if _is_lit(a, 0.0):
        return _lit(0.0)
    if _is_lit(b, 1.0):
        return a
    if _is_lit(a) and _is_lit(b) and b.value != 0.0:
        q = a.value / b.value
        if math.isfinite(q):
            return _lit(q)
    return Binary("/", a, b)


def _fold_pow(base: Expr, c: float) -> Expr:
    base = _as_literal(base)
    if c == 0.0:
        return _lit(1.0)
    if c == 1.0:
        return base
    return Binary("^", base, _lit(c))


def _literal_value(e: Expr):
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, Neg) and isinstance(e.operand, Literal):
        return -e.operand.value
    return None


# Constant-folding constructors, public for code generators.
fold_add = _fold_add
fold_mul = _fold_mul


_DERIVATIVE_RULES = {
    "exp": lambda u, du: _fold_mul(Call("exp", u), du),
    "log": lambda u, du: _fold_div(du, u),
    "sin": lambda u, du: _fold_mul(Call("cos", u), du),
    "cos": lambda u, du: _fold_neg(_fold_mul(Call("sin", u), du)),
    "tan": lambda u, du: _fold_div(du, _fold_pow(Call("cos", u), 2.0)),
    "sinh": lambda u, du: _fold_mul(Call("cosh", u), du),
    "cosh": lambda u, du: _fold_mul(Call("sinh", u), du),
    "tanh": lambda u, du: _fold_div(du, _fold_pow(Call("cosh", u), 2.0)),
    "sqrt": lambda u, du: _fold_div(du, _fold_mul(_lit(2.0), Call("sqrt", u))),
}


def differentiate(e: Expr, index: int) -> Expr:
    """Symbolic partial derivative with respect to coordinate ``index``."""
    if isinstance(e, Literal):
        return _lit(0.0)
    if isinstance(e, Variable):
        return _lit(1.0 if e.index == index else 0.0)
    if isinstance(e, Neg):
        return _fold_neg(differentiate(e.operand, index))
    if isinstance(e, Binary):
        dl = differentiate(e.left, index)
        dr = differentiate(e.right, index)
        if e.op == "+":
            return _fold_add(dl, dr)
        if e.op == "-":
            return _fold_sub(dl, dr)
        if e.op == "*":
            return _fold_add(_fold_mul(dl, e.right), _fold_mul(e.left, dr))
        if e.op == "/":
            return _fold_sub(
                _fold_div(dl, e.right),
                _fold_div(_fold_mul(e.left, dr), _fold_pow(e.right, 2.0)),
            )
        if e.op == "^":
            c = _literal_value(e.right)
            if c is not None:
                return _fold_mul(
                    _fold_mul(_lit(c), _fold_pow(e.left, c - 1.0)), dl
                )
            # u^v -> u^v * (dv*log(u) + v*du/u)
            return _fold_mul(
                e,
                _fold_add(
                    _fold_mul(dr, Call("log", e.left)),
                    _fold_div(_fold_mul(e.right, dl), e.left),
                ),
            )
        raise ValueError(f"unknown operator '{e.op}'")
    if isinstance(e, Call):
        rule = _DERIVATIVE_RULES[e.func]
        return rule(e.arg, differentiate(e.arg, index))
    raise TypeError(f"not an expression node: {e!r}")


def _sym_det(rows) -> Expr:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    acc = None
    for j in range(n):
        minor = [
            [rows[r][c] for c in range(n) if c != j] for r in range(1, n)
        ]
        term = _fold_mul(rows[0][j], _sym_det(minor))
        if j % 2 == 1:
            term = _fold_neg(term)
        acc = term if acc is None else _fold_add(acc, term)
    return acc


def symbolic_inverse(matrix) -> list:
    """Adjugate-over-determinant inverse of a matrix of expression trees.

    Intended for small charts; refuses dimensions above 4 where the
    cofactor expansion stops being a sensible source-code generator.
    """
    rows = [list(r) for r in matrix]
    n = len(rows)
    if n > 4:
        raise ValueError("symbolic inverse supported up to dimension 4")
    det = _sym_det(rows)
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [rows[r][c] for c in range(n) if c != i]
                for r in range(n)
                if r != j
            ]
            cof = _sym_det(minor) if minor else _lit(1.0)
            if (i + j) % 2 == 1:
                cof = _fold_neg(cof)
            out[i][j] = _fold_div(cof, det)
    return out


# -- evaluation -----------------------------------------------------------


def eval_expr(e: Expr, point, order: int = 2) -> jets.Jet:
    """Evaluate a parsed expression as a jet at ``point``.

    Evaluation is recursive and strictly left-to-right; domain failures
    propagate as :class:`DomainError` tagged with the innermost failing
    subexpression and the evaluation point.
    """
    p = tuple(float(c) for c in point)
    if order not in (0, 1, 2):
        raise ValueError("jet order must be 0, 1 or 2")
    cache: dict[int, jets.Jet] = {}
    try:
        return _eval_node(e, p, order, cache)
    except DomainError as err:
        if err.point is None:
            err.point = p
        raise


def _tag(err: DomainError, node: Expr) -> None:
    if err.path is None:
        err.path = print_expression(node)


def _eval_node(e: Expr, p, order: int, cache) -> jets.Jet:
    if isinstance(e, Literal):
        return jets.constant(e.value, len(p), order)
    if isinstance(e, Variable):
        j = cache.get(e.index)
        if j is None:
            j = jets.coordinate(e.index, p, order)
            cache[e.index] = j
        return j
    if isinstance(e, Neg):
        return -_eval_node(e.operand, p, order, cache)
    if isinstance(e, Binary):
        left = _eval_node(e.left, p, order, cache)
        if e.op == "^":
            lit = _literal_value(e.right)
            try:
                if lit is not None:
                    return left**lit
                return left ** _eval_node(e.right, p, order, cache)
            except DomainError as err:
                _tag(err, e)
                raise
        right = _eval_node(e.right, p, order, cache)
        try:
            if e.op == "+":
                return left + right
            if e.op == "-":
                return left - right
            if e.op == "*":
                return left * right
            if e.op == "/":
                return left / right
        except DomainError as err:
            _tag(err, e)
            raise
        raise ValueError(f"unknown operator '{e.op}'")
    if isinstance(e, Call):
        arg = _eval_node(e.arg, p, order, cache)
        try:
            return jets.apply_function(arg, e.func)
        except DomainError as err:
            _tag(err, e)
            raise
    raise TypeError(f"not an expression node: {e!r}")

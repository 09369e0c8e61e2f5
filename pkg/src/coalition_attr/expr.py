"""Small arithmetic-expression language for defining models on the CLI.

Grammar: variables x1..xd, numeric literals, unary minus, + - * /, and
integer powers via ^. Precedence ^ > unary minus > * / > + -, binaries
left-associative, ^ right-associative. Exponents must be nonnegative
integer literals. All errors carry a byte offset into the source.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional, Union


class ExprError(ValueError):
    """Parse or evaluation failure with a source position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at offset {pos})")
        self.pos = pos


@dataclass(frozen=True)
class Lit:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exp: int  # nonnegative integer


Expr = Union[Lit, Var, Neg, Bin, Pow]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+)"
    r"|(?P<var>x\d+)"
    r"|(?P<op>[-+*/^()]))"
)

_BIN_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_RBP = 30  # between mul and pow


@dataclass(frozen=True)
class _Tok:
    kind: str  # num | var | op | end
    text: str
    pos: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    i = 0
    while i < len(src):
        m = _TOKEN.match(src, i)
        if m is None:
            # skip leading whitespace to point at the offending byte
            j = i
            while j < len(src) and src[j].isspace():
                j += 1
            if j == len(src):
                break
            raise ExprError(f"unexpected character {src[j]!r}", j)
        if m.lastgroup == "num":
            toks.append(_Tok("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "var":
            toks.append(_Tok("var", m.group("var"), m.start("var")))
        else:
            toks.append(_Tok("op", m.group("op"), m.start("op")))
        i = m.end()
    toks.append(_Tok("end", "", len(src)))
    return toks


class _Parser:
    def __init__(self, toks: list[_Tok], d: int):
        self.toks = toks
        self.i = 0
        self.d = d

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.cur
        self.i += 1
        return t

    def parse(self) -> Expr:
        e = self.expression(0)
        if self.cur.kind != "end":
            raise ExprError(f"unexpected {self.cur.text!r}", self.cur.pos)
        return e

    def expression(self, rbp: int) -> Expr:
        left = self.nud(self.advance())
        while self.cur.kind == "op" and _BIN_LBP.get(self.cur.text, -1) > rbp:
            left = self.led(self.advance(), left)
        return left

    def nud(self, t: _Tok) -> Expr:
        if t.kind == "num":
            val = float(t.text)
            if not math.isfinite(val):
                raise ExprError("numeric literal overflows a double", t.pos)
            return Lit(val)
        if t.kind == "var":
            k = int(t.text[1:])
            if not (1 <= k <= self.d):
                raise ExprError(f"variable {t.text} out of range 1..{self.d}", t.pos)
            return Var(k - 1)
        if t.kind == "op" and t.text == "-":
            return Neg(self.expression(_UNARY_RBP))
        if t.kind == "op" and t.text == "(":
            e = self.expression(0)
            if not (self.cur.kind == "op" and self.cur.text == ")"):
                raise ExprError("expected ')'", self.cur.pos)
            self.advance()
            return e
        if t.kind == "end":
            raise ExprError("unexpected end of input", t.pos)
        raise ExprError(f"unexpected {t.text!r}", t.pos)

    def led(self, t: _Tok, left: Expr) -> Expr:
        if t.text == "^":
            # right-assoc; exponent must be a nonnegative integer literal
            rhs_tok = self.cur
            rhs = self.expression(_BIN_LBP["^"] - 1)
            if not isinstance(rhs, Lit) or rhs.value != int(rhs.value) or rhs.value < 0:
                raise ExprError("exponent must be a nonnegative integer literal", rhs_tok.pos)
            return Pow(left, int(rhs.value))
        return Bin(t.text, left, self.expression(_BIN_LBP[t.text]))


def parse(src: str, d: int) -> Expr:
    """Parse an expression over variables x1..xd. Raises ExprError."""
    return _Parser(_tokenize(src), d).parse()


def to_str(e: Expr) -> str:
    """Fully parenthesized rendering; parses back to an equivalent tree."""
    if isinstance(e, Lit):
        # negative literals only arise in programmatic trees
        return f"(-{-e.value!r})" if e.value < 0 else repr(e.value)
    if isinstance(e, Var):
        return f"x{e.index + 1}"
    if isinstance(e, Neg):
        return f"(-{to_str(e.arg)})"
    if isinstance(e, Pow):
        return f"({to_str(e.base)}^{e.exp})"
    return f"({to_str(e.left)} {e.op} {to_str(e.right)})"


def evaluate(e: Expr, point) -> float:
    """Evaluate at a real point; division by zero and overflow are errors."""

    def rec(node: Expr) -> float:
        if isinstance(node, Lit):
            return node.value
        if isinstance(node, Var):
            return float(point[node.index])
        if isinstance(node, Neg):
            return -rec(node.arg)
        if isinstance(node, Pow):
            out = rec(node.base) ** node.exp
            if not math.isfinite(out):
                raise ExprError("non-finite intermediate value", 0)
            return out
        a, b = rec(node.left), rec(node.right)
        if node.op == "+":
            out = a + b
        elif node.op == "-":
            out = a - b
        elif node.op == "*":
            out = a * b
        else:
            if b == 0:
                raise ExprError("division by zero", 0)
            out = a / b
        if not math.isfinite(out):
            raise ExprError("non-finite intermediate value", 0)
        return out

    return rec(e)


def monomials(e: Expr, d: int) -> Optional[dict[tuple[int, ...], float]]:
    """Expanded normal form as exponent-vector -> coefficient, like terms
    merged; None when the tree is not a polynomial (division by a
    non-constant or by zero)."""
    zero = tuple([0] * d)

    def mul(p, q):
        out: dict[tuple[int, ...], float] = {}
        for ea, ca in p.items():
            for eb, cb in q.items():
                key = tuple(a + b for a, b in zip(ea, eb))
                out[key] = out.get(key, 0.0) + ca * cb
        return out

    def rec(node: Expr):
        if isinstance(node, Lit):
            return {zero: node.value}
        if isinstance(node, Var):
            key = tuple(1 if i == node.index else 0 for i in range(d))
            return {key: 1.0}
        if isinstance(node, Neg):
            p = rec(node.arg)
            return None if p is None else {k: -v for k, v in p.items()}
        if isinstance(node, Pow):
            p = rec(node.base)
            if p is None:
                return None
            out = {zero: 1.0}
            for _ in range(node.exp):
                out = mul(out, p)
            return out
        p, q = rec(node.left), rec(node.right)
        if p is None or q is None:
            return None
        if node.op == "+":
            out = dict(p)
            for k, v in q.items():
                out[k] = out.get(k, 0.0) + v
            return out
        if node.op == "-":
            out = dict(p)
            for k, v in q.items():
                out[k] = out.get(k, 0.0) - v
            return out
        if node.op == "*":
            return mul(p, q)
        # division: only by a nonzero constant
        if set(q) - {zero} or q.get(zero, 0.0) == 0.0:
            return None
        return {k: v / q[zero] for k, v in p.items()}

    out = rec(e)
    if out is None:
        return None
    return {k: v for k, v in out.items() if v != 0.0} or {zero: 0.0}


def degree(monos: dict[tuple[int, ...], float]) -> int:
    return max((sum(k) for k in monos), default=0)

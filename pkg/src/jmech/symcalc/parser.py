"""Recursive-descent parser for the Hamiltonian expression DSL.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | base ('^' uint)?
    base   := number | ident | ident '(' expr ')' | '(' expr ')'

Unary minus binds looser than ``^`` so ``-q1^2`` is ``-(q1^2)``.  Division
is accepted only by a nonzero constant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .expr import FUNCTIONS, Coord, Expr, atom_from_name

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
  | (?P<newline>\n)
    """,
    re.VERBOSE,
)

_PARAM_NAME = re.compile(r"^[A-Za-z_]+$")
_RESERVED = {"q", "p", "qd", "pd", "qdd", "pdd"}


class ParseError(ValueError):
    """Syntax or name error with a 1-based source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(source: str, line0: int = 1, col0: int = 1) -> list:
    toks = []
    pos, line, col = 0, line0, col0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "newline":
            line += 1
            col = 1
        else:
            if kind != "ws":
                toks.append(_Tok(kind, text, line, col))
            col += len(text)
        pos = m.end()
    toks.append(_Tok("end", "", line, col))
    return toks


class _Parser:
    def __init__(self, toks, m, params):
        self.toks = toks
        self.i = 0
        self.m = m
        self.params = params

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def _error(self, message, tok=None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def _expect(self, text):
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self._error(f"expected {text!r}, found {found!r}")
        return self._advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise self._error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.text in ("+", "-"):
            op = self._advance().text
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.tok.text in ("*", "/"):
            op_tok = self._advance()
            rhs = self.factor()
            if op_tok.text == "*":
                e = e * rhs
            else:
                if not rhs.is_constant() or rhs.is_zero():
                    raise self._error("division only by a nonzero constant", op_tok)
                e = e / rhs
        return e

    def factor(self) -> Expr:
        if self.tok.text == "-":
            self._advance()
            return -self.factor()
        e = self.base()
        if self.tok.text == "^":
            self._advance()
            tok = self.tok
            if tok.kind != "number" or not tok.text.isdigit():
                raise self._error("exponent must be a non-negative integer")
            self._advance()
            e = e ** int(tok.text)
        return e

    def base(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self._advance()
            return Expr.const(Fraction(tok.text))
        if tok.text == "(":
            self._advance()
            e = self.expr()
            self._expect(")")
            return e
        if tok.kind == "ident":
            self._advance()
            return self._ident(tok)
        found = tok.text or "end of input"
        raise self._error(f"unexpected {found!r}")

    def _ident(self, tok: _Tok) -> Expr:
        name = tok.text
        if name in FUNCTIONS:
            if self.tok.text != "(":
                raise self._error(f"function {name} needs an argument", tok)
            self._advance()
            arg = self.expr()
            self._expect(")")
            try:
                return Expr.func(name, arg)
            except ValueError as err:
                raise self._error(str(err), tok) from None
        atom = atom_from_name(name)
        if isinstance(atom, Coord):
            if atom.kind != "t" and not 1 <= atom.index <= self.m:
                raise self._error(f"index of {name} out of range 1..{self.m}", tok)
            return Expr.coord(atom.kind, atom.index)
        if name in _RESERVED or not _PARAM_NAME.match(name):
            raise self._error(f"unknown identifier {name!r}", tok)
        if self.params is not None and name not in self.params:
            raise self._error(f"unknown identifier {name!r}", tok)
        return Expr.param(name)


def parse(source: str, m: int, params=None, *, line: int = 1, column: int = 1) -> Expr:
    """Parse DSL text into a normalized :class:`Expr`.

    ``params``, when given, is the set of admissible parameter names; any
    other bare identifier is rejected.  ``line``/``column`` offset the
    positions reported in :class:`ParseError`.
    """
    if m < 1:
        raise ValueError("dimension m must be positive")
    toks = _tokenize(source, line, column)
    return _Parser(toks, m, None if params is None else set(params)).parse()

"""Normalized polynomial expressions over phase coordinates.

An :class:`Expr` is stored directly in normal form: a sum of monomials, each
monomial a sorted tuple of ``(atom, power)`` pairs.  Atoms are coordinates
(``t``, ``q``, ``p`` and their dotted variants), named parameters, and the
coefficient functions ``sin``/``cos``/``exp`` of an expression free of phase
coordinates.  Coefficients are kept exact (:class:`fractions.Fraction`) until
a float enters the computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Iterable, Mapping, Union

# coordinate kinds in canonical order; "t" carries index 0
KINDS = ("t", "q", "p", "qd", "pd", "qdd", "pdd")
PHASE_KINDS = frozenset(KINDS[1:])
FUNCTIONS = ("sin", "cos", "exp")

Coeff = Union[Fraction, float]

SYMBOLIC_TOL = 1e-12


@dataclass(frozen=True, order=True)
class Coord:
    kind: str
    index: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coordinate kind {self.kind!r}")
        if self.kind == "t":
            if self.index != 0:
                raise ValueError("time coordinate carries no index")
        elif self.index < 1:
            raise ValueError(f"coordinate index must be >= 1, got {self.index}")

    @property
    def name(self) -> str:
        return "t" if self.kind == "t" else f"{self.kind}{self.index}"

    def sort_key(self):
        return (0, KINDS.index(self.kind), self.index)


@dataclass(frozen=True, order=True)
class Param:
    name: str

    def sort_key(self):
        return (1, self.name)


@dataclass(frozen=True)
class Func:
    """``name(arg)`` with ``arg`` free of phase coordinates."""

    name: str
    arg: "Expr"

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")
        bad = [c.name for c in self.arg.coords() if c.kind != "t"]
        if bad:
            raise ValueError(
                f"{self.name}() may only depend on t and parameters, got {', '.join(bad)}"
            )

    def sort_key(self):
        return (2, self.name, self.arg.sort_key())


Atom = Union[Coord, Param, Func]
Monomial = tuple  # tuple[tuple[Atom, int], ...], sorted by atom key


def _atom_key(item):
    return item[0].sort_key()


def _mono_key(mono: Monomial):
    degree = sum(e for _, e in mono)
    return (degree, tuple((a.sort_key(), e) for a, e in mono))


def _as_coeff(value) -> Coeff:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Real):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError("non-finite coefficient")
        return value
    raise TypeError(f"cannot use {type(value).__name__} as a coefficient")


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    powers: dict = {}
    for atom, e in a + b:
        powers[atom] = powers.get(atom, 0) + e
    return tuple(sorted(powers.items(), key=_atom_key))


class Expr:
    """Immutable polynomial over coordinate and parameter atoms, with functions of t as extra atoms.

    Equality is structural on the normal form; use :meth:`equiv` when float
    coefficients are involved.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Coeff] | None = None):
        clean = {}
        for mono, c in (terms or {}).items():
            if c != 0:
                clean[mono] = c
        self._terms = tuple(sorted(clean.items(), key=lambda kv: _mono_key(kv[0])))
        self._hash = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def const(cls, value) -> "Expr":
        return cls({(): _as_coeff(value)})

    @classmethod
    def coord(cls, kind: str, index: int = 0) -> "Expr":
        return cls({((Coord(kind, index), 1),): Fraction(1)})

    @classmethod
    def param(cls, name: str) -> "Expr":
        return cls({((Param(name), 1),): Fraction(1)})

    @classmethod
    def func(cls, name: str, arg: "Expr") -> "Expr":
        arg = _to_expr(arg)
        if arg.is_constant():
            value = float(arg.constant_value())
            if value == 0.0:
                return cls.const(0 if name == "sin" else 1)
            return cls.const(getattr(math, name)(value))
        return cls({((Func(name, arg), 1),): Fraction(1)})

    @classmethod
    def atom(cls, atom: Atom, power: int = 1) -> "Expr":
        if power == 0:
            return cls.const(1)
        return cls({((atom, power),): Fraction(1)})

    # -- views --------------------------------------------------------------

    @property
    def terms(self) -> tuple:
        """``((monomial, coeff), ...)`` in canonical order."""
        return self._terms

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for _, c in self._terms)

    def is_constant(self) -> bool:
        return all(not mono for mono, _ in self._terms)

    def constant_value(self) -> Coeff:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self._terms[0][1] if self._terms else Fraction(0)

    def atoms(self) -> set:
        out = set()
        for mono, _ in self._terms:
            for atom, _ in mono:
                out.add(atom)
                if isinstance(atom, Func):
                    out |= atom.arg.atoms()
        return out

    def coords(self) -> set:
        return {a for a in self.atoms() if isinstance(a, Coord)}

    def params(self) -> set:
        return {a.name for a in self.atoms() if isinstance(a, Param)}

    def coord_kinds(self) -> set:
        return {c.kind for c in self.coords()}

    def max_index(self) -> int:
        return max((c.index for c in self.coords()), default=0)

    def degree_in(self, kinds: Iterable[str]) -> int:
        """Largest total degree of any monomial in the given coordinate kinds."""
        kinds = set(kinds)
        best = 0
        for mono, _ in self._terms:
            d = sum(e for a, e in mono if isinstance(a, Coord) and a.kind in kinds)
            best = max(best, d)
        return best

    def sort_key(self):
        return tuple((_mono_key(m), float(c)) for m, c in self._terms)

    # -- equality -----------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, float, Fraction)):
            other = Expr.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._terms)
        return self._hash

    def equiv(self, other, tol: float = SYMBOLIC_TOL) -> bool:
        """Equality up to ``tol`` on every coefficient of the difference."""
        return (self - _to_expr(other)).is_zero(tol)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = _to_expr(other)
        acc = dict(self._terms)
        for mono, c in other._terms:
            acc[mono] = acc.get(mono, 0) + c
        return Expr(acc)

    __radd__ = __add__

    def __neg__(self):
        return Expr({m: -c for m, c in self._terms})

    def __sub__(self, other):
        return self + (-_to_expr(other))

    def __rsub__(self, other):
        return _to_expr(other) - self

    def __mul__(self, other):
        other = _to_expr(other)
        acc: dict = {}
        for ma, ca in self._terms:
            for mb, cb in other._terms:
                mono = _mono_mul(ma, mb)
                acc[mono] = acc.get(mono, 0) + ca * cb
        return Expr(acc)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _to_expr(other)
        if not other.is_constant() or other.is_zero():
            raise ZeroDivisionError("division only by nonzero constants")
        c = other.constant_value()
        inv = 1 / c if isinstance(c, float) else Fraction(1) / c
        return self * inv

    def __pow__(self, n):
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Expr.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def scale(self, c) -> "Expr":
        c = _as_coeff(c)
        return Expr({m: v * c for m, v in self._terms})

    # -- substitution / evaluation -------------------------------------------

    def subs(self, mapping: Mapping) -> "Expr":
        """Replace atoms (``Coord``/``Param``) by expressions.

        Keys may be atoms or atom names (``"q1"``, ``"w"``).
        """
        table = {}
        for key, value in mapping.items():
            table[_lookup_atom(key)] = _to_expr(value)
        if not table:
            return self
        out = Expr()
        for mono, c in self._terms:
            term = Expr.const(c)
            for atom, e in mono:
                if atom in table:
                    term = term * table[atom] ** e
                elif isinstance(atom, Func):
                    term = term * Expr.func(atom.name, atom.arg.subs(table)) ** e
                else:
                    term = term * Expr.atom(atom, e)
            out = out + term
        return out

    def evaluate(self, values: Mapping) -> float:
        """Numeric value; ``values`` maps atom names (or atoms) to numbers."""
        table = {}
        for key, v in values.items():
            table[_lookup_atom(key)] = v
        total = 0.0
        for mono, c in self._terms:
            term = float(c)
            for atom, e in mono:
                if isinstance(atom, Func):
                    x = getattr(math, atom.name)(atom.arg.evaluate(table))
                else:
                    try:
                        x = table[atom]
                    except KeyError:
                        name = atom.name
                        raise KeyError(f"no value for {name}") from None
                term *= x**e
            total += term
        return total

    # -- printing -----------------------------------------------------------

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for i, (mono, c) in enumerate(self._terms):
            neg = c < 0
            mag = -c if neg else c
            factors = [_fmt_atom(a, e) for a, e in mono]
            if mag != 1 or not factors:
                factors.insert(0, _fmt_coeff(mag))
            body = "*".join(factors)
            if i == 0:
                parts.append(("-" if neg else "") + body)
            else:
                parts.append((" - " if neg else " + ") + body)
        return "".join(parts)

    def __repr__(self):
        return f"Expr({str(self)!r})"


def _fmt_coeff(c: Coeff) -> str:
    if isinstance(c, float):
        return repr(c)
    if c.denominator == 1:
        return str(c.numerator)
    return f"({c.numerator}/{c.denominator})"


def _fmt_atom(atom: Atom, e: int) -> str:
    if isinstance(atom, Func):
        s = f"{atom.name}({atom.arg})"
    else:
        s = atom.name
    return s if e == 1 else f"{s}^{e}"


def _to_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Expr.const(value)


def _lookup_atom(key):
    if isinstance(key, (Coord, Param)):
        return key
    if isinstance(key, str):
        return atom_from_name(key)
    raise TypeError(f"cannot interpret {key!r} as an atom")


def atom_from_name(name: str):
    """``"q2"`` -> ``Coord("q", 2)``, ``"t"`` -> time, anything else a parameter."""
    if name == "t":
        return Coord("t")
    for kind in ("qdd", "pdd", "qd", "pd", "q", "p"):
        if name.startswith(kind) and name[len(kind):].isdigit():
            return Coord(kind, int(name[len(kind):]))
    return Param(name)


def coord(kind: str, index: int = 0) -> Expr:
    return Expr.coord(kind, index)


def const(value) -> Expr:
    return Expr.const(value)


def symbols(m: int):
    """Coordinate expressions ``(q, p, qd, pd, qdd, pdd)`` as lists of length m."""
    return tuple([Expr.coord(kind, k) for k in range(1, m + 1)] for kind in KINDS[1:])

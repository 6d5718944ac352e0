"""Partial derivatives and the vertical prolongation operators."""

from __future__ import annotations

from fractions import Fraction

from .expr import Coord, Expr, Func, _to_expr


def _as_coord(wrt) -> Coord:
    if isinstance(wrt, Coord):
        return wrt
    if isinstance(wrt, Expr):
        terms = wrt.terms
        if len(terms) == 1 and terms[0][1] == 1:
            mono = terms[0][0]
            if len(mono) == 1 and isinstance(mono[0][0], Coord) and mono[0][1] == 1:
                return mono[0][0]
        raise ValueError(f"{wrt} is not a coordinate")
    if isinstance(wrt, str):
        from .expr import atom_from_name

        atom = atom_from_name(wrt)
        if isinstance(atom, Coord):
            return atom
        raise ValueError(f"{wrt!r} is not a coordinate")
    raise TypeError(f"cannot differentiate with respect to {wrt!r}")


def _diff_atom(atom, x: Coord) -> Expr:
    if isinstance(atom, Coord):
        return Expr.const(1 if atom == x else 0)
    if isinstance(atom, Func):
        if x.kind != "t":
            return Expr()
        inner = diff(atom.arg, x)
        if inner.is_zero():
            return Expr()
        if atom.name == "sin":
            outer = Expr.func("cos", atom.arg)
        elif atom.name == "cos":
            outer = -Expr.func("sin", atom.arg)
        else:
            outer = Expr.func("exp", atom.arg)
        return outer * inner
    return Expr()  # parameters are constants


def diff(e: Expr, wrt) -> Expr:
    """Exact partial derivative of ``e`` with respect to a coordinate."""
    x = _as_coord(wrt)
    e = _to_expr(e)
    out: dict = {}
    result = Expr()
    for mono, c in e.terms:
        for i, (atom, power) in enumerate(mono):
            if isinstance(atom, Coord):
                if atom != x:
                    continue
                rest = list(mono)
                if power == 1:
                    del rest[i]
                else:
                    rest[i] = (atom, power - 1)
                key = tuple(rest)
                out[key] = out.get(key, 0) + c * power
            elif isinstance(atom, Func) and x.kind == "t":
                d_atom = _diff_atom(atom, x)
                if d_atom.is_zero():
                    continue
                rest = list(mono)
                if power == 1:
                    del rest[i]
                else:
                    rest[i] = (atom, power - 1)
                factor = Expr({tuple(rest): c * power})
                result = result + factor * d_atom
    return Expr(out) + result


def gradient(e: Expr, coords) -> list:
    return [diff(e, c) for c in coords]


def hessian(e: Expr, coords) -> list:
    first = gradient(e, coords)
    return [[diff(g, c) for c in coords] for g in first]


def _pairs(e: Expr, m: int | None, lower: str, upper: str):
    if m is None:
        m = e.max_index()
    return [(Coord(lower, k), Coord(upper, k)) for k in range(1, m + 1)]


def _check_kinds(e: Expr, allowed: set, op: str):
    bad = sorted(e.coord_kinds() - allowed)
    if bad:
        raise ValueError(f"{op}: argument may not contain coordinates of kind {', '.join(bad)}")


def vertical_prolong(e: Expr, m: int | None = None) -> Expr:
    """``sum_k (qd_k d/dq_k + pd_k d/dp_k) e`` for ``e`` on (t, q, p)."""
    e = _to_expr(e)
    _check_kinds(e, {"t", "q", "p"}, "vertical_prolong")
    if m is None:
        m = e.max_index()
    out = Expr()
    for k in range(1, m + 1):
        out = out + Expr.coord("qd", k) * diff(e, Coord("q", k))
        out = out + Expr.coord("pd", k) * diff(e, Coord("p", k))
    return out


def vertical_prolong2(e: Expr, m: int | None = None) -> Expr:
    """Second vertical prolongation, adding ``qdd d/dqd + pdd d/dpd`` terms."""
    e = _to_expr(e)
    _check_kinds(e, {"t", "q", "p", "qd", "pd"}, "vertical_prolong2")
    if m is None:
        m = e.max_index()
    out = Expr()
    for k in range(1, m + 1):
        out = out + Expr.coord("qd", k) * diff(e, Coord("q", k))
        out = out + Expr.coord("pd", k) * diff(e, Coord("p", k))
        out = out + Expr.coord("qdd", k) * diff(e, Coord("qd", k))
        out = out + Expr.coord("pdd", k) * diff(e, Coord("pd", k))
    return out


def split_H1_H2(system) -> tuple:
    """Split ``d_V2 d_V H`` into the Jacobi-field part and the deviation part.

    Returns ``(H1, H2)`` with ``H1 = qdd.dH/dq + pdd.dH/dp`` and
    ``H2 = (qd.d/dq + pd.d/dp)^2 H``.  ``H2`` is written in the dotted
    coordinates; :func:`to_deviation_coords` rewrites it in ``Q = sqrt2 qd``,
    ``P = sqrt2 pd``, where it equals ``1/2 (Q.d/dq + P.d/dp)^2 H``.
    """
    H, m = system.H, system.m
    h1 = Expr()
    for k in range(1, m + 1):
        h1 = h1 + Expr.coord("qdd", k) * diff(H, Coord("q", k))
        h1 = h1 + Expr.coord("pdd", k) * diff(H, Coord("p", k))
    v = Expr()
    for k in range(1, m + 1):
        v = v + Expr.coord("qd", k) * diff(H, Coord("q", k))
        v = v + Expr.coord("pd", k) * diff(H, Coord("p", k))
    h2 = Expr()
    for k in range(1, m + 1):
        h2 = h2 + Expr.coord("qd", k) * diff(v, Coord("q", k))
        h2 = h2 + Expr.coord("pd", k) * diff(v, Coord("p", k))
    return h1, h2


def to_deviation_coords(e: Expr) -> Expr:
    """Rewrite ``e(qd, pd)`` in ``Q = sqrt2 qd``, ``P = sqrt2 pd``.

    The result reuses the ``qd``/``pd`` symbols for ``Q``/``P``.  A monomial of
    total dotted degree ``d`` picks up ``2**(-d/2)``, which stays exact for even
    ``d``.
    """
    out = {}
    for mono, c in e.terms:
        d = sum(p for a, p in mono if isinstance(a, Coord) and a.kind in ("qd", "pd"))
        if d % 2 == 0:
            factor = Fraction(1, 2 ** (d // 2))
        else:
            factor = 2.0 ** (-d / 2)
        out[mono] = c * factor
    return Expr(out)

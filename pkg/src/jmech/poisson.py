"""The four Poisson brackets on V*Q, VV*Q and V^2V*Q, and their axiom checks.

Sign convention: ``{p, q} = +1`` for the base bracket, with every other
bracket following the same momentum-first pattern.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from enum import Enum

from .symcalc import Coord, Expr, diff

ADMITTED = {
    "base": {"t", "q", "p"},
    "vertical": {"t", "q", "p", "qd", "pd"},
    "alt": {"t", "q", "p", "qd", "pd"},
    "second": {"t", "q", "p", "qd", "pd", "qdd", "pdd"},
}


class BracketKind(str, Enum):
    BASE = "base"
    VERTICAL = "vertical"
    ALT = "alt"
    SECOND = "second"

    @property
    def admitted(self) -> set:
        return ADMITTED[self.value]


class BracketError(ValueError):
    pass


def _d(e, kind, k):
    return diff(e, Coord(kind, k))


def _term(f, g, upper, lower, k):
    # d^upper f d_lower g: upper is a momentum-like kind, lower a coordinate-like kind
    a = _d(f, upper, k)
    if a.is_zero():
        return Expr()
    b = _d(g, lower, k)
    if b.is_zero():
        return Expr()
    return a * b


def bracket(kind, f: Expr, g: Expr, m: int) -> Expr:
    """Poisson bracket ``{f, g}`` of the given kind on ``m`` degrees of freedom."""
    kind = BracketKind(kind)
    for e in (f, g):
        bad = e.coord_kinds() - kind.admitted
        if bad:
            raise BracketError(f"{kind.value} bracket does not admit coordinates {sorted(bad)}")
        if e.max_index() > m:
            raise BracketError(f"coordinate index {e.max_index()} exceeds m={m}")
    out = Expr()
    for k in range(1, m + 1):
        if kind is BracketKind.BASE:
            out = out + _term(f, g, "p", "q", k) - _term(g, f, "p", "q", k)
        elif kind is BracketKind.VERTICAL:
            # pd^k f d_k g + d^k f qd_k g - qd_k f d^k g - d_k f pd^k g
            out = out + _term(f, g, "pd", "q", k) + _term(f, g, "p", "qd", k)
            out = out - _term(g, f, "p", "qd", k) - _term(g, f, "pd", "q", k)
        elif kind is BracketKind.ALT:
            out = out + _term(f, g, "p", "q", k) - _term(g, f, "p", "q", k)
            out = out + _term(f, g, "pd", "qd", k) - _term(g, f, "pd", "qd", k)
        else:
            out = out + _term(f, g, "pdd", "q", k) + _term(f, g, "p", "qdd", k)
            out = out - _term(g, f, "p", "qdd", k) - _term(g, f, "pdd", "q", k)
            half = _term(f, g, "pd", "qd", k) - _term(g, f, "pd", "qd", k)
            out = out + half / 2
    return out


def coordinate_table(kind, m: int) -> dict:
    """Brackets of all coordinate pairs admitted by ``kind``, keyed by names."""
    kind = BracketKind(kind)
    kinds = [k for k in ("q", "p", "qd", "pd", "qdd", "pdd") if k in kind.admitted]
    coords = [Expr.coord(kd, i) for kd in kinds for i in range(1, m + 1)]
    names = [f"{kd}{i}" for kd in kinds for i in range(1, m + 1)]
    return {
        (a, b): bracket(kind, x, y, m)
        for a, x in zip(names, coords)
        for b, y in zip(names, coords)
    }


# -- random polynomials and axiom checks -------------------------------------------


def random_polynomial(rng: random.Random, kinds, m: int, max_degree: int = 3, max_terms: int = 4) -> Expr:
    """Sum of up to ``max_terms`` monomials with integer coefficients in [-3, 3]."""
    variables = [Expr.coord(kd, i) for kd in kinds for i in range(1, m + 1)]
    out = Expr()
    for _ in range(rng.randint(1, max_terms)):
        degree = rng.randint(0, max_degree)
        mono = Expr.const(rng.randint(-3, 3))
        for _ in range(degree):
            mono = mono * rng.choice(variables)
        out = out + mono
    return out


@dataclass
class AxiomReport:
    kind: str
    trials: int
    seed: int
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _record(report, f, g, h, law, residual, tol):
    if not residual.is_zero(tol):
        report.failures.append(
            {"f": str(f), "g": str(g), "h": str(h), "law": law, "residual_expr": str(residual)}
        )


def check_axioms(kind, trials: int, seed: int, m: int, tol: float = 0.0) -> AxiomReport:
    """Check antisymmetry, bilinearity, Leibniz and Jacobi on random triples.

    Every check is a symbolic identity: the residual must normalize to the
    zero polynomial (exactly, unless ``tol`` is given for float inputs).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    kind = BracketKind(kind)
    rng = random.Random(seed)
    kinds = [k for k in ("q", "p", "qd", "pd", "qdd", "pdd") if k in kind.admitted]
    report = AxiomReport(kind.value, trials, seed)

    def br(a, b):
        return bracket(kind, a, b, m)

    for _ in range(trials):
        f, g, h = (random_polynomial(rng, kinds, m) for _ in range(3))
        a, b = rng.randint(-3, 3), rng.randint(-3, 3)
        fg, gh, hf = br(f, g), br(g, h), br(h, f)
        _record(report, f, g, h, "antisymmetry", fg + br(g, f), tol)
        _record(report, f, g, h, "bilinearity", br(f * a + g * b, h) - (br(f, h) * a + br(g, h) * b), tol)
        _record(report, f, g, h, "leibniz", br(f, g * h) - (fg * h + g * br(f, h)), tol)
        _record(report, f, g, h, "jacobi", br(f, gh) + br(g, hf) + br(h, fg), tol)
    return report


"""Hamiltonian systems, system files, numeric compilation and frame changes."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .calculus import diff, vertical_prolong
from .expr import Coord, Expr, Func, Param
from .parser import ParseError, parse


@dataclass(frozen=True)
class HamiltonianSystem:
    """A Hamiltonian ``H(t, q, p)`` on ``m`` degrees of freedom.

    Parameters stay symbolic in ``H``; ``params`` binds their numeric values.
    """

    m: int
    H: Expr
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be positive")
        bad = self.H.coord_kinds() - {"t", "q", "p"}
        if bad:
            raise ValueError(f"H may only depend on t, q, p (found {sorted(bad)})")
        if self.H.max_index() > self.m:
            raise ValueError(f"H uses index {self.H.max_index()} > m={self.m}")
        missing = self.H.params() - set(self.params)
        if missing:
            raise ValueError(f"unbound parameters: {', '.join(sorted(missing))}")
        object.__setattr__(self, "params", dict(self.params))

    @classmethod
    def from_string(cls, source: str, m: int, params: Mapping[str, float] | None = None):
        params = dict(params or {})
        return cls(m, parse(source, m, params.keys()), params)

    def __hash__(self):
        return hash((self.m, self.H, tuple(sorted(self.params.items()))))

    # -- symbolic caches ----------------------------------------------------

    @property
    def q(self) -> list:
        return [Coord("q", k) for k in range(1, self.m + 1)]

    @property
    def p(self) -> list:
        return [Coord("p", k) for k in range(1, self.m + 1)]

    @cached_property
    def dH_dq(self) -> list:
        return [diff(self.H, c) for c in self.q]

    @cached_property
    def dH_dp(self) -> list:
        return [diff(self.H, c) for c in self.p]

    @cached_property
    def hessian_blocks(self) -> tuple:
        """``(A, B, C)`` with ``A[j][k] = d2H/dq_j dp_k``, ``B = d2H/dq dq``, ``C = d2H/dp dp``."""
        A = [[diff(self.dH_dq[j], self.p[k]) for k in range(self.m)] for j in range(self.m)]
        B = [[diff(self.dH_dq[j], self.q[k]) for k in range(self.m)] for j in range(self.m)]
        C = [[diff(self.dH_dp[j], self.p[k]) for k in range(self.m)] for j in range(self.m)]
        return A, B, C

    @cached_property
    def H_V(self) -> Expr:
        return vertical_prolong(self.H, self.m)

    def is_quadratic(self) -> bool:
        return self.H.degree_in({"q", "p"}) <= 2

    def is_time_dependent(self) -> bool:
        return any(c.kind == "t" for c in self.H.coords())

    def is_separable(self) -> bool:
        """``H = T(p) + V(t, q)``: no monomial mixes p with q, t or coefficient functions."""
        for mono, _ in self.H.terms:
            has_p = any(isinstance(a, Coord) and a.kind == "p" for a, _ in mono)
            other = any(
                (isinstance(a, Coord) and a.kind in ("q", "t")) or isinstance(a, Func)
                for a, _ in mono
            )
            if has_p and other:
                return False
        return True

    def digest(self) -> str:
        text = f"{self.m}|{self.H}|{sorted(self.params.items())}"
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def evaluate(self, t: float, q: Sequence[float], p: Sequence[float]) -> float:
        return compile_scalar(self.H, self.m, self.params)(t, np.asarray(q, float), np.asarray(p, float))

    def to_text(self) -> str:
        lines = [f"dim = {self.m}"]
        for name, value in sorted(self.params.items()):
            lines.append(f"param {name} = {value!r}")
        lines.append(f"H = {self.H}")
        return "\n".join(lines) + "\n"


# -- system files --------------------------------------------------------------


def parse_system(text: str) -> HamiltonianSystem:
    """Parse the ``dim = / param x = / H =`` system file format."""
    m = None
    params: dict = {}
    h_src = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        stripped = line.strip()
        if "=" not in stripped:
            raise ParseError("expected 'key = value'", lineno, indent + 1)
        key, _, value = stripped.partition("=")
        key_s = key.strip()
        value_col = indent + len(key) + 2 + (len(value) - len(value.lstrip()))
        value = value.strip()
        if key_s == "dim":
            try:
                m = int(value)
            except ValueError:
                raise ParseError(f"dim must be an integer, got {value!r}", lineno, value_col) from None
            if m < 1:
                raise ParseError("dim must be positive", lineno, value_col)
        elif key_s.startswith("param"):
            name = key_s[len("param"):].strip()
            if not name or not name.replace("_", "a").isalpha():
                raise ParseError(f"bad parameter name {name!r}", lineno, indent + 1)
            try:
                params[name] = float(value)
            except ValueError:
                raise ParseError(f"parameter value must be a number, got {value!r}", lineno, value_col) from None
        elif key_s == "H":
            if m is None:
                raise ParseError("'dim' must precede 'H'", lineno, indent + 1)
            h_src = (value, lineno, value_col)
        else:
            raise ParseError(f"unknown key {key_s!r}", lineno, indent + 1)
    if m is None:
        raise ParseError("missing 'dim'", 1, 1)
    if h_src is None:
        raise ParseError("missing 'H'", 1, 1)
    src, lineno, col = h_src
    H = parse(src, m, params.keys(), line=lineno, column=col)
    return HamiltonianSystem(m, H, params)


def load_system(path) -> HamiltonianSystem:
    return parse_system(Path(path).read_text(encoding="utf-8"))


# -- numeric compilation -------------------------------------------------------


def _py(e: Expr, m: int, params: Mapping[str, float]) -> str:
    if not e.terms:
        return "0.0"
    parts = []
    for mono, c in e.terms:
        factors = [repr(float(c))]
        for atom, power in mono:
            if isinstance(atom, Coord):
                if atom.kind == "t":
                    s = "t"
                elif atom.kind == "q":
                    s = f"x[{atom.index - 1}]"
                elif atom.kind == "p":
                    s = f"x[{m + atom.index - 1}]"
                elif atom.kind == "qd":
                    s = f"x[{2 * m + atom.index - 1}]"
                elif atom.kind == "pd":
                    s = f"x[{3 * m + atom.index - 1}]"
                else:
                    raise ValueError(f"cannot compile {atom.name}")
            elif isinstance(atom, Param):
                s = repr(float(params[atom.name]))
            else:
                s = f"math.{atom.name}({_py(atom.arg, m, params)})"
            factors.append(s if power == 1 else f"{s}**{power}")
        parts.append("*".join(factors))
    return " + ".join(parts)


def compile_vector(exprs: Sequence[Expr], m: int, params: Mapping[str, float]):
    """Compile expressions to ``f(t, x) -> ndarray``.

    ``x`` is laid out as ``(q_1..q_m, p_1..p_m[, qd_1..qd_m, pd_1..pd_m])``.
    """
    body = ", ".join(_py(e, m, params) for e in exprs)
    src = f"def _f(t, x):\n    return _np.array([{body}], dtype=float)\n"
    ns = {"math": math, "_np": np}
    exec(compile(src, "<jmech-compiled>", "exec"), ns)
    return ns["_f"]


def compile_matrix(rows: Sequence[Sequence[Expr]], m: int, params: Mapping[str, float]):
    n_cols = len(rows[0]) if rows else 0
    flat = [e for row in rows for e in row]
    f = compile_vector(flat, m, params)
    shape = (len(rows), n_cols)
    return lambda t, x: f(t, x).reshape(shape)


def compile_scalar(e: Expr, m: int, params: Mapping[str, float]):
    src = f"def _f(t, x):\n    return float({_py(e, m, params)})\n"
    ns = {"math": math}
    exec(compile(src, "<jmech-compiled>", "exec"), ns)
    f = ns["_f"]
    return lambda t, q, p: f(t, np.concatenate([np.atleast_1d(q), np.atleast_1d(p)]))


# -- frame changes ---------------------------------------------------------------


class FrameError(ValueError):
    pass


def _det(mat):
    n = len(mat)
    if n == 1:
        return mat[0][0]
    total = Expr()
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = mat[0][j] * _det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _adjugate(mat):
    n = len(mat)
    if n == 1:
        return [[Expr.const(1)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(mat) if k != i]
            cof = _det(minor)
            adj[j][i] = cof if (i + j) % 2 == 0 else -cof
    return adj


@dataclass(frozen=True)
class FrameChange:
    """Affine change of fiber coordinates ``q' = L(t) q + c(t)``.

    ``forward[j]`` is ``q'_{j+1}`` written in ``t`` and unprimed ``q``.  The
    inverse map ``q(t, q')`` (written with the same ``q`` symbols standing
    for ``q'``) is derived when ``det L`` is constant; otherwise supply
    ``inverse`` and it is checked numerically at ``check_times``.
    """

    m: int
    forward: tuple
    inverse: tuple | None = None
    params: Mapping[str, float] = field(default_factory=dict)
    check_times: tuple = (0.0, 0.5, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "forward", tuple(self.forward))
        if len(self.forward) != self.m:
            raise FrameError("need one forward map per coordinate")
        for f in self.forward:
            bad = f.coord_kinds() - {"t", "q"}
            if bad:
                raise FrameError(f"frame maps may only use t and q, found {sorted(bad)}")
            if f.degree_in({"q"}) > 1:
                raise FrameError("only affine-in-q frame changes are supported")
        if self.inverse is None:
            object.__setattr__(self, "inverse", self._derive_inverse())
        else:
            object.__setattr__(self, "inverse", tuple(self.inverse))
        self.check_invertible(self.check_times)

    @classmethod
    def from_strings(cls, sources, m, params=None, inverse=None, **kw):
        params = dict(params or {})
        fwd = [parse(s, m, params.keys()) for s in sources]
        inv = None if inverse is None else [parse(s, m, params.keys()) for s in inverse]
        return cls(m, tuple(fwd), None if inv is None else tuple(inv), params, **kw)

    @property
    def linear_part(self) -> list:
        return [[diff(f, Coord("q", k)) for k in range(1, self.m + 1)] for f in self.forward]

    @property
    def offset(self) -> list:
        zero = {Coord("q", k): 0 for k in range(1, self.m + 1)}
        return [f.subs(zero) for f in self.forward]

    def _derive_inverse(self):
        # parameters are numeric constants here, so fold them in first
        values = {Param(k): v for k, v in self.params.items()}
        L = [[e.subs(values) for e in row] for row in self.linear_part]
        det = _det(L)
        if not det.is_constant():
            raise FrameError("det of the linear part is not constant; pass the inverse map explicitly")
        d = det.constant_value()
        if abs(d) < 1e-14:
            raise FrameError("linear part is singular")
        inv_d = 1.0 / d if isinstance(d, float) else Fraction(1) / d
        adj = _adjugate(L)
        c = [e.subs(values) for e in self.offset]
        out = []
        for j in range(self.m):
            expr = Expr()
            for k in range(self.m):
                expr = expr + adj[j][k] * (Expr.coord("q", k + 1) - c[k])
            out.append(expr.scale(inv_d))
        return tuple(out)

    def linear_matrix(self, t: float) -> np.ndarray:
        values = {"t": t, **self.params}
        return np.array([[e.evaluate(values) for e in row] for row in self.linear_part])

    def check_invertible(self, times):
        for t in times:
            L = self.linear_matrix(t)
            if abs(np.linalg.det(L)) < 1e-12 * max(1.0, np.abs(L).max() ** self.m):
                raise FrameError(f"linear part of the frame change is singular at t={t}")
            if self.inverse is not None:
                vals = {"t": t, **self.params}
                Linv = np.array(
                    [[diff(e, Coord("q", k)).evaluate(vals) for k in range(1, self.m + 1)] for e in self.inverse]
                )
                if not np.allclose(Linv @ L, np.eye(self.m), atol=1e-10):
                    raise FrameError(f"inverse map does not invert the forward map at t={t}")

    def inverted(self) -> "FrameChange":
        return FrameChange(self.m, self.inverse, self.forward, self.params, self.check_times)


def frame_transform(system: HamiltonianSystem, fc: FrameChange) -> HamiltonianSystem:
    """Hamiltonian in the new frame: ``H'(t,q',p') = H(t,q,p) + p'_j d_t q'^j(t,q)``.

    Momenta transform as ``p'_j = sum_k (dq^k/dq'^j) p_k``, i.e. ``p = L^T p'``.
    """
    if fc.m != system.m:
        raise FrameError("frame change and system dimensions differ")
    m = system.m
    q_of = {Coord("q", k + 1): fc.inverse[k] for k in range(m)}
    L = fc.linear_part
    p_of = {}
    for k in range(m):
        acc = Expr()
        for j in range(m):
            acc = acc + L[j][k].subs(q_of) * Expr.coord("p", j + 1)
        p_of[Coord("p", k + 1)] = acc
    new_H = system.H.subs({**q_of, **p_of})
    for j in range(m):
        dq_dt = diff(fc.forward[j], Coord("t")).subs(q_of)
        new_H = new_H + Expr.coord("p", j + 1) * dq_dt
    params = {**system.params, **fc.params}
    return HamiltonianSystem(m, new_H, params)

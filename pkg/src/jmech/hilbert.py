"""Truncated Gaussian-Hermite representation of the prequantization algebra.

The Hilbert space is L2(R^2m) under the Gaussian measure
``pi^-m exp(-|x|^2 - |y|^2)``.  Each of the 2m axes (x^1..x^m, y_1..y_m)
carries the first N orthonormal Hermite polynomials; operators are sparse
Kronecker products of per-axis N x N matrices.  Truncation corrupts only the
top mode of each axis, so all identities are checked on the "clean" subspace
where every per-axis index is at most N - 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property, reduce
from itertools import permutations
from operator import add

import numpy as np
import scipy.sparse as sp

from .dynamics import PhasePoint, integrate, time_ordered_exp
from .linalg import expm
from .symcalc import Coord, Expr, Func, HamiltonianSystem, Param

GEN_KINDS = ("phi", "pi", "phidot", "pidot")


class HilbertError(ValueError):
    pass


class CaptureError(HilbertError):
    pass


@dataclass(frozen=True)
class HermiteBasis:
    N: int
    m: int = 1
    hbar: float = 1.0

    def __post_init__(self):
        if self.N < 4:
            raise HilbertError("N must be at least 4")
        if self.m not in (1, 2):
            raise HilbertError("only m = 1 and m = 2 are supported")
        if self.m == 2 and self.N > 16:
            raise HilbertError("m = 2 is limited to N <= 16")
        if not self.hbar > 0:
            raise HilbertError("hbar must be positive")

    @property
    def axes(self) -> int:
        return 2 * self.m

    @property
    def dim(self) -> int:
        return self.N**self.axes

    def axis_x(self, k: int) -> int:
        return k - 1

    def axis_y(self, k: int) -> int:
        return self.m + k - 1

    # -- per-axis matrices ------------------------------------------------------

    @cached_property
    def X(self) -> np.ndarray:
        """Multiplication by the coordinate: ``x h_n = sqrt((n+1)/2) h_{n+1} + sqrt(n/2) h_{n-1}``."""
        off = np.sqrt(np.arange(1, self.N) / 2.0)
        return np.diag(off, 1) + np.diag(off, -1)

    @cached_property
    def D(self) -> np.ndarray:
        """d/dx on coefficient vectors: ``h_n' = sqrt(2n) h_{n-1}``."""
        return np.diag(np.sqrt(2.0 * np.arange(1, self.N)), 1)

    @cached_property
    def quadrature(self) -> tuple:
        """Gauss-Hermite nodes and probability weights (2N nodes)."""
        x, w = np.polynomial.hermite.hermgauss(2 * self.N)
        return x, w / math.sqrt(math.pi)

    def hermite_values(self, x) -> np.ndarray:
        """Orthonormal Hermite polynomials ``h_0..h_{N-1}`` at ``x``, shape (len(x), N)."""
        x = np.asarray(x, float)
        H = np.empty(x.shape + (self.N,))
        H[..., 0] = 1.0
        H[..., 1] = math.sqrt(2.0) * x
        for n in range(1, self.N - 1):
            H[..., n + 1] = math.sqrt(2.0 / (n + 1)) * x * H[..., n] - math.sqrt(n / (n + 1)) * H[..., n - 1]
        return H

    def gram(self) -> np.ndarray:
        """Per-axis Gram matrix under the Gaussian weight, by quadrature."""
        x, w = self.quadrature
        H = self.hermite_values(x)
        return (H * w[:, None]).T @ H

    def gram_deviation(self) -> float:
        """Max deviation of the full tensor Gram matrix from the identity."""
        G = self.gram()
        if self.dim <= 4096:
            full = reduce(np.kron, [G] * self.axes)
            return float(np.abs(full - np.eye(self.dim)).max())
        eps = float(np.abs(G - np.eye(self.N)).max())
        return (1 + eps) ** self.axes - 1

    # -- tensor structure ----------------------------------------------------------

    def embed(self, op1d, axis: int) -> sp.csr_matrix:
        left = sp.identity(self.N**axis, format="csr")
        right = sp.identity(self.N ** (self.axes - axis - 1), format="csr")
        return sp.kron(sp.kron(left, sp.csr_matrix(op1d)), right, format="csr")

    @cached_property
    def clean_index(self) -> np.ndarray:
        """Flat indices whose per-axis indices are all <= N - 2."""
        idx = np.indices((self.N,) * self.axes).reshape(self.axes, -1)
        mask = np.all(idx <= self.N - 2, axis=0)
        return np.flatnonzero(mask)

    def to_dict(self) -> dict:
        return {"N": self.N, "m": self.m, "hbar": self.hbar}


@dataclass(frozen=True)
class OperatorMatrix:
    mat: sp.csr_matrix
    basis: HermiteBasis

    def __post_init__(self):
        object.__setattr__(self, "mat", sp.csr_matrix(self.mat, dtype=complex))

    def _other(self, other):
        if isinstance(other, OperatorMatrix):
            if other.basis != self.basis:
                raise HilbertError("operators live on different bases")
            return other.mat
        return None

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return OperatorMatrix(self.mat + other * sp.identity(self.basis.dim), self.basis)
        return OperatorMatrix(self.mat + o, self.basis)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1) * other

    def __neg__(self):
        return OperatorMatrix(-self.mat, self.basis)

    def __mul__(self, scalar):
        return OperatorMatrix(self.mat * complex(scalar), self.basis)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            if other.basis != self.basis:
                raise HilbertError("state and operator live on different bases")
            return StateVector(self.mat @ other.coeffs, self.basis)
        return OperatorMatrix(self.mat @ self._other(other), self.basis)

    @property
    def H(self) -> "OperatorMatrix":
        return OperatorMatrix(self.mat.conj().T, self.basis)

    def clean_block(self) -> sp.csr_matrix:
        idx = self.basis.clean_index
        return self.mat[idx][:, idx]

    def dense(self) -> np.ndarray:
        return self.mat.toarray()

    def to_json(self) -> str:
        d = self.dense()
        return json.dumps({"basis": self.basis.to_dict(), "re": d.real.tolist(), "im": d.imag.tolist()})


@dataclass(frozen=True)
class StateVector:
    coeffs: np.ndarray
    basis: HermiteBasis

    def __post_init__(self):
        c = np.asarray(self.coeffs, complex)
        if c.shape != (self.basis.dim,):
            raise HilbertError("state length does not match the basis")
        if not np.all(np.isfinite(c)):
            raise HilbertError("non-finite state coefficients")
        object.__setattr__(self, "coeffs", c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def inner(self, other: "StateVector") -> complex:
        return complex(np.vdot(other.coeffs, self.coeffs))

    def cosine(self, other: "StateVector") -> float:
        return abs(np.vdot(self.coeffs, other.coeffs)) / (self.norm() * other.norm())

    def to_json(self) -> str:
        return json.dumps({"basis": self.basis.to_dict(), "re": self.coeffs.real.tolist(), "im": self.coeffs.imag.tolist()})


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return a @ b - b @ a


def _max_abs(m) -> float:
    if sp.issparse(m):
        return float(abs(m).max()) if m.nnz else 0.0
    return float(np.abs(m).max()) if m.size else 0.0


# -- generators ---------------------------------------------------------------------


@dataclass(frozen=True)
class Generators:
    phi: tuple
    pi: tuple
    phidot: tuple
    pidot: tuple
    id: OperatorMatrix

    def named(self) -> dict:
        out = {}
        for fam in GEN_KINDS:
            for k, op in enumerate(getattr(self, fam), start=1):
                out[f"{fam}{k}"] = op
        out["I"] = self.id
        return out


def build_generators(basis: HermiteBasis) -> Generators:
    """``phi = i hbar d/dy``, ``pi = -i hbar d/dx``, ``phidot = x``, ``pidot = y``."""
    hb = basis.hbar
    ms = range(1, basis.m + 1)
    phi = tuple(OperatorMatrix(1j * hb * basis.embed(basis.D, basis.axis_y(k)), basis) for k in ms)
    pi = tuple(OperatorMatrix(-1j * hb * basis.embed(basis.D, basis.axis_x(k)), basis) for k in ms)
    phidot = tuple(OperatorMatrix(basis.embed(basis.X, basis.axis_x(k)), basis) for k in ms)
    pidot = tuple(OperatorMatrix(basis.embed(basis.X, basis.axis_y(k)), basis) for k in ms)
    ident = OperatorMatrix(sp.identity(basis.dim, format="csr"), basis)
    return Generators(phi, pi, phidot, pidot, ident)


def expected_commutator(name_a: str, name_b: str, hbar: float) -> complex:
    """Coefficient of I in ``[a, b]`` per the prequantization table.

    ``[pi_k, phidot^j] = [pidot_k, phi^j] = -i hbar delta`` and every other
    pair of generators commutes.
    """

    def split(name):
        if name == "I":
            return "I", 0
        fam = name.rstrip("0123456789")
        return fam, int(name[len(fam):])

    fa, ka = split(name_a)
    fb, kb = split(name_b)
    if ka != kb:
        return 0j
    pairs = {("pi", "phidot"): -1j * hbar, ("pidot", "phi"): -1j * hbar}
    if (fa, fb) in pairs:
        return pairs[(fa, fb)]
    if (fb, fa) in pairs:
        return -pairs[(fb, fa)]
    return 0j


def _table_report(named: dict, basis: HermiteBasis) -> dict:
    names = list(named)
    dev = {}
    eye = sp.identity(len(basis.clean_index), format="csr")
    for a in names:
        for b in names:
            c = commutator(named[a], named[b]).clean_block()
            dev[f"[{a},{b}]"] = _max_abs(c - expected_commutator(a, b, basis.hbar) * eye)
    return {
        "basis": basis.to_dict(),
        "pairs": len(dev),
        "max_deviation": max(dev.values()),
        "deviations": dev,
    }


def commutator_check(basis: HermiteBasis) -> dict:
    """All ordered commutators among the generators and I, on the clean subspace."""
    return _table_report(build_generators(basis).named(), basis)


# -- eigenstates and Weyl operators ---------------------------------------------------


def plane_wave_coefficients(basis: HermiteBasis, kappa: float) -> np.ndarray:
    """Hermite coefficients of ``exp(i kappa x)`` by Gauss-Hermite quadrature."""
    x, w = basis.quadrature
    H = basis.hermite_values(x)
    return (H * (w * np.exp(1j * kappa * x))[:, None]).sum(axis=0)


def _axis_wavenumbers(basis: HermiteBasis, a, b) -> list:
    a = np.atleast_1d(np.asarray(a, float))
    b = np.atleast_1d(np.asarray(b, float))
    if a.shape != (basis.m,) or b.shape != (basis.m,):
        raise HilbertError("eigenvalue labels must have length m")
    return [bk / basis.hbar for bk in b] + [-ak / basis.hbar for ak in a]


def project_eigenstate(basis: HermiteBasis, a, b, min_capture: float = 1 - 1e-8):
    """Project ``f_{a,b} = exp[(i/hbar)(b.x - a.y)]`` onto the truncated basis.

    Returns ``(state, captured)`` where ``captured`` is the fraction of the
    Gaussian-measure norm (which is 1) retained by the projection.
    """
    per_axis = [plane_wave_coefficients(basis, kap) for kap in _axis_wavenumbers(basis, a, b)]
    captured = float(np.prod([np.sum(np.abs(c) ** 2) for c in per_axis]))
    if captured < min_capture:
        raise CaptureError(
            f"projection keeps only {captured:.12f} of the norm; increase N or shrink |a|, |b|"
        )
    return StateVector(reduce(np.kron, per_axis), basis), captured


def eigen_residuals(basis: HermiteBasis, state: StateVector, a, b, gens: Generators | None = None) -> dict:
    """``||phi v - a v|| / ||v||`` and ``||pi v - b v|| / ||v||`` per index."""
    gens = gens or build_generators(basis)
    a = np.atleast_1d(a)
    b = np.atleast_1d(b)
    out = {}
    nv = state.norm()
    for k in range(basis.m):
        out[f"phi{k + 1}"] = np.linalg.norm((gens.phi[k] @ state).coeffs - a[k] * state.coeffs) / nv
        out[f"pi{k + 1}"] = np.linalg.norm((gens.pi[k] @ state).coeffs - b[k] * state.coeffs) / nv
    return out


def _exp_multiplication(basis: HermiteBasis, coeffs) -> OperatorMatrix:
    """``exp(sum_a coeffs[a] * x_a)`` for commuting per-axis multiplications."""
    factors = []
    for c in coeffs:
        if c == 0:
            factors.append(sp.identity(basis.N, format="csr"))
        else:
            factors.append(sp.csr_matrix(expm(c * basis.X)))
    return OperatorMatrix(reduce(lambda u, v: sp.kron(u, v, format="csr"), factors), basis)


def weyl_operator(basis: HermiteBasis, which: str, amount, system: HamiltonianSystem | None = None, t: float = 0.0):
    """Weyl shift operators.

    ``shift_b``: ``exp((i/hbar) beta_k rdot^k(t))`` moves ``f_{a,b}`` to ``f_{a,b+beta}``;
    ``shift_a``: ``exp(-(i/hbar) alpha^k rdot_k(t))`` moves it to ``f_{a+alpha,b}``.
    At ``t != 0`` the Jacobi-field operators come from :func:`instant_operators`.
    """
    m = basis.m
    amount = np.atleast_1d(np.asarray(amount, float))
    if amount.shape != (m,):
        raise HilbertError("shift must have length m")
    if which not in ("shift_a", "shift_b"):
        raise HilbertError("which must be 'shift_a' or 'shift_b'")
    if t != 0.0:
        if system is None or not system.is_quadratic():
            raise HilbertError("Weyl operators at t != 0 need a quadratic system")
        E = classical_flow(system, t)[0]
    else:
        E = np.eye(2 * m)
    # rdot row = (phidot, pidot) E; phidot^j = x^j, pidot_j = y_j
    cols = range(m) if which == "shift_b" else range(m, 2 * m)
    sign = 1.0 if which == "shift_b" else -1.0
    coeffs = np.zeros(2 * m, dtype=complex)
    for amt, col in zip(amount, cols):
        coeffs += sign * 1j / basis.hbar * amt * E[:, col]
    return _exp_multiplication(basis, coeffs)


def weyl_function_overlap(basis: HermiteBasis, a, b, which: str, amount) -> complex:
    """Normalized quadrature overlap of ``R f_{a,b}`` with the shifted eigenstate.

    Works on function values at the quadrature nodes, not on truncated
    coefficients, so it checks the analytic identity ``R f_{a,b} = f_{a',b'}``.
    """
    a = np.atleast_1d(np.asarray(a, float))
    b = np.atleast_1d(np.asarray(b, float))
    amount = np.atleast_1d(np.asarray(amount, float))
    x, w = basis.quadrature
    hb = basis.hbar
    if which == "shift_b":
        mult = list(amount / hb) + [0.0] * basis.m
        a2, b2 = a, b + amount
    else:
        mult = [0.0] * basis.m + list(-amount / hb)
        a2, b2 = a + amount, b
    k1 = _axis_wavenumbers(basis, a, b)
    k2 = _axis_wavenumbers(basis, a2, b2)
    overlap = 1.0 + 0j
    for kap1, kap2, s in zip(k1, k2, mult):
        shifted = np.exp(1j * s * x) * np.exp(1j * kap1 * x)
        target = np.exp(1j * kap2 * x)
        ip = np.sum(w * shifted * np.conj(target))
        n1 = math.sqrt(np.sum(w * np.abs(shifted) ** 2))
        n2 = math.sqrt(np.sum(w * np.abs(target) ** 2))
        overlap *= ip / (n1 * n2)
    return complex(overlap)


# -- instant operators for quadratic systems ---------------------------------------------


def _require_quadratic(system: HamiltonianSystem):
    if not system.is_quadratic():
        raise HilbertError("instant operators need H of degree <= 2 in (q, p)")


def _steps_for(t: float, dt: float) -> int:
    return max(1, math.ceil(abs(t) / dt - 1e-9))


def classical_flow(system: HamiltonianSystem, t: float, dt: float = 1e-3, steps: int | None = None):
    """Affine flow ``x(t) = x(0) E(t) + g(t)`` of a quadratic system.

    ``E`` is the ordered exponential of the (state-independent) transition
    matrix and ``g`` the solution started at the origin.
    """
    _require_quadratic(system)
    m = system.m
    if t < 0:
        raise HilbertError("instant operators are defined for t >= 0")
    if t == 0:
        return np.eye(2 * m), np.zeros(2 * m)
    steps = steps or _steps_for(t, dt)
    origin = PhasePoint(0.0, np.zeros(m), np.zeros(m))
    base = integrate(system, origin, t, t / steps)
    E = time_ordered_exp(system, base, t, n=steps)
    return E, base.base[-1].copy()


@dataclass(frozen=True)
class InstantOperators:
    t: float
    r: tuple  # (r^1..r^m, r_1..r_m)
    rdot: tuple  # (rdot^1..rdot^m, rdot_1..rdot_m)
    E: np.ndarray
    offset: np.ndarray

    def named(self) -> dict:
        m = len(self.r) // 2
        out = {}
        for fam, ops in (("phi", self.r[:m]), ("pi", self.r[m:]), ("phidot", self.rdot[:m]), ("pidot", self.rdot[m:])):
            for k, op in enumerate(ops, start=1):
                out[f"{fam}{k}"] = op
        return out


def instant_operators(system: HamiltonianSystem, basis: HermiteBasis, t: float, dt: float = 1e-3, steps: int | None = None) -> InstantOperators:
    """``r(t) = (phi, pi) E(t) + g(t) I`` and ``rdot(t) = (phidot, pidot) E(t)``."""
    _require_quadratic(system)
    if system.m != basis.m:
        raise HilbertError("system and basis dimensions differ")
    E, g = classical_flow(system, t, dt, steps)
    gens = build_generators(basis)
    base_ops = list(gens.phi) + list(gens.pi)
    dot_ops = list(gens.phidot) + list(gens.pidot)
    dim = 2 * basis.m
    r, rdot = [], []
    for col in range(dim):
        r.append(reduce(add, [E[row, col] * base_ops[row] for row in range(dim)], g[col] * gens.id))
        rdot.append(reduce(add, [E[row, col] * dot_ops[row] for row in range(dim)]))
    return InstantOperators(t, tuple(r), tuple(rdot), E, g)


def instant_commutator_check(system: HamiltonianSystem, basis: HermiteBasis, t: float, **kw) -> dict:
    ops = instant_operators(system, basis, t, **kw)
    named = ops.named()
    named["I"] = build_generators(basis).id
    report = _table_report(named, basis)
    report["t"] = t
    report["det_E"] = float(np.linalg.det(ops.E))
    return report


# -- prequantization of polynomials ---------------------------------------------------------


def prequantize(e: Expr, ops: dict, basis: HermiteBasis, t: float, params=None) -> OperatorMatrix:
    """Substitute operators for coordinates with symmetric ordering.

    ``ops`` maps coordinate names (``q1``, ``p1``, ``qd1``, ``pd1``) to
    operators.  Each monomial becomes the average over the distinct
    orderings of its operator factors; ``t``, parameters and coefficient
    functions are evaluated numerically.
    """
    params = dict(params or {})
    dim = basis.dim
    total = sp.csr_matrix((dim, dim), dtype=complex)
    for mono, c in e.terms:
        scalar = float(c)
        factors = []
        for atom, power in mono:
            if isinstance(atom, Coord) and atom.kind == "t":
                scalar *= t**power
            elif isinstance(atom, Coord):
                try:
                    factors += [ops[atom.name].mat] * power
                except KeyError:
                    raise HilbertError(f"no operator for {atom.name}") from None
            elif isinstance(atom, Param):
                scalar *= params[atom.name] ** power
            elif isinstance(atom, Func):
                scalar *= getattr(math, atom.name)(atom.arg.evaluate({"t": t, **params})) ** power
        if not factors:
            total = total + scalar * sp.identity(dim, format="csr")
            continue
        if len(factors) > 4:
            raise HilbertError("symmetric ordering is limited to monomials of degree <= 4")
        orders = set(permutations(range(len(factors))))
        acc = sp.csr_matrix((dim, dim), dtype=complex)
        for order in orders:
            acc = acc + reduce(lambda u, v: u @ v, [factors[i] for i in order])
        total = total + (scalar / len(orders)) * acc
    return OperatorMatrix(total, basis)


def vertical_hamiltonian_operator(system: HamiltonianSystem, basis: HermiteBasis, ops: InstantOperators) -> OperatorMatrix:
    """``d_V H (t, r(t), rdot(t))`` with symmetric ordering."""
    m = system.m
    table = {}
    for k in range(1, m + 1):
        table[f"q{k}"] = ops.r[k - 1]
        table[f"p{k}"] = ops.r[m + k - 1]
        table[f"qd{k}"] = ops.rdot[k - 1]
        table[f"pd{k}"] = ops.rdot[m + k - 1]
    return prequantize(system.H_V, table, basis, ops.t, system.params)


def evolution_residual(system: HamiltonianSystem, basis: HermiteBasis, t: float, dt_fd: float = 1e-5, dt: float = 1e-3) -> dict:
    """Residual of ``i hbar d_t r = [r, d_V H]`` for all 4m instant operators.

    The time derivative is a central difference with step ``dt_fd``; both
    neighbours use the same number of flow steps so the difference is smooth
    in ``t``.
    """
    _require_quadratic(system)
    if t - dt_fd < 0:
        raise HilbertError("need t >= dt_fd for the central difference")
    steps = _steps_for(t, dt)
    now = instant_operators(system, basis, t, steps=steps)
    fwd = instant_operators(system, basis, t + dt_fd, steps=steps)
    bwd = instant_operators(system, basis, t - dt_fd, steps=steps)
    HV = vertical_hamiltonian_operator(system, basis, now)
    hb = basis.hbar
    names = list(now.named())
    res = {}
    for name, op, op_f, op_b in zip(names, now.r + now.rdot, fwd.r + fwd.rdot, bwd.r + bwd.rdot):
        lhs = (op_f - op_b) * (1j * hb / (2 * dt_fd))
        rhs = commutator(op, HV)
        res[name] = _max_abs((lhs - rhs).clean_block())
    return {
        "t": t,
        "dt_fd": dt_fd,
        "basis": basis.to_dict(),
        "residuals": res,
        "max_residual": max(res.values()),
        "H_V_hermiticity_defect": hermiticity_report(basis, HV)["defect"],
    }


def hermiticity_report(basis: HermiteBasis, op: OperatorMatrix) -> dict:
    """``max |op - op^dagger|`` in the orthonormal (Gaussian) basis; diagnostic only."""
    if op.basis != basis:
        raise HilbertError("operator lives on a different basis")
    return {"defect": _max_abs(op.mat - op.mat.conj().T), "clean_defect": _max_abs((op - op.H).clean_block())}


def time_averaged_norm(state_at, n_nodes: int = 16) -> float:
    """``int ||f(t)||^2 pi^-1/2 exp(-t^2) dt`` by Gauss-Hermite quadrature in t.

    Time enters only as a sample grid; ``state_at(t)`` returns the
    :class:`StateVector` at each node.
    """
    x, w = np.polynomial.hermite.hermgauss(n_nodes)
    w = w / math.sqrt(math.pi)
    return float(sum(wi * state_at(ti).norm() ** 2 for ti, wi in zip(x, w)))

"""Hamilton equations with their vertical extension, and the Jacobi fields they drive.

State vectors are laid out as ``(q_1..q_m, p_1..p_m)`` and, for the
vertical-extended system, ``(q, p, qd, pd)``.  Jacobi fields use the row-vector
convention ``d/dt v = v M`` with ``v = (qd, pd)`` and

    M = [[A, -B], [C, -A^T]],  A = d2H/dq dp,  B = d2H/dq dq,  C = d2H/dp dp.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .linalg import expm
from .symcalc import HamiltonianSystem, compile_matrix, compile_vector, vertical_prolong

BLOWUP = 1e12
SCHEMES = ("rk4", "leapfrog")


class DynamicsError(RuntimeError):
    pass


class BlowUpError(DynamicsError):
    def __init__(self, t_last: float, t_fail: float):
        super().__init__(f"state left the finite range after t={t_last:.17g} (step to t={t_fail:.17g})")
        self.t_last = t_last
        self.t_fail = t_fail


class SpanError(DynamicsError):
    pass


@dataclass(frozen=True)
class PhasePoint:
    t: float
    q: tuple
    p: tuple
    qdot: tuple | None = None
    pdot: tuple | None = None

    def __post_init__(self):
        for name in ("q", "p", "qdot", "pdot"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(float(x) for x in np.atleast_1d(v)))
        if len(self.q) != len(self.p):
            raise ValueError("q and p must have the same length")
        if (self.qdot is None) != (self.pdot is None):
            raise ValueError("give both qdot and pdot or neither")
        if self.qdot is not None and not (len(self.qdot) == len(self.pdot) == len(self.q)):
            raise ValueError("vertical block must have length m")

    @property
    def m(self) -> int:
        return len(self.q)

    @property
    def vertical(self) -> bool:
        return self.qdot is not None

    def state(self) -> np.ndarray:
        parts = [self.q, self.p]
        if self.vertical:
            parts += [self.qdot, self.pdot]
        return np.concatenate([np.asarray(x, float) for x in parts])


@dataclass
class Trajectory:
    """Samples of a phase path on a uniform time grid."""

    times: np.ndarray
    states: np.ndarray
    m: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.states = np.asarray(self.states, float)
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("one state per time sample")
        if self.states.shape[1] not in (2 * self.m, 4 * self.m):
            raise ValueError("state width must be 2m or 4m")
        if len(self.times) > 1:
            steps = np.diff(self.times)
            if np.any(steps <= 0):
                raise ValueError("times must be strictly increasing")
            if np.ptp(steps) > 1e-12 * max(1.0, abs(self.times[-1])):
                raise ValueError("times must be uniformly spaced")

    @property
    def vertical(self) -> bool:
        return self.states.shape[1] == 4 * self.m

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def q(self):
        return self.states[:, : self.m]

    @property
    def p(self):
        return self.states[:, self.m : 2 * self.m]

    @property
    def base(self):
        return self.states[:, : 2 * self.m]

    @property
    def jacobi(self):
        if not self.vertical:
            raise ValueError("trajectory has no vertical block")
        return self.states[:, 2 * self.m :]

    @property
    def qdot(self):
        return self.jacobi[:, : self.m]

    @property
    def pdot(self):
        return self.jacobi[:, self.m :]

    def point(self, i: int) -> PhasePoint:
        m = self.m
        s = self.states[i]
        if self.vertical:
            return PhasePoint(self.times[i], s[:m], s[m : 2 * m], s[2 * m : 3 * m], s[3 * m :])
        return PhasePoint(self.times[i], s[:m], s[m : 2 * m])

    def header(self) -> list:
        m = self.m
        cols = ["t"] + [f"q{k}" for k in range(1, m + 1)] + [f"p{k}" for k in range(1, m + 1)]
        if self.vertical:
            cols += [f"qd{k}" for k in range(1, m + 1)] + [f"pd{k}" for k in range(1, m + 1)]
        return cols

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            for t, s in zip(self.times, self.states):
                w.writerow([f"{t:.17g}"] + [f"{x:.17g}" for x in s])

    @classmethod
    def read_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        width = len(header) - 1
        m = sum(1 for h in header if h.startswith("q") and h[1:].isdigit())
        data = np.array([[float(x) for x in r] for r in body]).reshape(-1, width + 1)
        return cls(data[:, 0], data[:, 1:], m)


# -- equations ------------------------------------------------------------------


def derive_hamilton_equations(system: HamiltonianSystem, extended: bool = False) -> list:
    """Right-hand sides ``d_t q = dH/dp``, ``d_t p = -dH/dq``.

    With ``extended=True`` the 4m-dimensional vertical-extended field is
    returned, adding ``d_t qd = d_V dH/dp`` and ``d_t pd = -d_V dH/dq``.
    """
    m = system.m
    field_ = list(system.dH_dp) + [-g for g in system.dH_dq]
    if extended:
        field_ += [vertical_prolong(g, m) for g in system.dH_dp]
        field_ += [-vertical_prolong(g, m) for g in system.dH_dq]
    return field_


def transition_matrix_exprs(system: HamiltonianSystem) -> list:
    A, B, C = system.hessian_blocks
    m = system.m
    rows = []
    for j in range(m):
        rows.append([A[j][k] for k in range(m)] + [-B[j][k] for k in range(m)])
    for j in range(m):
        rows.append([C[j][k] for k in range(m)] + [-A[k][j] for k in range(m)])
    return rows


@lru_cache(maxsize=64)
def _compiled(system: HamiltonianSystem):
    m = system.m
    f = compile_vector(derive_hamilton_equations(system), m, system.params)
    f_ext = compile_vector(derive_hamilton_equations(system, extended=True), m, system.params)
    M = compile_matrix(transition_matrix_exprs(system), m, system.params)
    return f, f_ext, M


@dataclass(frozen=True)
class TransitionMatrix:
    t: float
    M: np.ndarray

    def to_json(self) -> str:
        return json.dumps({"t": self.t, "rows": self.M.tolist()})


def transition_matrix(system: HamiltonianSystem, base_point: PhasePoint) -> TransitionMatrix:
    _, _, M = _compiled(system)
    x = np.concatenate([base_point.q, base_point.p])
    return TransitionMatrix(float(base_point.t), M(base_point.t, x))


def matrix_json(t: float, rows) -> str:
    return json.dumps({"t": float(t), "rows": np.asarray(rows).tolist()})


# -- integrators ------------------------------------------------------------------


def _grid(t0: float, t_end: float, dt: float):
    if not dt > 0:
        raise ValueError("dt must be positive")
    span = t_end - t0
    if span < 0:
        raise ValueError("t_end precedes the initial time")
    if span == 0:
        return np.array([t0]), 0.0
    n = max(1, math.ceil(span / dt - 1e-9))
    h = span / n
    return t0 + h * np.arange(n + 1), h


def _check(x, t_prev, t_next):
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOWUP:
        raise BlowUpError(t_prev, t_next)


def _rk4_step(f, t, x, h):
    k1 = f(t, x)
    k2 = f(t + h / 2, x + h / 2 * k1)
    k3 = f(t + h / 2, x + h / 2 * k2)
    k4 = f(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


class _Leapfrog:
    """Kick-drift-kick Stormer-Verlet for ``H = T(p) + V(t, q)`` and its tangent map."""

    def __init__(self, system: HamiltonianSystem):
        if not system.is_separable():
            raise DynamicsError("leapfrog needs a separable Hamiltonian H = T(p) + V(t, q)")
        m = system.m
        self.m = m
        self.dV = compile_vector(system.dH_dq, m, system.params)
        self.dT = compile_vector(system.dH_dp, m, system.params)
        _, B, C = system.hessian_blocks
        self.V2 = compile_matrix(B, m, system.params)
        self.T2 = compile_matrix(C, m, system.params)

    def _x(self, q, p):
        return np.concatenate([q, p])

    def step(self, t, x, h):
        m = self.m
        q, p = x[:m], x[m : 2 * m]
        p_half = p - h / 2 * self.dV(t, self._x(q, p))
        q1 = q + h * self.dT(t + h / 2, self._x(q, p_half))
        p1 = p_half - h / 2 * self.dV(t + h, self._x(q1, p_half))
        out = [q1, p1]
        if x.shape[0] == 4 * m:
            qd, pd = x[2 * m : 3 * m], x[3 * m :]
            pd_half = pd - h / 2 * self.V2(t, self._x(q, p)) @ qd
            qd1 = qd + h * self.T2(t + h / 2, self._x(q, p_half)) @ pd_half
            pd1 = pd_half - h / 2 * self.V2(t + h, self._x(q1, p_half)) @ qd1
            out += [qd1, pd1]
        return np.concatenate(out)


def integrate(system: HamiltonianSystem, x0: PhasePoint, t_end: float, dt: float, scheme: str = "rk4") -> Trajectory:
    """Integrate from ``x0`` to ``t_end``.

    The grid has ``ceil((t_end - t0) / dt)`` uniform steps, so its last sample
    is exactly ``t_end`` and the step actually used is at most ``dt``.  When
    ``x0`` carries a vertical block the 4m vertical-extended system is
    integrated.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if x0.m != system.m:
        raise ValueError("initial point dimension does not match the system")
    times, h = _grid(float(x0.t), float(t_end), dt)
    f, f_ext, _ = _compiled(system)
    rhs = f_ext if x0.vertical else f
    stepper = _Leapfrog(system).step if scheme == "leapfrog" else (lambda t, x, h_: _rk4_step(rhs, t, x, h_))
    states = np.empty((len(times), 4 * system.m if x0.vertical else 2 * system.m))
    x = x0.state()
    _check(x, times[0], times[0])
    states[0] = x
    for i in range(1, len(times)):
        x = stepper(times[i - 1], x, h)
        _check(x, times[i - 1], times[i])
        states[i] = x
    meta = {"system": system.digest(), "integrator": scheme, "dt": h}
    return Trajectory(times, states, system.m, meta)


def _hermite_mid(f, t0, x0, t1, x1):
    h = t1 - t0
    return 0.5 * (x0 + x1) + h / 8 * (f(t0, x0) - f(t1, x1))


def base_state_at(system: HamiltonianSystem, base: Trajectory, t: float) -> np.ndarray:
    """Base state at ``t`` by cubic Hermite interpolation between grid samples."""
    f, _, _ = _compiled(system)
    times = base.times
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise SpanError(f"t={t} outside the base span [{times[0]}, {times[-1]}]")
    if len(times) == 1:
        return base.base[0].copy()
    i = int(np.clip(np.searchsorted(times, t) - 1, 0, len(times) - 2))
    t0, t1 = times[i], times[i + 1]
    x0, x1 = base.base[i], base.base[i + 1]
    h = t1 - t0
    s = (t - t0) / h
    f0, f1 = f(t0, x0), f(t1, x1)
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * x0 + h10 * h * f0 + h01 * x1 + h11 * h * f1


def jacobi_integrate(system: HamiltonianSystem, base: Trajectory, j0, t_end: float | None = None) -> Trajectory:
    """Integrate the linear variational system along ``base``.

    ``j0 = (c, s)`` is the initial Jacobi field (``qd``, ``pd``).  The result
    is a vertical trajectory carrying the base samples and the field.  rk4
    bases use interpolated midpoint states; leapfrog bases use the exact
    tangent map of the leapfrog step.
    """
    m = system.m
    c, s = (np.atleast_1d(np.asarray(v, float)) for v in j0)
    if c.shape != (m,) or s.shape != (m,):
        raise ValueError("Jacobi initial data must have length m each")
    times = base.times
    if t_end is not None:
        if t_end > times[-1] + 1e-12 or t_end < times[0]:
            raise SpanError(f"requested t_end={t_end} outside the base span")
        times = times[times <= t_end + 1e-12]
    n = len(times)
    xs = base.base[:n]
    scheme = base.meta.get("integrator", "rk4")
    v = np.concatenate([c, s])
    out = np.empty((n, 2 * m))
    out[0] = v
    if scheme == "leapfrog":
        lf = _Leapfrog(system)
        for i in range(1, n):
            h = times[i] - times[i - 1]
            full = lf.step(times[i - 1], np.concatenate([xs[i - 1], v]), h)
            v = full[2 * m :]
            _check(v, times[i - 1], times[i])
            out[i] = v
    else:
        f, _, M = _compiled(system)
        for i in range(1, n):
            t0, t1 = times[i - 1], times[i]
            h = t1 - t0
            tm = t0 + h / 2
            M0 = M(t0, xs[i - 1])
            Mm = M(tm, _hermite_mid(f, t0, xs[i - 1], t1, xs[i]))
            M1 = M(t1, xs[i])
            k1 = v @ M0
            k2 = (v + h / 2 * k1) @ Mm
            k3 = (v + h / 2 * k2) @ Mm
            k4 = (v + h * k3) @ M1
            v = v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            _check(v, t0, t1)
            out[i] = v
    meta = dict(base.meta, jacobi="variational")
    return Trajectory(times, np.hstack([xs, out]), m, meta)


def time_ordered_exp(system: HamiltonianSystem, base: Trajectory, t: float, n: int | None = None) -> np.ndarray:
    """Ordered product ``exp(M(tau_0) D) exp(M(tau_1) D) ... exp(M(tau_{n-1}) D)``.

    ``tau_i`` are the midpoints of ``n`` uniform subintervals of
    ``[t0, t]``; ``n`` defaults to the number of base grid steps in that span.
    The row vector ``v(t0) E`` then approximates the Jacobi field at ``t``.
    """
    t0 = float(base.times[0])
    if t < t0 - 1e-12 or t > base.times[-1] + 1e-12:
        raise SpanError(f"t={t} outside the base span [{t0}, {base.times[-1]}]")
    dim = 2 * system.m
    if t <= t0:
        return np.eye(dim)
    if n is None:
        n = max(1, math.ceil((t - t0) / base.dt - 1e-9)) if base.dt > 0 else 1
    delta = (t - t0) / n
    _, _, M = _compiled(system)
    E = np.eye(dim)
    for i in range(n):
        tau = t0 + (i + 0.5) * delta
        E = E @ expm(M(tau, base_state_at(system, base, tau)) * delta)
    return E


def time_ordered_exp_grid(system: HamiltonianSystem, base: Trajectory) -> np.ndarray:
    """Running ordered products with one midpoint factor per grid step.

    Entry ``i`` equals ``time_ordered_exp(system, base, base.times[i])`` with
    its default factor count, computed in a single pass.
    """
    f, _, M = _compiled(system)
    times, xs = base.times, base.base
    dim = 2 * system.m
    out = np.empty((len(times), dim, dim))
    out[0] = np.eye(dim)
    for i in range(1, len(times)):
        t0, t1 = times[i - 1], times[i]
        mid = _hermite_mid(f, t0, xs[i - 1], t1, xs[i])
        out[i] = out[i - 1] @ expm(M(0.5 * (t0 + t1), mid) * (t1 - t0))
    return out


def jacobi_fd_oracle(
    system: HamiltonianSystem,
    x0: PhasePoint,
    j0,
    eps: float,
    t_end: float,
    dt: float,
    scheme: str = "rk4",
) -> Trajectory:
    """Finite-difference Jacobi field ``(x(x0 + eps j0) - x(x0)) / eps``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    c, s = (np.atleast_1d(np.asarray(v, float)) for v in j0)
    base0 = PhasePoint(x0.t, x0.q, x0.p)
    shifted = PhasePoint(x0.t, np.asarray(x0.q) + eps * c, np.asarray(x0.p) + eps * s)
    a = integrate(system, base0, t_end, dt, scheme)
    b = integrate(system, shifted, t_end, dt, scheme)
    field_ = (b.states - a.states) / eps
    meta = dict(a.meta, jacobi="finite-difference", eps=eps)
    return Trajectory(a.times, np.hstack([a.states, field_]), system.m, meta)


def energy(system: HamiltonianSystem, traj: Trajectory) -> np.ndarray:
    H = compile_vector([system.H], system.m, system.params)
    return np.array([H(t, x)[0] for t, x in zip(traj.times, traj.base)])

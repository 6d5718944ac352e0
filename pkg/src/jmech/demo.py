"""One-shot reproduction of the harmonic-oscillator formulas with a pass/fail table."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics, hilbert
from .symcalc import HamiltonianSystem, parse, split_H1_H2, to_deviation_coords


@dataclass
class Row:
    name: str
    value: float
    tol: float | None
    passed: bool | None

    def line(self) -> str:
        status = "info" if self.passed is None else ("PASS" if self.passed else "FAIL")
        tol = "-" if self.tol is None else ("exact" if self.tol == 0 else f"{self.tol:.0e}")
        return f"{status:4}  {self.name:<62} {self.value:12.3e}  tol {tol}"


def _exact(name, ok):
    return Row(name, 0.0 if ok else 1.0, 0.0, bool(ok))


def _row(name, value, tol):
    return Row(name, float(value), tol, None if tol is None else bool(value < tol))


def oscillator(omega: float = 1.0) -> HamiltonianSystem:
    return HamiltonianSystem.from_string("0.5*(p1^2 + w^2*q1^2)", 1, {"w": omega})


def run_demo(omega: float = 1.0, N: int = 32, hbar: float = 1.0, t_end: float = 10.0, dt: float = 1e-3) -> list:
    ho = oscillator(omega)
    w = omega
    rows = []

    f = dynamics.derive_hamilton_equations(ho)
    want = [parse("p1", 1), parse("-w^2*q1", 1, {"w"})]
    rows.append(_exact("Hamilton equations d_t q = p, d_t p = -w^2 q", f == want))
    hv = parse("pd1*p1 + w^2*qd1*q1", 1, {"w"})
    rows.append(_exact("vertical Hamiltonian H_V = pd p + w^2 qd q", ho.H_V == hv))
    _, h2 = split_H1_H2(ho)
    quad = parse("0.5*(p1^2 + w^2*q1^2)", 1, {"w"}).subs({"q1": parse("qd1", 1), "p1": parse("pd1", 1)})
    rows.append(_exact("H_2 in (Q, P) equals the oscillator Hamiltonian", to_deviation_coords(h2) == quad))

    q0, p0 = 0.3, -0.7
    traj = dynamics.integrate(ho, dynamics.PhasePoint(0.0, [q0], [p0]), t_end, dt)
    t = traj.times
    q_cf = q0 * np.cos(w * t) + p0 / w * np.sin(w * t)
    p_cf = -q0 * w * np.sin(w * t) + p0 * np.cos(w * t)
    rows.append(_row("classical solution q(t), p(t) vs closed form", max(abs(traj.q[:, 0] - q_cf).max(), abs(traj.p[:, 0] - p_cf).max()), 1e-8))

    c0, s0 = 1.0, 0.5
    jac = dynamics.jacobi_integrate(ho, traj, ([c0], [s0]))
    qd_cf = c0 * np.cos(w * t) + s0 / w * np.sin(w * t)
    pd_cf = -c0 * w * np.sin(w * t) + s0 * np.cos(w * t)
    rows.append(_row("Jacobi field vs closed form", max(abs(jac.qdot[:, 0] - qd_cf).max(), abs(jac.pdot[:, 0] - pd_cf).max()), 1e-8))

    basis = hilbert.HermiteBasis(N, 1, hbar)
    rows.append(_row("commutation relations [pi, phidot] = [pidot, phi] = -i hbar", hilbert.commutator_check(basis)["max_deviation"], 1e-10))

    a, b = 0.5, 0.3
    ebasis = hilbert.HermiteBasis(max(N, 40), 1, hbar)
    v, _ = hilbert.project_eigenstate(ebasis, [a], [b])
    worst = 0.0
    for tt in (0.0, 0.5, 1.0):
        ops = hilbert.instant_operators(ho, ebasis, tt)
        q_t = a * math.cos(w * tt) + b / w * math.sin(w * tt)
        p_t = -a * w * math.sin(w * tt) + b * math.cos(w * tt)
        for op, val in ((ops.r[0], q_t), (ops.r[1], p_t)):
            worst = max(worst, np.linalg.norm((op @ v).coeffs - val * v.coeffs) / v.norm())
    rows.append(_row("q(t), p(t) eigenvalues at f_{a,b} are classical values", worst, 1e-5))

    inst = hilbert.instant_commutator_check(ho, basis, 1.0)
    rows.append(_row("instant relations [pdot(t), q(t)] = -i hbar at t=1", inst["max_deviation"], 1e-8))
    evo = hilbert.evolution_residual(ho, basis, 0.7)
    rows.append(_row("evolution i hbar d_t r = [r, H_V] at t=0.7", evo["max_residual"], 1e-6))

    gens = hilbert.build_generators(basis)
    rows.append(_row("hermiticity defect of phidot (x)", hilbert.hermiticity_report(basis, gens.phidot[0])["defect"], 1e-12))
    rows.append(_row("hermiticity defect of pidot (y)", hilbert.hermiticity_report(basis, gens.pidot[0])["defect"], 1e-12))
    rows.append(_row("hermiticity defect of pi (-i hbar d/dx), reported", hilbert.hermiticity_report(basis, gens.pi[0])["defect"], None))
    rows.append(_row("hermiticity defect of prequantized H_V, reported", evo["H_V_hermiticity_defect"], None))
    return rows

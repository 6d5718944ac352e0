from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jmech.symcalc import (
    Coord,
    Expr,
    FrameChange,
    FrameError,
    HamiltonianSystem,
    ParseError,
    diff,
    frame_transform,
    parse,
    parse_system,
    split_H1_H2,
    to_deviation_coords,
    vertical_prolong,
    vertical_prolong2,
)

M = 2
BASE_ATOMS = [Coord(k, i) for k in ("q", "p") for i in range(1, M + 1)]


@st.composite
def base_polys(draw, max_terms=4, max_power=3):
    """Polynomials in (q, p) with small integer coefficients."""
    out = Expr()
    for _ in range(draw(st.integers(0, max_terms))):
        term = Expr.const(draw(st.integers(-4, 4)))
        for atom in BASE_ATOMS:
            power = draw(st.integers(0, max_power))
            if power:
                term = term * Expr.atom(atom, power)
        out = out + term
    return out


def _values(rng):
    return {a.name: rng.uniform(-1.5, 1.5) for a in BASE_ATOMS}


# -- parser ---------------------------------------------------------------------------


def test_parse_oscillator_matches_hand_built_expression():
    q, p, w = Expr.coord("q", 1), Expr.coord("p", 1), Expr.param("w")
    want = (p**2 + w**2 * q**2).scale(0.5)
    assert parse("0.5*(p1^2 + w^2*q1^2)", 1).equiv(want)


def test_parse_zero_is_zero():
    assert parse("0", 1).is_zero()


def test_parse_print_round_trip_mixed_indices():
    e = parse("q1*p2 + sin(t)", 2)
    assert parse(str(e), 2) == e


@given(base_polys())
def test_print_parse_round_trip(e):
    assert parse(str(e), M) == e


def test_unary_minus_binds_looser_than_power():
    assert parse("-q1^2", 1) == -(Expr.coord("q", 1) ** 2)


@pytest.mark.parametrize(
    "source, line, column",
    [
        ("q1 +\n  * p1", 2, 3),
        ("q3", 1, 1),
        ("q1/p1", 1, 3),
        ("sin(q1)", 1, 1),
        ("q1 + foo", 1, 6),
        ("(q1 + p1", 1, 9),
    ],
)
def test_parse_errors_carry_positions(source, line, column):
    with pytest.raises(ParseError) as info:
        parse(source, 2, params=set())
    assert (info.value.line, info.value.column) == (line, column)


def test_bare_reserved_names_rejected():
    with pytest.raises(ParseError):
        parse("q + p1", 1)


def test_system_file_round_trip():
    sysm = parse_system("# two dof\ndim = 2\nparam k = 3\nH = k*q1*q2 + p1^2\n")
    assert sysm.m == 2 and sysm.params == {"k": 3.0}
    assert parse_system(sysm.to_text()) == sysm


def test_system_file_error_reports_line():
    with pytest.raises(ParseError) as info:
        parse_system("dim = 1\nH = q1 +")
    assert info.value.line == 2


def test_system_rejects_dotted_coordinates():
    with pytest.raises((ParseError, ValueError)):
        parse_system("dim = 1\nH = qd1*p1")


# -- differentiation --------------------------------------------------------------------


def test_diff_oscillator_in_p():
    H = parse("0.5*(p1^2 + w^2*q1^2)", 1)
    assert diff(H, "p1") == parse("p1", 1)


def test_diff_constant_vanishes():
    assert diff(parse("7", 1), "q1").is_zero()


def test_diff_q2p_matches_finite_differences():
    e = parse("q1^2*p1", 1)
    d = diff(e, "q1")
    assert d == parse("2*q1*p1", 1)
    rng = random.Random(3)
    h = 1e-5
    for _ in range(20):
        q, p = rng.uniform(0.2, 2), rng.uniform(0.2, 2)
        fd = (e.evaluate({"q1": q + h, "p1": p}) - e.evaluate({"q1": q - h, "p1": p})) / (2 * h)
        exact = d.evaluate({"q1": q, "p1": p})
        assert abs(fd - exact) / abs(exact) < 1e-7


def test_diff_time_functions():
    e = parse("sin(2*t)*q1 + exp(t)", 1)
    assert diff(e, "t").equiv(parse("2*cos(2*t)*q1 + exp(t)", 1))


@given(base_polys(), st.sampled_from(BASE_ATOMS), st.sampled_from(BASE_ATOMS))
def test_partials_commute(e, a, b):
    assert diff(diff(e, a), b) == diff(diff(e, b), a)


@given(base_polys(max_terms=3), base_polys(max_terms=3), st.sampled_from(BASE_ATOMS))
def test_diff_product_rule(f, g, a):
    assert diff(f * g, a) == diff(f, a) * g + f * diff(g, a)


@given(base_polys(), st.sampled_from(BASE_ATOMS), st.integers(0, 10_000))
def test_diff_matches_central_difference(e, a, seed):
    vals = _values(random.Random(seed))
    h = 1e-5
    up, dn = dict(vals), dict(vals)
    up[a.name] += h
    dn[a.name] -= h
    fd = (e.evaluate(up) - e.evaluate(dn)) / (2 * h)
    exact = diff(e, a).evaluate(vals)
    assert abs(fd - exact) <= 1e-7 * max(1.0, abs(exact))


# -- vertical prolongations -------------------------------------------------------------


def test_prolong_oscillator():
    H = parse("0.5*(p1^2 + w^2*q1^2)", 1)
    assert vertical_prolong(H) == parse("pd1*p1 + w^2*qd1*q1", 1)


def test_prolong_constant_and_mixed():
    assert vertical_prolong(parse("3", 1)).is_zero()
    assert vertical_prolong(parse("q1*p2", 2)) == parse("qd1*p2 + pd2*q1", 2)


def test_prolong2_examples():
    H = parse("0.5*(p1^2 + w^2*q1^2)", 1)
    want = parse("pdd1*p1 + w^2*qdd1*q1 + pd1^2 + w^2*qd1^2", 1)
    assert vertical_prolong2(vertical_prolong(H)) == want
    assert vertical_prolong2(parse("0", 1)).is_zero()
    assert vertical_prolong2(parse("qd1", 1)) == parse("qdd1", 1)


def test_prolong_rejects_dotted_input():
    with pytest.raises(ValueError):
        vertical_prolong(parse("qd1", 1))


@given(base_polys(max_terms=3), base_polys(max_terms=3))
def test_prolong_is_a_derivation(f, g):
    assert vertical_prolong(f * g) == vertical_prolong(f) * g + f * vertical_prolong(g)


def _second_form(H, m):
    """(qdd d_q + pdd d_p) H + 1/2 (Q d_q + P d_p)^2 H with Q = sqrt2 qd, P = sqrt2 pd, expanded by hand."""
    first = Expr()
    for k in range(1, m + 1):
        first = first + Expr.coord("qdd", k) * diff(H, f"q{k}") + Expr.coord("pdd", k) * diff(H, f"p{k}")
    second = Expr()
    for j in range(1, m + 1):
        for k in range(1, m + 1):
            for u, du in (("qd", "q"), ("pd", "p")):
                for v, dv in (("qd", "q"), ("pd", "p")):
                    # 1/2 * sqrt2 * sqrt2 = 1
                    second = second + Expr.coord(u, j) * Expr.coord(v, k) * diff(diff(H, f"{du}{j}"), f"{dv}{k}")
    return first, second


@given(base_polys())
def test_prolong2_agrees_with_split_form(H):
    first, second = _second_form(H, M)
    assert vertical_prolong2(vertical_prolong(H, M), M) == first + second


@given(base_polys())
def test_split_sums_to_second_prolongation(H):
    sysm = HamiltonianSystem(M, H, {})
    h1, h2 = split_H1_H2(sysm)
    first, second = _second_form(H, M)
    assert h1 == first
    assert h2 == second
    assert h1 + h2 == vertical_prolong2(vertical_prolong(H, M), M)


def test_split_oscillator_in_deviation_coordinates():
    sysm = HamiltonianSystem.from_string("0.5*(p1^2 + w^2*q1^2)", 1, {"w": 1.3})
    _, h2 = split_H1_H2(sysm)
    assert to_deviation_coords(h2) == parse("0.5*(pd1^2 + w^2*qd1^2)", 1)


def test_split_linear_hamiltonian_has_no_quadratic_part():
    sysm = HamiltonianSystem.from_string("sin(t)*q1 + cos(t)*p1", 1)
    assert split_H1_H2(sysm)[1].is_zero()


def test_split_q2p():
    sysm = HamiltonianSystem.from_string("q1^2*p1", 1)
    h1, h2 = split_H1_H2(sysm)
    assert h1 == parse("2*qdd1*q1*p1 + pdd1*q1^2", 1)
    assert h2 == vertical_prolong2(sysm.H_V) - h1
    assert h2 == parse("2*qd1^2*p1 + 4*q1*qd1*pd1", 1)


# -- frame changes ----------------------------------------------------------------------


def test_boost_of_free_particle():
    free = HamiltonianSystem.from_string("0.5*p1^2", 1)
    fc = FrameChange.from_strings(["q1 - v*t"], 1, {"v": 0.7})
    new = frame_transform(free, fc)
    assert new.H.equiv(parse("0.5*p1^2 - v*p1", 1))
    from jmech.dynamics import derive_hamilton_equations

    assert derive_hamilton_equations(new)[0].equiv(parse("p1 - v", 1))


def test_boost_maps_trajectories():
    from jmech.dynamics import PhasePoint, integrate

    v = 0.7
    free = HamiltonianSystem.from_string("0.5*p1^2", 1)
    new = frame_transform(free, FrameChange.from_strings(["q1 - v*t"], 1, {"v": v}))
    a = integrate(free, PhasePoint(0.0, [0.2], [1.1]), 2.0, 1e-2)
    b = integrate(new, PhasePoint(0.0, [0.2], [1.1]), 2.0, 1e-2)
    np.testing.assert_allclose(b.q[:, 0], a.q[:, 0] - v * a.times, atol=1e-12)
    np.testing.assert_allclose(b.p, a.p, atol=1e-12)


def test_identity_frame_change():
    sysm = HamiltonianSystem.from_string("0.5*(p1^2 + p2^2) + q1*q2^2", 2)
    assert frame_transform(sysm, FrameChange.from_strings(["q1", "q2"], 2)).H == sysm.H


def test_rotation_has_no_extra_term():
    c, s = math.cos(0.4), math.sin(0.4)
    sysm = HamiltonianSystem.from_string("0.5*(p1^2 + p2^2) + q1^2 + 3*q2^2", 2)
    fc = FrameChange.from_strings(["c*q1 - s*q2", "s*q1 + c*q2"], 2, {"c": c, "s": s})
    new = frame_transform(sysm, fc)
    assert diff(new.H, "t").is_zero()
    # kinetic energy is rotation invariant
    x = {"q1": 0.3, "q2": -0.8, "p1": 0.5, "p2": 1.2, "c": c, "s": s}
    R = np.array([[c, -s], [s, c]])
    q = np.linalg.solve(R, [x["q1"], x["q2"]])
    p = R.T @ [x["p1"], x["p2"]]
    assert abs(new.H.evaluate(x) - sysm.evaluate(0.0, q, p)) < 1e-12


@given(
    st.lists(st.integers(-3, 3), min_size=4, max_size=4),
    st.lists(st.integers(-3, 3), min_size=2, max_size=2),
)
def test_frame_inverse_recovers_identity(entries, shift):
    L = np.array(entries, float).reshape(2, 2)
    if abs(np.linalg.det(L)) < 0.5:
        return
    fwd = [
        f"{entries[0]}*q1 + {entries[1]}*q2 + {shift[0]}*t",
        f"{entries[2]}*q1 + {entries[3]}*q2 + {shift[1]}",
    ]
    fc = FrameChange.from_strings(fwd, 2)
    back = {Coord("q", k + 1): fc.forward[k] for k in range(2)}
    for k in range(2):
        assert fc.inverse[k].subs(back).equiv(Expr.coord("q", k + 1))


def test_time_dependent_linear_part_needs_explicit_inverse():
    with pytest.raises(FrameError):
        FrameChange.from_strings(["exp(t)*q1"], 1)
    fc = FrameChange.from_strings(["exp(t)*q1"], 1, inverse=["exp(-t)*q1"])
    assert fc.inverse[0] == parse("exp(-t)*q1", 1)
    with pytest.raises(FrameError):
        FrameChange.from_strings(["exp(t)*q1"], 1, inverse=["q1"])


def test_singular_frame_rejected():
    with pytest.raises(FrameError):
        FrameChange.from_strings(["q1 + q2", "2*q1 + 2*q2"], 2)
